#pragma once

#include "cshield/conformal.hpp"
#include "cshield/mdp.hpp"
#include "cshield/shield.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace cshield {

// Synthetic stand-in for a perception network over `classes` states.
struct PerceptionProfile
{
    double accuracy = 0.85;
    double sharpness = 1.5;
    // Likely mistake targets per true state; uniform over other classes if absent.
    std::map<StateId, std::vector<StateId>> confusion_bias;

    void validate(std::size_t classes) const;
};

// Argmax label is the true state with probability `accuracy`, otherwise a
// confusion target. Scores are softmax(sharpness * z) where z has standard
// normal entries and the label's entry is lifted above the rest. On a
// mistake the true state is lifted to second place.
[[nodiscard]] std::vector<double> gen_scores(const PerceptionProfile& profile, StateId true_state, std::size_t classes,
                                             std::mt19937_64& rng);

// Uniform-random-action rollouts emitting one sample per visited state among
// the first `classes` states; an episode ends at `horizon` steps or when it
// enters a state outside the class range or in `stop`.
[[nodiscard]] std::vector<ScoredSample> gen_calibration(const ExplicitMdp& perf, const PerceptionProfile& profile,
                                                        std::size_t classes, const StateSet& stop,
                                                        std::size_t episodes, std::size_t horizon,
                                                        std::uint64_t seed);

// Direct draws: `per_state` samples for each state in `states`, seeded per state.
[[nodiscard]] std::vector<ScoredSample> gen_samples(const PerceptionProfile& profile, std::size_t classes,
                                                    const StateSet& states, std::size_t per_state,
                                                    std::uint64_t seed);

enum class Outcome { fail, stuck, success };
enum class SimPolicy { random, safest };

[[nodiscard]] std::string to_string(Outcome o);
[[nodiscard]] std::string to_string(SimPolicy p);
[[nodiscard]] SimPolicy parse_sim_policy(const std::string& s);

struct StepRecord
{
    StateId actual = 0;
    StateSet predicted;
    std::vector<ActionId> allowed;
    ActionId chosen = 0;
    double sigma = 0.0;
};

struct EpisodeLog
{
    Outcome outcome = Outcome::success;
    std::size_t steps = 0;
    std::vector<StepRecord> records;
};

struct SimSummary
{
    SimPolicy policy = SimPolicy::random;
    double alpha = 0.0;
    double lambda = 0.0;
    std::size_t horizon = 0;
    std::size_t episodes = 0;
    double p_fail = 0.0;
    double p_stuck = 0.0;
    double p_success = 0.0;
    double se_fail = 0.0;
    double se_stuck = 0.0;
    double se_success = 0.0;
    double local_safety_fraction = 1.0;
};

struct RolloutOptions
{
    std::size_t episodes = 1000;
    std::size_t horizon = 30;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool keep_logs = false;
    // Perception by argmax point estimate instead of conformal sets.
    bool point_perception = false;
};

struct RolloutResult
{
    SimSummary summary;
    std::vector<EpisodeLog> logs; // empty unless keep_logs
};

// Each episode starts in the initial state with prediction set {initial}.
// A step picks an action from the lifted shield, samples the successor from
// perf, ends in fail if it is unsafe, otherwise draws a prediction set and
// ends in stuck if that set's lifted shield is empty.
[[nodiscard]] RolloutResult rollout(const ExplicitMdp& perf, const SigmaTable& st, double lambda,
                                    const ConformalModel& cm, const PerceptionProfile& profile, std::size_t classes,
                                    SimPolicy policy, const RolloutOptions& options);

// Fraction of logged steps with sigma(actual, chosen) <= lambda (1 if no steps).
[[nodiscard]] double local_safety_audit(const std::vector<EpisodeLog>& logs, double lambda);

} // namespace cshield
