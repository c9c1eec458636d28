#pragma once

#include "cshield/mdp.hpp"
#include "cshield/shield.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cshield {

// Two states: s0 unsafe and absorbing, s1 initial. In s1, action a0 is a safe
// self-loop and a1 moves to s0 with probability lambda (else stays in s1).
// Always taking a1 meets the global safety bound with equality.
[[nodiscard]] ExplicitMdp build_worst_case(double lambda);

// Entrapment family. States: 0 unsafe (absorbing), 1..n a chain whose only
// action reaches state 0 with probability lambda + epsilon within n steps,
// n + 1 the initial state, n + 2 a safe absorbing sink. The initial state has
// a safe self-loop (a0) and a tempting action (a1) that enters the chain
// head with probability x = lambda / (lambda + epsilon), so sigma(a1) is
// exactly lambda and the shield admits it.
[[nodiscard]] ExplicitMdp build_entrapment(double lambda, double epsilon, std::size_t n);

// Mass entering stuck states after one step of the tempting action.
[[nodiscard]] double entrapment_stuck_probability(double lambda, double epsilon, std::size_t n);

struct Theorem1Report
{
    bool initially_safe = false;
    bool no_stuck = false;
    double lambda = 0.0;
    std::size_t lookahead = 0;
    std::size_t horizon = 0;
    double max_unsafe = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

// Max probability of reaching `unsafe` within `horizon` steps under any
// (time-varying) shielded controller, against 1 - (1 - lambda)^horizon.
// States with an empty shield keep all their actions.
[[nodiscard]] Theorem1Report verify_theorem1(const ExplicitMdp& m, const StateSet& unsafe, double lambda,
                                             std::size_t lookahead, std::size_t horizon);

// Model restricted to shielded actions (empty-shield states unrestricted).
[[nodiscard]] ExplicitMdp shield_restricted(const ExplicitMdp& m, const ShieldView& view);

// True iff an empty-shield, non-unsafe state is reachable from the initial
// state along shield-restricted transitions (unsafe states are not expanded).
[[nodiscard]] bool stuck_reachable(const ExplicitMdp& restricted, const StatePartition& partition);

struct LemmaResiduals
{
    std::size_t trials = 0;
    std::size_t max_horizon = 0;
    double occupancy = 0.0;     // step_occupancy vs path-enumerated marginals
    double absorbing = 0.0;     // unsafe-hit probability on m vs make_absorbing(m)
    double end_state = 0.0;     // hit probability vs end-state unsafe mass (absorbing model)

    [[nodiscard]] double max() const;
};

// Random memoryless policies, trial t seeded with seed + t; horizons 0..max_horizon.
[[nodiscard]] LemmaResiduals check_lemmas(const ExplicitMdp& m, const StateSet& unsafe, std::size_t trials,
                                          std::uint64_t seed, std::size_t max_horizon = 8);

struct RandomMdpOptions
{
    std::size_t min_states = 2;
    std::size_t max_states = 4;
    std::size_t actions = 2;
    std::size_t max_successors = 3;
    // Chance that an action row never touches the unsafe state.
    double safe_row_chance = 0.5;
};

// State 0 is the unsafe absorbing state (label "unsafe"), state 1 the initial state.
[[nodiscard]] ExplicitMdp random_mdp(std::mt19937_64& rng, const RandomMdpOptions& options = {});

struct Theorem1SweepRow
{
    double lambda = 0.0;
    std::size_t lookahead = 0;
    std::size_t horizon = 0;
    double max_unsafe = 0.0; // maximum over accepted models
    double bound = 0.0;
    bool pass = true;
};

struct Theorem1Sweep
{
    std::vector<Theorem1SweepRow> rows;
    std::size_t models_per_config = 0;
    std::size_t attempts = 0;      // random models drawn in total
    std::size_t short_configs = 0; // configurations that ran out of attempts

    [[nodiscard]] bool pass() const;
};

// For every (lambda, lookahead), draws seeded random models until `models`
// satisfy both theorem assumptions, then checks horizons 1..max_horizon.
[[nodiscard]] Theorem1Sweep theorem1_sweep(std::size_t models, std::uint64_t seed,
                                           const std::vector<double>& lambdas,
                                           const std::vector<std::size_t>& lookaheads, std::size_t max_horizon,
                                           std::size_t max_attempts = 100000);

} // namespace cshield
