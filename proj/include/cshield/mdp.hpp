#pragma once

#include "cshield/state_set.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cshield {

struct Transition
{
    StateId target;
    double probability;

    friend bool operator==(const Transition&, const Transition&) = default;
};

// One outcome distribution for a (state, action) pair. Successors are kept
// sorted by target and free of duplicates.
struct Choice
{
    ActionId action;
    std::vector<Transition> successors;
};

struct Diagnostic
{
    enum class Severity { error, warning };

    Severity severity = Severity::error;
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;

    // "severity:line:col: message"
    [[nodiscard]] std::string str() const;
};

[[nodiscard]] bool has_errors(std::span<const Diagnostic> diagnostics);

// Sparse MDP with named actions and labeled state sets.
class ExplicitMdp
{
public:
    ExplicitMdp() = default;
    ExplicitMdp(std::size_t state_count, std::vector<std::string> action_names, StateId initial);

    [[nodiscard]] std::size_t state_count() const { return choices_.size(); }
    [[nodiscard]] std::size_t action_count() const { return action_names_.size(); }
    [[nodiscard]] StateId initial() const { return initial_; }
    [[nodiscard]] const std::vector<std::string>& action_names() const { return action_names_; }
    [[nodiscard]] const std::string& action_name(ActionId a) const { return action_names_.at(a); }

    // Replaces the row for (s, a). Duplicate targets are merged, zero entries dropped.
    void set_choice(StateId s, ActionId a, std::vector<Transition> successors);
    void clear_choices(StateId s);

    // Ordered by action id.
    [[nodiscard]] std::span<const Choice> choices(StateId s) const { return choices_.at(s); }
    [[nodiscard]] const Choice* find_choice(StateId s, ActionId a) const;
    [[nodiscard]] std::vector<ActionId> available(StateId s) const;

    void set_label(const std::string& name, StateSet states) { labels_[name] = std::move(states); }
    [[nodiscard]] bool has_label(const std::string& name) const { return labels_.contains(name); }
    // Throws InputError for unknown labels.
    [[nodiscard]] const StateSet& label(const std::string& name) const;
    [[nodiscard]] const std::map<std::string, StateSet>& labels() const { return labels_; }

    // Optional per-state identifiers used when emitting models.
    void set_state_names(std::vector<std::string> names);
    [[nodiscard]] const std::vector<std::string>& state_names() const { return state_names_; }

    // States where every choice is a deterministic self-loop.
    [[nodiscard]] bool is_absorbing(StateId s) const;

private:
    std::vector<std::string> action_names_;
    StateId initial_ = 0;
    std::vector<std::vector<Choice>> choices_;
    std::map<std::string, StateSet> labels_;
    std::vector<std::string> state_names_;
};

// Row-stochasticity, probability ranges, initial state and label sanity.
// Problems are reported, never thrown.
[[nodiscard]] std::vector<Diagnostic> validate(const ExplicitMdp& m);

using OccupancyVector = std::vector<double>;

struct MemorylessPolicy
{
    std::vector<ActionId> choice;
};

enum class Optimize { max, min };

struct ReachVector
{
    std::vector<double> values;
    std::size_t horizon = 0;
    Optimize mode = Optimize::max;
    StateSet target;
};

// Optimal probability of visiting `target` within `horizon` steps, over
// time-varying policies, by backward induction.
[[nodiscard]] ReachVector bounded_reach(const ExplicitMdp& m, const StateSet& target, std::size_t horizon,
                                        Optimize mode);

// All backward-induction stages: result[k] is the value vector for horizon k,
// k = 0..horizon.
[[nodiscard]] std::vector<std::vector<double>> bounded_reach_stages(const ExplicitMdp& m, const StateSet& target,
                                                                    std::size_t horizon, Optimize mode);

// d'[s'] = sum_s P(s, policy(s), s') d[s]
[[nodiscard]] OccupancyVector step_occupancy(const ExplicitMdp& m, const MemorylessPolicy& policy,
                                             const OccupancyVector& d);

// Every available action of a frozen state becomes a deterministic self-loop.
[[nodiscard]] ExplicitMdp make_absorbing(const ExplicitMdp& m, const StateSet& freeze);

// Keeps only the policy's choice in every state.
[[nodiscard]] ExplicitMdp restrict_to_policy(const ExplicitMdp& m, const MemorylessPolicy& policy);

// Throws InputError unless policy.choice[s] is available in every state.
void check_policy(const ExplicitMdp& m, const MemorylessPolicy& policy);

inline constexpr std::size_t oracle_max_horizon = 12;
inline constexpr std::size_t oracle_max_states = 16;

// Brute-force sum over every length-`horizon` path from `start` under
// `policy` that visits `hit`. Throws ScaleLimitError beyond oracle scale.
[[nodiscard]] double enumerate_path_prob(const ExplicitMdp& m, const MemorylessPolicy& policy, StateId start,
                                         std::size_t horizon, const StateSet& hit);

// Brute-force end-state distribution after `horizon` steps.
[[nodiscard]] OccupancyVector enumerate_end_distribution(const ExplicitMdp& m, const MemorylessPolicy& policy,
                                                         StateId start, std::size_t horizon);

[[nodiscard]] OccupancyVector point_mass(std::size_t state_count, StateId s);

} // namespace cshield
