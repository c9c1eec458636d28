#pragma once

#include "cshield/mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cshield {

inline constexpr std::size_t default_lookahead = 5;

// Best-case probability of reaching the unsafe set within `lookahead` steps
// after taking an action: sigma(s, a) = sum_s' P(s, a, s') * vmin_n(s').
class SigmaTable
{
public:
    struct Entry
    {
        ActionId action;
        double sigma;
    };

    SigmaTable() = default;
    SigmaTable(std::size_t lookahead, StateSet unsafe, std::string unsafe_label, std::size_t state_count);

    [[nodiscard]] std::size_t lookahead() const { return lookahead_; }
    [[nodiscard]] const StateSet& unsafe() const { return unsafe_; }
    [[nodiscard]] const std::string& unsafe_label() const { return unsafe_label_; }
    [[nodiscard]] std::size_t state_count() const { return rows_.size(); }

    void set(StateId s, ActionId a, double sigma);
    // Entries ordered by action.
    [[nodiscard]] std::span<const Entry> row(StateId s) const { return rows_.at(s); }
    // Throws InputError when (s, a) has no entry.
    [[nodiscard]] double sigma(StateId s, ActionId a) const;
    [[nodiscard]] std::optional<double> find(StateId s, ActionId a) const;

private:
    std::size_t lookahead_ = default_lookahead;
    StateSet unsafe_;
    std::string unsafe_label_;
    std::vector<std::vector<Entry>> rows_;
};

[[nodiscard]] SigmaTable synth_sigma(const ExplicitMdp& m, const StateSet& unsafe, std::size_t lookahead,
                                     std::string unsafe_label = {});

// sigma <= lambda, both rounded to 12 decimal digits first.
[[nodiscard]] bool within_threshold(double sigma, double lambda);

struct StatePartition
{
    StateSet s_delta;  // non-empty shield, not unsafe
    StateSet s_nabla;  // stuck: empty shield, not unsafe
    StateSet s_unsafe;
};

// Absolute shield at threshold lambda over a sigma table.
class ShieldView
{
public:
    ShieldView(const SigmaTable& table, double lambda);

    [[nodiscard]] const SigmaTable& table() const { return *table_; }
    [[nodiscard]] double lambda() const { return lambda_; }

    [[nodiscard]] std::vector<ActionId> shield_actions(StateId s) const;
    // Intersection of the per-state shields over a non-empty prediction set.
    [[nodiscard]] std::vector<ActionId> lifted_shield(const StateSet& sbar) const;
    // argmin over the lifted shield of max_{s in sbar} sigma(s, a); ties to
    // the smallest action. nullopt when the lifted shield is empty.
    [[nodiscard]] std::optional<ActionId> safest_action(const StateSet& sbar) const;
    [[nodiscard]] StatePartition classify_states() const;

private:
    const SigmaTable* table_;
    double lambda_;
};

} // namespace cshield
