#pragma once

#include "cshield/conformal.hpp"
#include "cshield/mdp.hpp"
#include "cshield/shield.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cshield {

using SetId = std::uint32_t;

// Realized prediction sets, numbered in StateSet order.
class SetRegistry
{
public:
    [[nodiscard]] std::optional<SetId> find(const StateSet& s) const;
    [[nodiscard]] const StateSet& at(SetId id) const { return sets_.at(id); }
    [[nodiscard]] std::size_t size() const { return sets_.size(); }
    [[nodiscard]] const std::vector<StateSet>& sets() const { return sets_; }

    // Registry over `sets` (deduplicated, sorted).
    static SetRegistry from(std::vector<StateSet> sets);

private:
    std::vector<StateSet> sets_;
};

// Distribution over realized prediction sets per actual state. Rows are empty
// for states that never need a perception draw (e.g. unsafe states).
struct Nu
{
    std::vector<std::vector<std::pair<StateSet, double>>> rows;

    [[nodiscard]] bool covers(StateId s) const { return s < rows.size() && !rows[s].empty(); }
};

enum class EmptyRowPolicy { error, point };

// nu(s, sbar) = counts(s, sbar) / totals(s) for every state in `required`.
// Required states without samples either raise InputError or fall back to
// the point mass on {s}.
[[nodiscard]] Nu normalize_confusion(const SetConfusion& c, const StateSet& required, std::size_t state_count,
                                     EmptyRowPolicy policy = EmptyRowPolicy::error);

// How actions are picked among the lifted shield: kept nondeterministic
// (worst), uniformly mixed (random) or the safest action only (safest).
enum class Variant { worst, random, safest };

[[nodiscard]] std::string to_string(Variant v);
[[nodiscard]] Variant parse_variant(const std::string& s);

struct CompileOptions
{
    bool prune = true;
    std::optional<double> alpha; // recorded only
};

// Shielded imperfect-perception MDP over (actual state, prediction set)
// pairs with absorbing `fail` and `stuck` terminals.
struct AbstractModel
{
    ExplicitMdp mdp;
    Variant variant = Variant::worst;
    double lambda = 0.0;
    std::size_t lookahead = 0;
    std::optional<double> alpha;
    SetRegistry sets;
    // (actual state, set id) of every non-terminal abstract state.
    std::vector<std::pair<StateId, SetId>> pairs;
    StateId fail = 0;
    StateId stuck = 0;
    bool initial_stuck = false;
    bool baseline = false;
};

[[nodiscard]] AbstractModel compile(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const Nu& nu,
                                    Variant variant, const CompileOptions& options = {});

// Point-estimate perception, shield applied to the estimate (no conformal sets).
// Throws InputError if a point_nu row holds a non-singleton set.
[[nodiscard]] AbstractModel compile_baseline(const ExplicitMdp& perf, const SigmaTable& st, double lambda,
                                             const Nu& point_nu, Variant variant = Variant::worst,
                                             const CompileOptions& options = {});

} // namespace cshield
