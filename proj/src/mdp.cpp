#include "cshield/mdp.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace cshield {

std::string Diagnostic::str() const
{
    return fmt::format("{}:{}:{}: {}", severity == Severity::error ? "error" : "warning", line, column, message);
}

bool has_errors(std::span<const Diagnostic> diagnostics)
{
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

ExplicitMdp::ExplicitMdp(std::size_t state_count, std::vector<std::string> action_names, StateId initial)
    : action_names_(std::move(action_names)), initial_(initial), choices_(state_count)
{
}

void ExplicitMdp::set_choice(StateId s, ActionId a, std::vector<Transition> successors)
{
    std::sort(successors.begin(), successors.end(),
              [](const Transition& x, const Transition& y) { return x.target < y.target; });
    std::vector<Transition> merged;
    merged.reserve(successors.size());
    for (const auto& t : successors) {
        if (!merged.empty() && merged.back().target == t.target) {
            merged.back().probability += t.probability;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const Transition& t) { return t.probability == 0.0; });

    auto& row = choices_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), a, [](const Choice& c, ActionId x) { return c.action < x; });
    if (it != row.end() && it->action == a) {
        it->successors = std::move(merged);
    } else {
        row.insert(it, Choice{a, std::move(merged)});
    }
}

void ExplicitMdp::clear_choices(StateId s)
{
    choices_.at(s).clear();
}

const Choice* ExplicitMdp::find_choice(StateId s, ActionId a) const
{
    const auto& row = choices_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), a, [](const Choice& c, ActionId x) { return c.action < x; });
    return (it != row.end() && it->action == a) ? &*it : nullptr;
}

std::vector<ActionId> ExplicitMdp::available(StateId s) const
{
    std::vector<ActionId> out;
    for (const auto& c : choices_.at(s)) out.push_back(c.action);
    return out;
}

const StateSet& ExplicitMdp::label(const std::string& name) const
{
    auto it = labels_.find(name);
    if (it == labels_.end()) throw InputError(fmt::format("unknown label \"{}\"", name));
    return it->second;
}

void ExplicitMdp::set_state_names(std::vector<std::string> names)
{
    if (!names.empty() && names.size() != state_count()) {
        throw InputError("state name count does not match state count");
    }
    state_names_ = std::move(names);
}

bool ExplicitMdp::is_absorbing(StateId s) const
{
    const auto& row = choices_.at(s);
    return !row.empty() && std::all_of(row.begin(), row.end(), [s](const Choice& c) {
        return c.successors.size() == 1 && c.successors.front().target == s;
    });
}

std::vector<Diagnostic> validate(const ExplicitMdp& m)
{
    std::vector<Diagnostic> out;
    auto error = [&](std::string msg) { out.push_back({Diagnostic::Severity::error, 0, 0, std::move(msg)}); };

    if (m.state_count() == 0) {
        error("model has no states");
        return out;
    }
    if (m.initial() >= m.state_count()) {
        error(fmt::format("initial state {} does not exist", m.initial()));
    }
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (m.choices(s).empty()) error(fmt::format("state {} has no available action", s));
        for (const auto& c : m.choices(s)) {
            if (c.action >= m.action_count()) {
                error(fmt::format("state {} uses undeclared action {}", s, c.action));
            }
            double sum = 0.0;
            for (const auto& t : c.successors) {
                if (t.target >= m.state_count()) {
                    error(fmt::format("state {} action {} targets missing state {}", s, c.action, t.target));
                }
                if (!(t.probability >= 0.0 && t.probability <= 1.0)) {
                    error(fmt::format("state {} action {} has probability {} outside [0,1]", s, c.action,
                                      t.probability));
                }
                sum += t.probability;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                error(fmt::format("state {} action {}: probabilities sum to {:.17g}", s, c.action, sum));
            }
        }
    }
    for (const auto& [name, states] : m.labels()) {
        const auto members = states.members();
        if (!members.empty() && members.back() >= m.state_count()) {
            error(fmt::format("label \"{}\" references missing state {}", name, members.back()));
        }
        if (members.empty()) {
            out.push_back({Diagnostic::Severity::warning, 0, 0, fmt::format("empty label \"{}\"", name)});
        }
    }
    return out;
}

std::vector<std::vector<double>> bounded_reach_stages(const ExplicitMdp& m, const StateSet& target,
                                                      std::size_t horizon, Optimize mode)
{
    const std::size_t n = m.state_count();
    std::vector<std::vector<double>> stages;
    stages.reserve(horizon + 1);

    std::vector<double> current(n, 0.0);
    for (StateId s = 0; s < n; ++s) current[s] = target.contains(s) ? 1.0 : 0.0;
    stages.push_back(current);

    std::vector<double> next(n, 0.0);
    for (std::size_t k = 0; k < horizon; ++k) {
        for (StateId s = 0; s < n; ++s) {
            if (target.contains(s)) {
                next[s] = 1.0;
                continue;
            }
            const auto row = m.choices(s);
            if (row.empty()) {
                next[s] = 0.0;
                continue;
            }
            double best = mode == Optimize::max ? 0.0 : 1.0;
            for (const auto& c : row) {
                double v = 0.0;
                for (const auto& t : c.successors) v += t.probability * current[t.target];
                best = mode == Optimize::max ? std::max(best, v) : std::min(best, v);
            }
            next[s] = best;
        }
        std::swap(current, next);
        stages.push_back(current);
    }
    return stages;
}

ReachVector bounded_reach(const ExplicitMdp& m, const StateSet& target, std::size_t horizon, Optimize mode)
{
    auto stages = bounded_reach_stages(m, target, horizon, mode);
    return ReachVector{std::move(stages.back()), horizon, mode, target};
}

void check_policy(const ExplicitMdp& m, const MemorylessPolicy& policy)
{
    if (policy.choice.size() != m.state_count()) {
        throw InputError(fmt::format("policy covers {} states, model has {}", policy.choice.size(), m.state_count()));
    }
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (m.find_choice(s, policy.choice[s]) == nullptr) {
            throw InputError(fmt::format("policy picks unavailable action {} in state {}", policy.choice[s], s));
        }
    }
}

OccupancyVector step_occupancy(const ExplicitMdp& m, const MemorylessPolicy& policy, const OccupancyVector& d)
{
    check_policy(m, policy);
    OccupancyVector out(m.state_count(), 0.0);
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (d[s] == 0.0) continue;
        for (const auto& t : m.find_choice(s, policy.choice[s])->successors) out[t.target] += t.probability * d[s];
    }
    return out;
}

ExplicitMdp make_absorbing(const ExplicitMdp& m, const StateSet& freeze)
{
    ExplicitMdp out = m;
    for (StateId s : freeze.members()) {
        if (s >= m.state_count()) throw InputError(fmt::format("freeze set references missing state {}", s));
        for (ActionId a : m.available(s)) out.set_choice(s, a, {{s, 1.0}});
    }
    return out;
}

ExplicitMdp restrict_to_policy(const ExplicitMdp& m, const MemorylessPolicy& policy)
{
    check_policy(m, policy);
    ExplicitMdp out = m;
    for (StateId s = 0; s < m.state_count(); ++s) {
        const Choice kept = *m.find_choice(s, policy.choice[s]);
        out.clear_choices(s);
        out.set_choice(s, kept.action, kept.successors);
    }
    return out;
}

namespace {

void check_oracle_scale(const ExplicitMdp& m, std::size_t horizon)
{
    if (horizon > oracle_max_horizon || m.state_count() > oracle_max_states) {
        throw ScaleLimitError(fmt::format("path enumeration limited to {} states and horizon {} (got {} and {})",
                                          oracle_max_states, oracle_max_horizon, m.state_count(), horizon));
    }
}

// Visits every full path; `visit(path_probability, visited_hit, end_state)`.
template <typename Visit>
void walk_paths(const ExplicitMdp& m, const MemorylessPolicy& policy, StateId s, std::size_t remaining,
                double prob, bool hit_so_far, const StateSet& hit, Visit& visit)
{
    const bool hit_now = hit_so_far || hit.contains(s);
    if (remaining == 0) {
        visit(prob, hit_now, s);
        return;
    }
    for (const auto& t : m.find_choice(s, policy.choice[s])->successors) {
        walk_paths(m, policy, t.target, remaining - 1, prob * t.probability, hit_now, hit, visit);
    }
}

} // namespace

double enumerate_path_prob(const ExplicitMdp& m, const MemorylessPolicy& policy, StateId start, std::size_t horizon,
                           const StateSet& hit)
{
    check_oracle_scale(m, horizon);
    check_policy(m, policy);
    double total = 0.0;
    auto visit = [&](double p, bool was_hit, StateId) {
        if (was_hit) total += p;
    };
    walk_paths(m, policy, start, horizon, 1.0, false, hit, visit);
    return total;
}

OccupancyVector enumerate_end_distribution(const ExplicitMdp& m, const MemorylessPolicy& policy, StateId start,
                                           std::size_t horizon)
{
    check_oracle_scale(m, horizon);
    check_policy(m, policy);
    OccupancyVector out(m.state_count(), 0.0);
    const StateSet none;
    auto visit = [&](double p, bool, StateId end) { out[end] += p; };
    walk_paths(m, policy, start, horizon, 1.0, false, none, visit);
    return out;
}

OccupancyVector point_mass(std::size_t state_count, StateId s)
{
    OccupancyVector d(state_count, 0.0);
    d.at(s) = 1.0;
    return d;
}

} // namespace cshield
