#include "cshield/shield.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <fmt/format.h>

namespace cshield {

SigmaTable::SigmaTable(std::size_t lookahead, StateSet unsafe, std::string unsafe_label, std::size_t state_count)
    : lookahead_(lookahead), unsafe_(std::move(unsafe)), unsafe_label_(std::move(unsafe_label)), rows_(state_count)
{
}

void SigmaTable::set(StateId s, ActionId a, double sigma)
{
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw InputError(fmt::format("sigma {} outside [0,1]", sigma));
    auto& row = rows_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), a, [](const Entry& e, ActionId x) { return e.action < x; });
    if (it != row.end() && it->action == a) {
        it->sigma = sigma;
    } else {
        row.insert(it, Entry{a, sigma});
    }
}

std::optional<double> SigmaTable::find(StateId s, ActionId a) const
{
    if (s >= rows_.size()) return std::nullopt;
    const auto& row = rows_[s];
    auto it = std::lower_bound(row.begin(), row.end(), a, [](const Entry& e, ActionId x) { return e.action < x; });
    if (it == row.end() || it->action != a) return std::nullopt;
    return it->sigma;
}

double SigmaTable::sigma(StateId s, ActionId a) const
{
    if (auto v = find(s, a)) return *v;
    throw InputError(fmt::format("no sigma entry for state {} action {}", s, a));
}

SigmaTable synth_sigma(const ExplicitMdp& m, const StateSet& unsafe, std::size_t lookahead, std::string unsafe_label)
{
    if (lookahead < 1) throw InputError("shield lookahead must be at least 1");
    const ReachVector vmin = bounded_reach(m, unsafe, lookahead, Optimize::min);
    SigmaTable table(lookahead, unsafe, std::move(unsafe_label), m.state_count());
    for (StateId s = 0; s < m.state_count(); ++s) {
        for (const auto& c : m.choices(s)) {
            double v = 0.0;
            for (const auto& t : c.successors) v += t.probability * vmin.values[t.target];
            table.set(s, c.action, std::clamp(v, 0.0, 1.0));
        }
    }
    return table;
}

bool within_threshold(double sigma, double lambda)
{
    constexpr double scale = 1e12;
    return std::round(sigma * scale) <= std::round(lambda * scale);
}

ShieldView::ShieldView(const SigmaTable& table, double lambda) : table_(&table), lambda_(lambda)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError(fmt::format("lambda {} outside [0,1]", lambda));
}

std::vector<ActionId> ShieldView::shield_actions(StateId s) const
{
    std::vector<ActionId> out;
    for (const auto& e : table_->row(s)) {
        if (within_threshold(e.sigma, lambda_)) out.push_back(e.action);
    }
    return out;
}

std::vector<ActionId> ShieldView::lifted_shield(const StateSet& sbar) const
{
    const auto members = sbar.members();
    if (members.empty()) throw InputError("lifted shield of an empty prediction set");
    std::vector<ActionId> acc = shield_actions(members.front());
    for (std::size_t i = 1; i < members.size() && !acc.empty(); ++i) {
        const auto next = shield_actions(members[i]);
        std::vector<ActionId> both;
        std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(), std::back_inserter(both));
        acc = std::move(both);
    }
    return acc;
}

std::optional<ActionId> ShieldView::safest_action(const StateSet& sbar) const
{
    const auto allowed = lifted_shield(sbar);
    const auto members = sbar.members();
    std::optional<ActionId> best;
    double best_risk = 2.0;
    for (ActionId a : allowed) {
        double risk = 0.0;
        for (StateId s : members) risk = std::max(risk, table_->sigma(s, a));
        if (risk < best_risk) {
            best_risk = risk;
            best = a;
        }
    }
    return best;
}

StatePartition ShieldView::classify_states() const
{
    StatePartition p;
    p.s_unsafe = table_->unsafe();
    for (StateId s = 0; s < table_->state_count(); ++s) {
        if (p.s_unsafe.contains(s)) continue;
        if (shield_actions(s).empty()) {
            p.s_nabla.insert(s);
        } else {
            p.s_delta.insert(s);
        }
    }
    return p;
}

} // namespace cshield
