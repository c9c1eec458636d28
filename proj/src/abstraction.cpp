#include "cshield/abstraction.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace cshield {

std::optional<SetId> SetRegistry::find(const StateSet& s) const
{
    auto it = std::lower_bound(sets_.begin(), sets_.end(), s);
    if (it != sets_.end() && *it == s) return static_cast<SetId>(it - sets_.begin());
    return std::nullopt;
}

SetRegistry SetRegistry::from(std::vector<StateSet> sets)
{
    std::sort(sets.begin(), sets.end());
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    SetRegistry r;
    r.sets_ = std::move(sets);
    return r;
}

Nu normalize_confusion(const SetConfusion& c, const StateSet& required, std::size_t state_count, EmptyRowPolicy policy)
{
    Nu nu;
    nu.rows.resize(state_count);
    for (const auto& [key, count] : c.counts) {
        const auto& [actual, set] = key;
        if (actual >= state_count) {
            throw InputError(fmt::format("confusion references state {} beyond the model's {} states", actual, state_count));
        }
        if (set.empty()) throw InputError(fmt::format("empty prediction set recorded for state {}", actual));
        if (count == 0) continue;
        const double total = static_cast<double>(c.totals.at(actual));
        nu.rows[actual].emplace_back(set, static_cast<double>(count) / total);
    }
    for (StateId s : required.members()) {
        if (s >= state_count || !nu.rows[s].empty()) continue;
        if (policy == EmptyRowPolicy::error) {
            throw InputError(fmt::format("no perception samples for state {}", s));
        }
        nu.rows[s].emplace_back(StateSet::singleton(s), 1.0);
    }
    return nu;
}

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::worst: return "worst";
    case Variant::random: return "random";
    case Variant::safest: return "safest";
    }
    return "worst";
}

Variant parse_variant(const std::string& s)
{
    if (s == "worst") return Variant::worst;
    if (s == "random") return Variant::random;
    if (s == "safest") return Variant::safest;
    throw InputError(fmt::format("unknown variant '{}' (expected worst, random or safest)", s));
}

namespace {

constexpr std::size_t fail_slot = std::numeric_limits<std::size_t>::max();
constexpr std::size_t stuck_slot = fail_slot - 1;

struct PendingRow
{
    ActionId action;
    std::map<std::size_t, double> mass; // pair index or terminal slot
};

class Compiler
{
public:
    Compiler(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const Nu& nu, Variant variant)
        : perf_(perf), st_(st), view_(st, lambda), nu_(nu), variant_(variant)
    {
        if (st.state_count() != perf.state_count()) {
            throw InputError(fmt::format("sigma table covers {} states, model has {}", st.state_count(),
                                         perf.state_count()));
        }
        std::vector<StateSet> sets{StateSet::singleton(perf.initial())};
        for (const auto& row : nu.rows) {
            for (const auto& [set, p] : row) sets.push_back(set);
        }
        registry_ = SetRegistry::from(std::move(sets));
        lifted_.resize(registry_.size());
    }

    AbstractModel run(const CompileOptions& options)
    {
        const StateId iota = perf_.initial();
        const SetId iota_set = *registry_.find(StateSet::singleton(iota));
        AbstractModel am;
        am.variant = variant_;
        am.lambda = view_.lambda();
        am.lookahead = st_.lookahead();
        am.alpha = options.alpha;
        am.initial_stuck = lifted(iota_set).empty();
        if (st_.unsafe().contains(iota)) throw InputError("initial state is unsafe");

        if (!am.initial_stuck) {
            intern({iota, iota_set});
            if (!options.prune) {
                for (StateId s = 0; s < perf_.state_count(); ++s) {
                    if (st_.unsafe().contains(s)) continue;
                    for (SetId k = 0; k < registry_.size(); ++k) {
                        if (!lifted(k).empty()) intern({s, k});
                    }
                }
            }
            while (!queue_.empty()) {
                const std::size_t idx = queue_.front();
                queue_.pop_front();
                expand(idx);
            }
        }

        // Final numbering: pairs in (state, set) order, then fail, stuck.
        std::vector<std::size_t> order(pairs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pairs_[a] < pairs_[b]; });
        std::vector<StateId> final_id(pairs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) final_id[order[i]] = static_cast<StateId>(i);
        const auto k = static_cast<StateId>(pairs_.size());
        am.fail = k;
        am.stuck = k + 1;
        auto map_target = [&](std::size_t slot) {
            if (slot == fail_slot) return am.fail;
            if (slot == stuck_slot) return am.stuck;
            return final_id[slot];
        };

        std::vector<std::string> actions;
        if (variant_ == Variant::worst) {
            actions = perf_.action_names();
        } else {
            actions = {to_string(variant_)};
        }
        const StateId initial = am.initial_stuck ? am.stuck : final_id[pair_index_.at({iota, iota_set})];
        ExplicitMdp m(pairs_.size() + 2, std::move(actions), initial);
        std::vector<std::string> names(pairs_.size() + 2);
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            const StateId id = final_id[i];
            names[id] = fmt::format("s{}_set{}", pairs_[i].first, pairs_[i].second);
            for (const auto& row : rows_[i]) {
                std::vector<Transition> succ;
                for (const auto& [slot, p] : row.mass) succ.push_back({map_target(slot), p});
                m.set_choice(id, row.action, std::move(succ));
            }
        }
        names[am.fail] = "fail";
        names[am.stuck] = "stuck";
        m.set_choice(am.fail, 0, {{am.fail, 1.0}});
        m.set_choice(am.stuck, 0, {{am.stuck, 1.0}});
        m.set_label("fail", StateSet::singleton(am.fail));
        m.set_label("stuck", StateSet::singleton(am.stuck));
        m.set_state_names(std::move(names));

        am.pairs.resize(pairs_.size());
        for (std::size_t i = 0; i < pairs_.size(); ++i) am.pairs[final_id[i]] = pairs_[i];
        am.mdp = std::move(m);
        am.sets = std::move(registry_);
        return am;
    }

private:
    const std::vector<ActionId>& lifted(SetId k)
    {
        if (!lifted_[k]) lifted_[k] = view_.lifted_shield(registry_.at(k));
        return *lifted_[k];
    }

    std::size_t intern(std::pair<StateId, SetId> p)
    {
        auto [it, inserted] = pair_index_.emplace(p, pairs_.size());
        if (inserted) {
            pairs_.push_back(p);
            rows_.emplace_back();
            queue_.push_back(it->second);
        }
        return it->second;
    }

    // Distribution over successor slots after taking `a` in actual state `s`.
    std::map<std::size_t, double> successors(StateId s, ActionId a)
    {
        const Choice* c = perf_.find_choice(s, a);
        if (c == nullptr) {
            throw InputError(fmt::format("sigma table allows action {} in state {}, which the model lacks", a, s));
        }
        std::map<std::size_t, double> out;
        for (const auto& t : c->successors) {
            if (st_.unsafe().contains(t.target)) {
                out[fail_slot] += t.probability;
                continue;
            }
            if (!nu_.covers(t.target)) {
                throw InputError(fmt::format("no perception distribution for successor state {}", t.target));
            }
            for (const auto& [set, q] : nu_.rows[t.target]) {
                const SetId k = *registry_.find(set);
                if (lifted(k).empty()) {
                    out[stuck_slot] += t.probability * q;
                } else {
                    out[intern({t.target, k})] += t.probability * q;
                }
            }
        }
        return out;
    }

    void expand(std::size_t idx)
    {
        const auto [s, k] = pairs_[idx];
        const std::vector<ActionId> allowed = lifted(k);
        std::vector<PendingRow> rows;
        switch (variant_) {
        case Variant::worst:
            for (ActionId a : allowed) rows.push_back({a, successors(s, a)});
            break;
        case Variant::random: {
            PendingRow mix{0, {}};
            const double w = 1.0 / static_cast<double>(allowed.size());
            for (ActionId a : allowed) {
                for (const auto& [slot, p] : successors(s, a)) mix.mass[slot] += w * p;
            }
            rows.push_back(std::move(mix));
            break;
        }
        case Variant::safest: {
            const ActionId a = *view_.safest_action(registry_.at(k));
            rows.push_back({0, successors(s, a)});
            break;
        }
        }
        rows_[idx] = std::move(rows);
    }

    const ExplicitMdp& perf_;
    const SigmaTable& st_;
    ShieldView view_;
    const Nu& nu_;
    Variant variant_;
    SetRegistry registry_;
    std::vector<std::optional<std::vector<ActionId>>> lifted_;
    std::map<std::pair<StateId, SetId>, std::size_t> pair_index_;
    std::vector<std::pair<StateId, SetId>> pairs_;
    std::vector<std::vector<PendingRow>> rows_;
    std::deque<std::size_t> queue_;
};

} // namespace

AbstractModel compile(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const Nu& nu, Variant variant,
                      const CompileOptions& options)
{
    Compiler c(perf, st, lambda, nu, variant);
    return c.run(options);
}

AbstractModel compile_baseline(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const Nu& point_nu,
                               Variant variant, const CompileOptions& options)
{
    for (std::size_t s = 0; s < point_nu.rows.size(); ++s) {
        for (const auto& [set, p] : point_nu.rows[s]) {
            if (set.count() != 1) {
                throw InputError(fmt::format("baseline perception for state {} predicts a non-singleton set {}", s,
                                             set.to_hex()));
            }
        }
    }
    AbstractModel am = compile(perf, st, lambda, point_nu, variant, options);
    am.baseline = true;
    return am;
}

} // namespace cshield
