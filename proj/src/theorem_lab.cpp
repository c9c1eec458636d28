#include "cshield/theorem_lab.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <fmt/format.h>

namespace cshield {

ExplicitMdp build_worst_case(double lambda)
{
    if (!(lambda > 0.0 && lambda < 1.0)) throw InputError("worst-case system needs 0 < lambda < 1");
    ExplicitMdp m(2, {"a0", "a1"}, 1);
    m.set_choice(0, 0, {{0, 1.0}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_choice(1, 1, {{0, lambda}, {1, 1.0 - lambda}});
    m.set_label("unsafe", StateSet::singleton(0));
    return m;
}

ExplicitMdp build_entrapment(double lambda, double epsilon, std::size_t n)
{
    if (!(epsilon > 0.0) || !(lambda > 0.0) || lambda + epsilon > 1.0) {
        throw InputError("entrapment system needs lambda > 0, epsilon > 0 and lambda + epsilon <= 1");
    }
    if (n < 1) throw InputError("entrapment system needs lookahead n >= 1");
    const auto start = static_cast<StateId>(n + 1);
    const auto sink = static_cast<StateId>(n + 2);
    ExplicitMdp m(n + 3, {"a0", "a1"}, start);
    m.set_choice(0, 0, {{0, 1.0}});
    const double risk = lambda + epsilon;
    m.set_choice(1, 0, {{0, risk}, {sink, 1.0 - risk}});
    for (StateId c = 2; c <= n; ++c) m.set_choice(c, 0, {{c - 1, 1.0}});
    const double x = lambda / risk;
    m.set_choice(start, 0, {{start, 1.0}});
    m.set_choice(start, 1, {{static_cast<StateId>(n), x}, {start, 1.0 - x}});
    m.set_choice(sink, 0, {{sink, 1.0}});
    m.set_label("unsafe", StateSet::singleton(0));
    m.set_label("chain", StateSet::range(1, static_cast<StateId>(n + 1)));
    return m;
}

double entrapment_stuck_probability(double lambda, double epsilon, std::size_t n)
{
    const ExplicitMdp m = build_entrapment(lambda, epsilon, n);
    const SigmaTable st = synth_sigma(m, m.label("unsafe"), n);
    const ShieldView view(st, lambda);
    const StatePartition part = view.classify_states();

    MemorylessPolicy tempt;
    for (StateId s = 0; s < m.state_count(); ++s) tempt.choice.push_back(m.choices(s).front().action);
    tempt.choice[m.initial()] = 1;
    const auto shielded = view.shield_actions(m.initial());
    if (std::find(shielded.begin(), shielded.end(), ActionId{1}) == shielded.end()) {
        throw InputError("tempting action is not admitted by the shield");
    }
    const OccupancyVector d1 = step_occupancy(m, tempt, point_mass(m.state_count(), m.initial()));
    double stuck = 0.0;
    for (StateId s : part.s_nabla.members()) stuck += d1[s];
    return stuck;
}

ExplicitMdp shield_restricted(const ExplicitMdp& m, const ShieldView& view)
{
    ExplicitMdp out = m;
    const StateSet& unsafe = view.table().unsafe();
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (unsafe.contains(s)) continue;
        const auto allowed = view.shield_actions(s);
        if (allowed.empty()) continue;
        out.clear_choices(s);
        for (ActionId a : allowed) out.set_choice(s, a, m.find_choice(s, a)->successors);
    }
    return out;
}

bool stuck_reachable(const ExplicitMdp& restricted, const StatePartition& partition)
{
    std::vector<char> seen(restricted.state_count(), 0);
    std::deque<StateId> queue{restricted.initial()};
    seen[restricted.initial()] = 1;
    while (!queue.empty()) {
        const StateId s = queue.front();
        queue.pop_front();
        if (partition.s_nabla.contains(s)) return true;
        if (partition.s_unsafe.contains(s)) continue;
        for (const auto& c : restricted.choices(s)) {
            for (const auto& t : c.successors) {
                if (!seen[t.target]) {
                    seen[t.target] = 1;
                    queue.push_back(t.target);
                }
            }
        }
    }
    return false;
}

Theorem1Report verify_theorem1(const ExplicitMdp& m, const StateSet& unsafe, double lambda, std::size_t lookahead,
                               std::size_t horizon)
{
    const SigmaTable st = synth_sigma(m, unsafe, lookahead);
    const ShieldView view(st, lambda);
    const StatePartition part = view.classify_states();
    const ExplicitMdp restricted = shield_restricted(m, view);

    Theorem1Report r;
    r.lambda = lambda;
    r.lookahead = lookahead;
    r.horizon = horizon;
    r.initially_safe = part.s_delta.contains(m.initial());
    r.no_stuck = !stuck_reachable(restricted, part);
    r.max_unsafe = bounded_reach(restricted, unsafe, horizon, Optimize::max).values[m.initial()];
    r.bound = 1.0 - std::pow(1.0 - lambda, static_cast<double>(horizon));
    r.satisfied = !(r.initially_safe && r.no_stuck) || r.max_unsafe <= r.bound + 1e-12;
    return r;
}

double LemmaResiduals::max() const
{
    return std::max({occupancy, absorbing, end_state});
}

LemmaResiduals check_lemmas(const ExplicitMdp& m, const StateSet& unsafe, std::size_t trials, std::uint64_t seed,
                            std::size_t max_horizon)
{
    if (m.state_count() > oracle_max_states || max_horizon > oracle_max_horizon) {
        throw ScaleLimitError(fmt::format("lemma checks limited to {} states and horizon {}", oracle_max_states,
                                          oracle_max_horizon));
    }
    const ExplicitMdp absorbing = make_absorbing(m, unsafe);
    LemmaResiduals r;
    r.trials = trials;
    r.max_horizon = max_horizon;
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(seed + t);
        MemorylessPolicy pi;
        for (StateId s = 0; s < m.state_count(); ++s) {
            const auto avail = m.available(s);
            std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
            pi.choice.push_back(avail[pick(rng)]);
        }
        OccupancyVector d = point_mass(m.state_count(), m.initial());
        OccupancyVector d_abs = d;
        for (std::size_t h = 0; h <= max_horizon; ++h) {
            const OccupancyVector enumerated = enumerate_end_distribution(m, pi, m.initial(), h);
            for (StateId s = 0; s < m.state_count(); ++s) {
                r.occupancy = std::max(r.occupancy, std::abs(enumerated[s] - d[s]));
            }
            const double hit = enumerate_path_prob(m, pi, m.initial(), h, unsafe);
            const double hit_abs = enumerate_path_prob(absorbing, pi, m.initial(), h, unsafe);
            r.absorbing = std::max(r.absorbing, std::abs(hit - hit_abs));
            double end_mass = 0.0;
            for (StateId s : unsafe.members()) end_mass += d_abs[s];
            r.end_state = std::max(r.end_state, std::abs(hit_abs - end_mass));

            d = step_occupancy(m, pi, d);
            d_abs = step_occupancy(absorbing, pi, d_abs);
        }
    }
    return r;
}

ExplicitMdp random_mdp(std::mt19937_64& rng, const RandomMdpOptions& options)
{
    std::uniform_int_distribution<std::size_t> size_dist(std::max<std::size_t>(options.min_states, 2),
                                                         std::max(options.max_states, options.min_states));
    const std::size_t n = size_dist(rng);
    std::vector<std::string> names;
    for (std::size_t a = 0; a < options.actions; ++a) names.push_back(fmt::format("a{}", a));
    ExplicitMdp m(n, std::move(names), 1);
    m.set_choice(0, 0, {{0, 1.0}});

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> succ_count(1, std::max<std::size_t>(options.max_successors, 1));
    for (StateId s = 1; s < n; ++s) {
        for (ActionId a = 0; a < options.actions; ++a) {
            // The first action always exists; others are optional.
            if (a > 0 && unit(rng) < 0.3) continue;
            const bool avoid_unsafe = unit(rng) < options.safe_row_chance;
            std::vector<StateId> pool;
            for (StateId t = avoid_unsafe ? 1 : 0; t < n; ++t) pool.push_back(t);
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(std::min(pool.size(), succ_count(rng)));
            std::vector<double> w;
            for (std::size_t i = 0; i < pool.size(); ++i) w.push_back(0.05 + unit(rng));
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            std::vector<Transition> row;
            double assigned = 0.0;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const double p = i + 1 == pool.size() ? 1.0 - assigned : w[i] / total;
                assigned += p;
                row.push_back({pool[i], p});
            }
            m.set_choice(s, a, std::move(row));
        }
    }
    m.set_label("unsafe", StateSet::singleton(0));
    return m;
}

bool Theorem1Sweep::pass() const
{
    return std::all_of(rows.begin(), rows.end(), [](const Theorem1SweepRow& r) { return r.pass; });
}

Theorem1Sweep theorem1_sweep(std::size_t models, std::uint64_t seed, const std::vector<double>& lambdas,
                             const std::vector<std::size_t>& lookaheads, std::size_t max_horizon,
                             std::size_t max_attempts)
{
    Theorem1Sweep sweep;
    sweep.models_per_config = models;
    for (double lambda : lambdas) {
        for (std::size_t n : lookaheads) {
            std::vector<Theorem1SweepRow> rows(max_horizon);
            for (std::size_t h = 1; h <= max_horizon; ++h) {
                rows[h - 1].lambda = lambda;
                rows[h - 1].lookahead = n;
                rows[h - 1].horizon = h;
                rows[h - 1].bound = 1.0 - std::pow(1.0 - lambda, static_cast<double>(h));
            }
            std::size_t accepted = 0;
            std::size_t attempt = 0;
            for (; attempt < max_attempts && accepted < models; ++attempt) {
                std::seed_seq seq{seed, static_cast<std::uint64_t>(attempt)};
                std::mt19937_64 rng(seq);
                const ExplicitMdp m = random_mdp(rng);
                const StateSet& unsafe = m.label("unsafe");
                const Theorem1Report first = verify_theorem1(m, unsafe, lambda, n, 1);
                if (!first.initially_safe || !first.no_stuck) continue;
                ++accepted;

                const SigmaTable st = synth_sigma(m, unsafe, n);
                const ExplicitMdp restricted = shield_restricted(m, ShieldView(st, lambda));
                const auto stages = bounded_reach_stages(restricted, unsafe, max_horizon, Optimize::max);
                for (std::size_t h = 1; h <= max_horizon; ++h) {
                    auto& row = rows[h - 1];
                    const double v = stages[h][m.initial()];
                    row.max_unsafe = std::max(row.max_unsafe, v);
                    if (v > row.bound + 1e-12) row.pass = false;
                }
            }
            sweep.attempts += attempt;
            if (accepted < models) ++sweep.short_configs;
            sweep.rows.insert(sweep.rows.end(), rows.begin(), rows.end());
        }
    }
    return sweep;
}

} // namespace cshield
