#pragma once

#include "cshield/mdp.hpp"

#include <random>
#include <vector>

namespace cshield::testing {

// s0 -> 0.5 s0, 0.5 s1; s1 absorbing target.
inline ExplicitMdp chain_model()
{
    ExplicitMdp m(2, {"go"}, 0);
    m.set_choice(0, 0, {{0, 0.5}, {1, 0.5}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_label("target", StateSet::singleton(1));
    return m;
}

// Deterministic 3-cycle 0 -> 1 -> 2 -> 0.
inline ExplicitMdp cycle_model()
{
    ExplicitMdp m(3, {"next"}, 0);
    for (StateId s = 0; s < 3; ++s) m.set_choice(s, 0, {{(s + 1) % 3, 1.0}});
    m.set_label("unsafe", StateSet::singleton(2));
    return m;
}

// Every available action of every state, with up to `max_succ` successors.
inline ExplicitMdp random_model(std::mt19937_64& rng, std::size_t states, std::size_t actions,
                                std::size_t max_succ = 3)
{
    std::vector<std::string> names;
    for (std::size_t a = 0; a < actions; ++a) names.push_back("a" + std::to_string(a));
    ExplicitMdp m(states, names, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> count(1, std::min(max_succ, states));
    for (StateId s = 0; s < states; ++s) {
        for (ActionId a = 0; a < actions; ++a) {
            std::vector<StateId> pool;
            for (StateId t = 0; t < states; ++t) pool.push_back(t);
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(count(rng));
            std::vector<Transition> row;
            double left = 1.0;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const double p = i + 1 == pool.size() ? left : left * (0.2 + 0.6 * unit(rng));
                left -= p;
                row.push_back({pool[i], p});
            }
            m.set_choice(s, a, row);
        }
    }
    return m;
}

// All memoryless policies over a model where every state offers every action.
inline std::vector<MemorylessPolicy> all_policies(std::size_t states, std::size_t actions)
{
    std::vector<MemorylessPolicy> out;
    std::vector<ActionId> digits(states, 0);
    while (true) {
        out.push_back({digits});
        std::size_t i = 0;
        while (i < states && ++digits[i] == actions) digits[i++] = 0;
        if (i == states) break;
    }
    return out;
}

} // namespace cshield::testing
