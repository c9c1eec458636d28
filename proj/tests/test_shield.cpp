#include "cshield/errors.hpp"
#include "cshield/shield.hpp"
#include "cshield/theorem_lab.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace cshield;
using cshield::testing::all_policies;
using cshield::testing::random_model;

namespace {

// Minimum over sequences of per-step memoryless policies of the probability
// of visiting `unsafe` within `horizon` steps, by explicit path enumeration.
double min_reach_over_policy_sequences(const ExplicitMdp& m, const StateSet& unsafe, StateId start,
                                       std::size_t horizon, std::size_t actions)
{
    const auto rules = all_policies(m.state_count(), actions);
    double best = 1.0;
    std::vector<std::size_t> seq(horizon, 0);
    while (true) {
        // Sum over paths of length `horizon` following seq[k] at step k.
        std::function<double(StateId, std::size_t)> walk = [&](StateId s, std::size_t k) -> double {
            if (unsafe.contains(s)) return 1.0;
            if (k == horizon) return 0.0;
            double v = 0.0;
            for (const auto& t : m.find_choice(s, rules[seq[k]].choice[s])->successors) {
                v += t.probability * walk(t.target, k + 1);
            }
            return v;
        };
        best = std::min(best, walk(start, 0));
        std::size_t i = 0;
        while (i < horizon && ++seq[i] == rules.size()) seq[i++] = 0;
        if (i == horizon) break;
    }
    return best;
}

SigmaTable table(std::size_t states, const std::vector<std::vector<double>>& sigma)
{
    SigmaTable st(1, StateSet{}, "", states);
    for (StateId s = 0; s < sigma.size(); ++s) {
        for (ActionId a = 0; a < sigma[s].size(); ++a) {
            if (sigma[s][a] >= 0.0) st.set(s, a, sigma[s][a]);
        }
    }
    return st;
}

} // namespace

TEST(SynthSigma, SureUnsafeAndSureSafe)
{
    ExplicitMdp m(3, {"crash", "park"}, 0);
    m.set_choice(0, 0, {{1, 1.0}});
    m.set_choice(0, 1, {{2, 1.0}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_choice(2, 0, {{2, 1.0}});
    const auto st = synth_sigma(m, StateSet{1}, 3);
    EXPECT_EQ(st.sigma(0, 0), 1.0);
    EXPECT_EQ(st.sigma(0, 1), 0.0);
    EXPECT_THROW((void)st.sigma(2, 1), InputError);
    EXPECT_FALSE(st.find(2, 1).has_value());
}

TEST(SynthSigma, WorstCaseSystemAnyLookahead)
{
    for (double lambda : {0.1, 0.2, 0.3}) {
        const auto m = build_worst_case(lambda);
        for (std::size_t n = 1; n <= 5; ++n) {
            const auto st = synth_sigma(m, m.label("unsafe"), n);
            EXPECT_EQ(st.sigma(1, 0), 0.0);
            EXPECT_NEAR(st.sigma(1, 1), lambda, 1e-15);
        }
    }
}

TEST(SynthSigma, MatchesPolicyEnumerationOracle)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = random_model(rng, 3, 2);
        const StateSet unsafe{2};
        for (std::size_t n = 1; n <= 3; ++n) {
            const auto st = synth_sigma(m, unsafe, n);
            for (StateId s = 0; s < 3; ++s) {
                for (const auto& c : m.choices(s)) {
                    double expected = 0.0;
                    for (const auto& t : c.successors) {
                        expected += t.probability * min_reach_over_policy_sequences(m, unsafe, t.target, n, 2);
                    }
                    EXPECT_NEAR(st.sigma(s, c.action), expected, 1e-12);
                }
            }
        }
    }
}

TEST(SynthSigma, RejectsZeroLookahead)
{
    const auto m = build_worst_case(0.2);
    EXPECT_THROW((void)synth_sigma(m, m.label("unsafe"), 0), InputError);
}

TEST(Threshold, InclusiveWithRounding)
{
    EXPECT_TRUE(within_threshold(0.3, 0.3));
    EXPECT_TRUE(within_threshold(0.1 + 1e-14, 0.1));
    EXPECT_FALSE(within_threshold(0.1 + 1e-11, 0.1));
    EXPECT_TRUE(within_threshold(0.0, 0.0));
}

TEST(ShieldView, RejectsBadLambda)
{
    const auto st = table(1, {{0.5}});
    EXPECT_THROW(ShieldView(st, -0.1), InputError);
    EXPECT_THROW(ShieldView(st, 1.5), InputError);
}

TEST(ShieldActions, LambdaExtremes)
{
    const auto st = table(2, {{0.2, 0.9, 1.0}, {0.4}});
    EXPECT_EQ(ShieldView(st, 1.0).shield_actions(0), (std::vector<ActionId>{0, 1, 2}));
    EXPECT_TRUE(ShieldView(st, 0.0).shield_actions(1).empty());
}

TEST(ShieldActions, WorstCaseBoundaryAdmitted)
{
    const auto m = build_worst_case(0.2);
    const auto st = synth_sigma(m, m.label("unsafe"), 3);
    EXPECT_EQ(ShieldView(st, 0.2).shield_actions(1), (std::vector<ActionId>{0, 1}));
}

TEST(LiftedShield, Intersection)
{
    // Shield(0) = {0, 1}, shield(1) = {1, 2}, shield(2) = {}.
    const auto st = table(3, {{0.1, 0.1, 0.9}, {0.9, 0.1, 0.2}, {0.9, 0.8}});
    const ShieldView v(st, 0.3);
    EXPECT_EQ(v.lifted_shield(StateSet{0}), v.shield_actions(0));
    EXPECT_EQ(v.lifted_shield(StateSet{0, 1}), (std::vector<ActionId>{1}));
    EXPECT_TRUE(v.lifted_shield(StateSet{0, 2}).empty());
    EXPECT_THROW((void)v.lifted_shield(StateSet{}), InputError);
}

TEST(SafestAction, MinimaxChoice)
{
    const auto st = table(3, {{}, {0.1, 0.4}, {0.5, 0.2}});
    const ShieldView v(st, 0.6);
    EXPECT_EQ(v.safest_action(StateSet{1, 2}), ActionId{1});
    EXPECT_EQ(v.safest_action(StateSet{1}), ActionId{0});
    EXPECT_EQ(ShieldView(st, 0.15).safest_action(StateSet{1, 2}), std::nullopt);
}

TEST(SafestAction, TiesGoToSmallestAction)
{
    const auto st = table(1, {{0.3, 0.2, 0.2}});
    EXPECT_EQ(ShieldView(st, 1.0).safest_action(StateSet{0}), ActionId{1});
}

TEST(ClassifyStates, WorstCaseAndLambdaOne)
{
    const auto m = build_worst_case(0.2);
    const auto st = synth_sigma(m, m.label("unsafe"), 2);
    const auto p = ShieldView(st, 0.2).classify_states();
    EXPECT_EQ(p.s_delta, StateSet{1});
    EXPECT_TRUE(p.s_nabla.empty());
    EXPECT_EQ(p.s_unsafe, StateSet{0});
    EXPECT_TRUE(ShieldView(st, 1.0).classify_states().s_nabla.empty());
}

TEST(ClassifyStates, EntrapmentChainIsStuck)
{
    const std::size_t n = 4;
    const auto m = build_entrapment(0.3, 0.01, n);
    const auto st = synth_sigma(m, m.label("unsafe"), n);
    const auto p = ShieldView(st, 0.3).classify_states();
    EXPECT_TRUE(m.label("chain").is_subset_of(p.s_nabla));
    EXPECT_TRUE(p.s_delta.contains(m.initial()));
}

TEST(ShieldProperties, MonotoneInLambdaAntiMonotoneInSets)
{
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng, 5, 3);
        const auto st = synth_sigma(m, StateSet{4}, 3);
        const double lambdas[] = {0.0, 0.1, 0.3, 0.6, 1.0};
        for (std::size_t i = 0; i + 1 < std::size(lambdas); ++i) {
            const ShieldView lo(st, lambdas[i]);
            const ShieldView hi(st, lambdas[i + 1]);
            for (StateId s = 0; s < 5; ++s) {
                const auto a = lo.shield_actions(s);
                const auto b = hi.shield_actions(s);
                EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
            }
        }
        const ShieldView v(st, 0.5);
        const StateSet small{0, 1};
        const StateSet big{0, 1, 3};
        const auto ls = v.lifted_shield(small);
        const auto lb = v.lifted_shield(big);
        EXPECT_TRUE(std::includes(ls.begin(), ls.end(), lb.begin(), lb.end()));
        if (auto a = v.safest_action(big)) {
            EXPECT_NE(std::find(lb.begin(), lb.end(), *a), lb.end());
        }
    }
}
