#include "cshield/errors.hpp"
#include "cshield/theorem_lab.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace cshield;

namespace {

// Minimum probability of reaching `unsafe` within k steps from s.
double vmin(const ExplicitMdp& m, const StateSet& unsafe, StateId s, std::size_t k)
{
    if (unsafe.contains(s)) return 1.0;
    if (k == 0) return 0.0;
    double best = 1.0;
    for (const auto& c : m.choices(s)) {
        double v = 0.0;
        for (const auto& t : c.successors) v += t.probability * vmin(m, unsafe, t.target, k - 1);
        best = std::min(best, v);
    }
    return best;
}

// Maximum unsafe-reach probability over controllers that only use actions
// with sigma <= lambda (all actions where none qualifies).
double shielded_max_reach(const ExplicitMdp& m, const StateSet& unsafe, double lambda, std::size_t n,
                          std::size_t horizon)
{
    std::vector<std::vector<ActionId>> allowed(m.state_count());
    for (StateId s = 0; s < m.state_count(); ++s) {
        for (const auto& c : m.choices(s)) {
            double sigma = 0.0;
            for (const auto& t : c.successors) sigma += t.probability * vmin(m, unsafe, t.target, n);
            if (sigma <= lambda + 1e-12) allowed[s].push_back(c.action);
        }
        if (allowed[s].empty() || unsafe.contains(s)) allowed[s] = m.available(s);
    }
    std::function<double(StateId, std::size_t)> value = [&](StateId s, std::size_t k) -> double {
        if (unsafe.contains(s)) return 1.0;
        if (k == 0) return 0.0;
        double best = 0.0;
        for (ActionId a : allowed[s]) {
            double v = 0.0;
            for (const auto& t : m.find_choice(s, a)->successors) v += t.probability * value(t.target, k - 1);
            best = std::max(best, v);
        }
        return best;
    };
    return value(m.initial(), horizon);
}

} // namespace

TEST(WorstCase, BoundIsTight)
{
    for (double lambda : {0.1, 0.2, 0.3}) {
        const auto m = build_worst_case(lambda);
        for (std::size_t n = 1; n <= 5; ++n) {
            for (std::size_t h = 1; h <= 10; ++h) {
                const auto r = verify_theorem1(m, m.label("unsafe"), lambda, n, h);
                EXPECT_TRUE(r.initially_safe);
                EXPECT_TRUE(r.no_stuck);
                const double closed = 1.0 - std::pow(1.0 - lambda, static_cast<double>(h));
                EXPECT_NEAR(r.max_unsafe, closed, 1e-12);
                EXPECT_NEAR(r.bound, closed, 1e-15);
                EXPECT_TRUE(r.satisfied);
            }
        }
    }
}

TEST(WorstCase, RejectsDegenerateLambda)
{
    EXPECT_THROW((void)build_worst_case(0.0), InputError);
    EXPECT_THROW((void)build_worst_case(1.0), InputError);
}

TEST(Entrapment, StuckProbabilityClosedForm)
{
    for (std::size_t n : {1u, 3u, 5u}) {
        EXPECT_NEAR(entrapment_stuck_probability(0.3, 0.01, n), 0.3 / 0.31, 1e-12);
        EXPECT_NEAR(entrapment_stuck_probability(0.1, 0.05, n), 0.1 / 0.15, 1e-12);
    }
}

TEST(Entrapment, StructureAndAssumptionViolation)
{
    const std::size_t n = 3;
    const auto m = build_entrapment(0.3, 0.01, n);
    EXPECT_TRUE(validate(m).empty());
    EXPECT_EQ(m.state_count(), n + 3);
    EXPECT_EQ(m.initial(), n + 1);
    const auto st = synth_sigma(m, m.label("unsafe"), n);
    EXPECT_NEAR(st.sigma(m.initial(), 1), 0.3, 1e-15);
    EXPECT_EQ(st.sigma(m.initial(), 0), 0.0);
    const auto r = verify_theorem1(m, m.label("unsafe"), 0.3, n, 10);
    EXPECT_TRUE(r.initially_safe);
    EXPECT_FALSE(r.no_stuck);
    EXPECT_TRUE(r.satisfied);
}

TEST(Entrapment, RejectsBadParameters)
{
    EXPECT_THROW((void)build_entrapment(0.3, 0.0, 3), InputError);
    EXPECT_THROW((void)build_entrapment(0.3, 0.8, 3), InputError);
    EXPECT_THROW((void)build_entrapment(0.3, 0.01, 0), InputError);
}

TEST(Theorem1, MatchesIndependentShieldedReach)
{
    std::mt19937_64 rng(73);
    std::size_t checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto m = random_mdp(rng);
        const StateSet& unsafe = m.label("unsafe");
        for (double lambda : {0.1, 0.3}) {
            for (std::size_t n : {1u, 3u}) {
                const auto r = verify_theorem1(m, unsafe, lambda, n, 6);
                EXPECT_NEAR(r.max_unsafe, shielded_max_reach(m, unsafe, lambda, n, 6), 1e-12);
                if (r.initially_safe && r.no_stuck) {
                    ++checked;
                    EXPECT_LE(r.max_unsafe, r.bound + 1e-12);
                }
                EXPECT_TRUE(r.satisfied);
            }
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(Theorem1, SweepPassesWithFullQuota)
{
    const auto sweep = theorem1_sweep(20, 5, {0.1, 0.2, 0.3}, {1, 2, 3}, 10);
    EXPECT_TRUE(sweep.pass());
    EXPECT_EQ(sweep.short_configs, 0u);
    EXPECT_EQ(sweep.rows.size(), 3u * 3u * 10u);
    EXPECT_GE(sweep.attempts, 9u * 20u);
    for (const auto& row : sweep.rows) EXPECT_LE(row.max_unsafe, row.bound + 1e-12);
}

TEST(Theorem1, SweepIsDeterministic)
{
    const auto a = theorem1_sweep(5, 9, {0.2}, {2}, 5);
    const auto b = theorem1_sweep(5, 9, {0.2}, {2}, 5);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].max_unsafe, b.rows[i].max_unsafe);
    EXPECT_EQ(a.attempts, b.attempts);
}

TEST(Lemmas, ExactOnDeterministicCycle)
{
    const auto m = cshield::testing::cycle_model();
    const auto r = check_lemmas(m, m.label("unsafe"), 5, 1);
    EXPECT_EQ(r.occupancy, 0.0);
    EXPECT_EQ(r.absorbing, 0.0);
    EXPECT_EQ(r.end_state, 0.0);
}

TEST(Lemmas, NumericallyExactOnRandomModels)
{
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_mdp(rng, RandomMdpOptions{3, 5, 3, 3, 0.5});
        const auto r = check_lemmas(m, m.label("unsafe"), 10, static_cast<std::uint64_t>(trial));
        EXPECT_LE(r.max(), 1e-12);
        EXPECT_EQ(r.trials, 10u);
    }
}

TEST(Lemmas, ScaleLimit)
{
    const auto m = cshield::testing::cycle_model();
    EXPECT_THROW((void)check_lemmas(m, m.label("unsafe"), 1, 1, oracle_max_horizon + 1), ScaleLimitError);
}

TEST(RandomMdp, Shape)
{
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_mdp(rng);
        EXPECT_GE(m.state_count(), 2u);
        EXPECT_LE(m.state_count(), 4u);
        EXPECT_EQ(m.initial(), 1u);
        EXPECT_TRUE(m.is_absorbing(0));
        EXPECT_EQ(m.label("unsafe"), StateSet{0});
        EXPECT_TRUE(validate(m).empty());
    }
}
