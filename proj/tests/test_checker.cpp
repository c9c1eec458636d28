#include "cshield/checker.hpp"
#include "cshield/errors.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cshield;

namespace {

// s0 reaches fail with probability `pf` and stuck with `ps` per step.
ExplicitMdp leaky(double pf, double ps)
{
    ExplicitMdp m(3, {"go"}, 0);
    m.set_choice(0, 0, {{0, 1.0 - pf - ps}, {1, pf}, {2, ps}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_choice(2, 0, {{2, 1.0}});
    m.set_label("fail", StateSet{1});
    m.set_label("stuck", StateSet{2});
    return m;
}

// Random chain over `states` transient states plus fail and stuck terminals.
ExplicitMdp random_chain(std::mt19937_64& rng, std::size_t states)
{
    auto base = cshield::testing::random_model(rng, states + 2, 1);
    ExplicitMdp m(states + 2, {"go"}, 0);
    for (StateId s = 0; s < states; ++s) {
        std::vector<Transition> row(base.choices(s)[0].successors.begin(), base.choices(s)[0].successors.end());
        m.set_choice(s, 0, row);
    }
    const auto fail = static_cast<StateId>(states);
    const auto stuck = static_cast<StateId>(states + 1);
    m.set_choice(fail, 0, {{fail, 1.0}});
    m.set_choice(stuck, 0, {{stuck, 1.0}});
    m.set_label("fail", StateSet{fail});
    m.set_label("stuck", StateSet{stuck});
    return m;
}

} // namespace

TEST(CheckProperties, HorizonZero)
{
    const auto r = check_properties(leaky(0.3, 0.1), {0})[0];
    EXPECT_EQ(r.p_fail, 0.0);
    EXPECT_EQ(r.p_stuck, 0.0);
    EXPECT_EQ(r.p_success, 1.0);
}

TEST(CheckProperties, FixedPolicyClosedForm)
{
    const auto m = leaky(0.3, 0.0);
    for (const auto& r : check_properties(m, {1, 2, 5, 10})) {
        const double n = static_cast<double>(r.horizon);
        EXPECT_EQ(r.mode, PropertyResult::Mode::fixed_policy);
        EXPECT_NEAR(r.p_fail, 1.0 - std::pow(0.7, n), 1e-12);
        EXPECT_EQ(r.p_stuck, 0.0);
        EXPECT_NEAR(r.p_success, std::pow(0.7, n), 1e-12);
    }
}

TEST(CheckProperties, FailAndStuckSplit)
{
    const auto m = leaky(0.2, 0.1);
    for (const auto& r : check_properties(m, {1, 4, 9})) {
        const double stay = std::pow(0.7, static_cast<double>(r.horizon));
        EXPECT_NEAR(r.p_fail, (1.0 - stay) * 2.0 / 3.0, 1e-12);
        EXPECT_NEAR(r.p_stuck, (1.0 - stay) / 3.0, 1e-12);
        EXPECT_NEAR(r.p_success, stay, 1e-12);
    }
}

TEST(CheckProperties, WorstCaseAdversaries)
{
    ExplicitMdp m(3, {"risky", "blocked"}, 0);
    m.set_choice(0, 0, {{0, 0.7}, {1, 0.3}});
    m.set_choice(0, 1, {{0, 0.5}, {2, 0.5}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_choice(2, 0, {{2, 1.0}});
    m.set_label("fail", StateSet{1});
    m.set_label("stuck", StateSet{2});
    for (const auto& r : check_properties(m, {1, 3, 6})) {
        const double n = static_cast<double>(r.horizon);
        EXPECT_EQ(r.mode, PropertyResult::Mode::worst_case);
        EXPECT_NEAR(r.p_fail, 1.0 - std::pow(0.7, n), 1e-12);
        EXPECT_NEAR(r.p_stuck, 1.0 - std::pow(0.5, n), 1e-12);
        EXPECT_NEAR(r.p_success, std::pow(0.5, n), 1e-12);
    }
}

TEST(CheckProperties, FixedPolicyMatchesForwardPropagation)
{
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_chain(rng, 4);
        const MemorylessPolicy pi{std::vector<ActionId>(6, 0)};
        std::vector<std::size_t> horizons;
        for (std::size_t h = 0; h <= 15; ++h) horizons.push_back(h);
        const auto results = check_properties(m, horizons);
        OccupancyVector d = point_mass(6, 0);
        for (const auto& r : results) {
            EXPECT_NEAR(r.p_fail, d[4], 1e-12);
            EXPECT_NEAR(r.p_stuck, d[5], 1e-12);
            EXPECT_NEAR(r.p_success, d[0] + d[1] + d[2] + d[3], 1e-12);
            EXPECT_NEAR(r.p_fail + r.p_stuck + r.p_success, 1.0, 1e-12);
            d = step_occupancy(m, pi, d);
        }
    }
}

TEST(CheckProperties, MonotoneInHorizon)
{
    std::mt19937_64 rng(71);
    const auto m = random_chain(rng, 5);
    std::vector<std::size_t> horizons;
    for (std::size_t h = 0; h <= 30; ++h) horizons.push_back(h);
    const auto results = check_properties(m, horizons);
    for (std::size_t i = 1; i < results.size(); ++i) {
        EXPECT_GE(results[i].p_fail, results[i - 1].p_fail - 1e-15);
        EXPECT_GE(results[i].p_stuck, results[i - 1].p_stuck - 1e-15);
        EXPECT_LE(results[i].p_success, results[i - 1].p_success + 1e-15);
        EXPECT_GE(results[i].p_success, 0.0);
    }
}

TEST(CheckProperties, HorizonOrderPreserved)
{
    const auto r = check_properties(leaky(0.3, 0.0), {5, 1, 3});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].horizon, 5u);
    EXPECT_EQ(r[1].horizon, 1u);
    EXPECT_EQ(r[2].horizon, 3u);
    EXPECT_TRUE(check_properties(leaky(0.3, 0.0), {}).empty());
}

TEST(CheckProperties, RequiresLabels)
{
    ExplicitMdp m(1, {"stay"}, 0);
    m.set_choice(0, 0, {{0, 1.0}});
    m.set_label("fail", StateSet{});
    EXPECT_THROW((void)check_properties(m, {1}), InputError);
}
