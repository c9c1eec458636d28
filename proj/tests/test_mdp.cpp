#include "cshield/errors.hpp"
#include "cshield/mdp.hpp"
#include "cshield/theorem_lab.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace cshield;
using cshield::testing::all_policies;
using cshield::testing::chain_model;
using cshield::testing::random_model;

namespace {

// Optimal reach probability by searching every per-step decision rule
// (time-varying deterministic policies), recursively over the horizon.
double time_varying_oracle(const ExplicitMdp& m, const StateSet& target, StateId start, std::size_t horizon,
                           bool maximise)
{
    std::function<double(StateId, std::size_t)> value = [&](StateId s, std::size_t k) -> double {
        if (target.contains(s)) return 1.0;
        if (k == 0) return 0.0;
        double best = maximise ? 0.0 : 1.0;
        for (const auto& c : m.choices(s)) {
            double v = 0.0;
            for (const auto& t : c.successors) v += t.probability * value(t.target, k - 1);
            best = maximise ? std::max(best, v) : std::min(best, v);
        }
        return best;
    };
    return value(start, horizon);
}

} // namespace

TEST(Validate, AcceptsChain)
{
    EXPECT_TRUE(validate(chain_model()).empty());
}

TEST(Validate, RowOffByOneMillionth)
{
    ExplicitMdp m(2, {"a"}, 0);
    m.set_choice(0, 0, {{0, 0.5}, {1, 0.5 + 1e-6}});
    m.set_choice(1, 0, {{1, 1.0}});
    const auto d = validate(m);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].severity, Diagnostic::Severity::error);
    EXPECT_TRUE(has_errors(d));
}

TEST(Validate, EmptyLabelWarns)
{
    ExplicitMdp m = chain_model();
    m.set_label("never", StateSet{});
    const auto d = validate(m);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].severity, Diagnostic::Severity::warning);
    EXPECT_NE(d[0].message.find("empty label"), std::string::npos);
    EXPECT_FALSE(has_errors(d));
}

TEST(Validate, MissingChoiceAndBadInitial)
{
    ExplicitMdp m(2, {"a"}, 0);
    m.set_choice(0, 0, {{0, 1.0}});
    EXPECT_TRUE(has_errors(validate(m)));
}

TEST(BoundedReach, ChainHorizonTwo)
{
    const auto m = chain_model();
    const auto r = bounded_reach(m, m.label("target"), 2, Optimize::max);
    EXPECT_NEAR(r.values[0], 0.75, 1e-15);
    EXPECT_EQ(r.values[1], 1.0);
}

TEST(BoundedReach, HorizonZeroIsIndicator)
{
    const auto m = chain_model();
    const auto r = bounded_reach(m, m.label("target"), 0, Optimize::min);
    EXPECT_EQ(r.values, (std::vector<double>{0.0, 1.0}));
}

TEST(BoundedReach, WorstCaseRiskyActionClosedForm)
{
    ExplicitMdp m = build_worst_case(0.2);
    const auto risky = restrict_to_policy(m, MemorylessPolicy{{0, 1}});
    const auto r = bounded_reach(risky, m.label("unsafe"), 3, Optimize::max);
    EXPECT_NEAR(r.values[1], 1.0 - std::pow(0.8, 3), 1e-12);
    EXPECT_NEAR(r.values[1], 0.488, 1e-12);
    EXPECT_NEAR(enumerate_path_prob(m, MemorylessPolicy{{0, 1}}, 1, 3, m.label("unsafe")), 0.488, 1e-12);
}

TEST(BoundedReach, StagesMatchSingleHorizonCalls)
{
    std::mt19937_64 rng(11);
    const auto m = random_model(rng, 4, 2);
    const StateSet target{3};
    const auto stages = bounded_reach_stages(m, target, 6, Optimize::max);
    ASSERT_EQ(stages.size(), 7u);
    for (std::size_t h = 0; h <= 6; ++h) {
        EXPECT_EQ(stages[h], bounded_reach(m, target, h, Optimize::max).values);
    }
}

TEST(BoundedReach, MatchesTimeVaryingOracle)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = random_model(rng, 4, 3);
        const StateSet target{static_cast<StateId>(trial % 4)};
        for (std::size_t h = 0; h <= 5; ++h) {
            const auto mx = bounded_reach(m, target, h, Optimize::max);
            const auto mn = bounded_reach(m, target, h, Optimize::min);
            for (StateId s = 0; s < 4; ++s) {
                EXPECT_NEAR(mx.values[s], time_varying_oracle(m, target, s, h, true), 1e-12);
                EXPECT_NEAR(mn.values[s], time_varying_oracle(m, target, s, h, false), 1e-12);
            }
        }
    }
}

TEST(BoundedReach, MonotoneInHorizonAndMinBelowMax)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng, 5, 2);
        const StateSet target{0, 4};
        const auto mx = bounded_reach_stages(m, target, 10, Optimize::max);
        const auto mn = bounded_reach_stages(m, target, 10, Optimize::min);
        for (std::size_t h = 0; h <= 10; ++h) {
            for (StateId s = 0; s < 5; ++s) {
                EXPECT_LE(mn[h][s], mx[h][s] + 1e-15);
                if (h > 0) {
                    EXPECT_GE(mx[h][s], mx[h - 1][s] - 1e-15);
                    EXPECT_GE(mn[h][s], mn[h - 1][s] - 1e-15);
                }
            }
        }
    }
}

TEST(BoundedReach, MaxDominatesEveryMemorylessPolicy)
{
    std::mt19937_64 rng(9);
    const auto m = random_model(rng, 3, 2);
    const StateSet target{2};
    const auto mx = bounded_reach(m, target, 4, Optimize::max);
    const auto mn = bounded_reach(m, target, 4, Optimize::min);
    for (const auto& pi : all_policies(3, 2)) {
        for (StateId s = 0; s < 3; ++s) {
            const double v = enumerate_path_prob(m, pi, s, 4, target);
            EXPECT_LE(v, mx.values[s] + 1e-12);
            EXPECT_GE(v, mn.values[s] - 1e-12);
        }
    }
}

TEST(StepOccupancy, IdentityModelKeepsDistribution)
{
    ExplicitMdp m(3, {"stay"}, 0);
    for (StateId s = 0; s < 3; ++s) m.set_choice(s, 0, {{s, 1.0}});
    const OccupancyVector d{0.2, 0.3, 0.5};
    EXPECT_EQ(step_occupancy(m, MemorylessPolicy{{0, 0, 0}}, d), d);
}

TEST(StepOccupancy, PointMassGivesTransitionRow)
{
    ExplicitMdp m(3, {"a", "b"}, 0);
    m.set_choice(0, 0, {{0, 1.0}});
    m.set_choice(0, 1, {{1, 0.25}, {2, 0.75}});
    m.set_choice(1, 0, {{1, 1.0}});
    m.set_choice(2, 0, {{2, 1.0}});
    const auto d = step_occupancy(m, MemorylessPolicy{{1, 0, 0}}, point_mass(3, 0));
    EXPECT_EQ(d, (OccupancyVector{0.0, 0.25, 0.75}));
}

TEST(StepOccupancy, ChainTwoSteps)
{
    const auto m = chain_model();
    const MemorylessPolicy pi{{0, 0}};
    const auto d = step_occupancy(m, pi, step_occupancy(m, pi, point_mass(2, 0)));
    EXPECT_NEAR(d[0], 0.25, 1e-15);
    EXPECT_NEAR(d[1], 0.75, 1e-15);
}

TEST(StepOccupancy, StaysOnSimplex)
{
    std::mt19937_64 rng(13);
    const auto m = random_model(rng, 5, 2);
    MemorylessPolicy pi{{0, 1, 0, 1, 1}};
    OccupancyVector d = point_mass(5, 2);
    for (int k = 0; k < 50; ++k) {
        d = step_occupancy(m, pi, d);
        double sum = 0.0;
        for (double v : d) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(MakeAbsorbing, EmptyFreezeIsIdentity)
{
    std::mt19937_64 rng(17);
    const auto m = random_model(rng, 4, 2);
    const auto a = make_absorbing(m, StateSet{});
    for (StateId s = 0; s < 4; ++s) {
        ASSERT_EQ(a.choices(s).size(), m.choices(s).size());
        for (std::size_t i = 0; i < m.choices(s).size(); ++i) {
            EXPECT_EQ(a.choices(s)[i].action, m.choices(s)[i].action);
            ASSERT_EQ(a.choices(s)[i].successors.size(), m.choices(s)[i].successors.size());
        }
    }
}

TEST(MakeAbsorbing, FreezeAllSelfLoops)
{
    std::mt19937_64 rng(19);
    const auto m = random_model(rng, 4, 2);
    const auto a = make_absorbing(m, StateSet::range(0, 4));
    for (StateId s = 0; s < 4; ++s) {
        EXPECT_TRUE(a.is_absorbing(s));
        EXPECT_EQ(a.available(s), m.available(s));
    }
}

TEST(MakeAbsorbing, ChainHitEqualsEndMass)
{
    const auto m = chain_model();
    const auto a = make_absorbing(m, StateSet{1});
    const MemorylessPolicy pi{{0, 0}};
    OccupancyVector d = point_mass(2, 0);
    for (std::size_t k = 0; k <= 8; ++k) {
        EXPECT_NEAR(enumerate_path_prob(m, pi, 0, k, StateSet{1}), d[1], 1e-12);
        d = step_occupancy(a, pi, d);
    }
}

TEST(EnumeratePathProb, TrivialAndChain)
{
    const auto m = chain_model();
    const MemorylessPolicy pi{{0, 0}};
    EXPECT_EQ(enumerate_path_prob(m, pi, 0, 3, StateSet{0}), 1.0);
    EXPECT_NEAR(enumerate_path_prob(m, pi, 0, 2, StateSet{1}), 0.75, 1e-15);
}

TEST(EnumeratePathProb, BoundedAndMonotone)
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = random_model(rng, 4, 2);
        const MemorylessPolicy pi{{1, 0, 1, 0}};
        double prev = 0.0;
        for (std::size_t h = 0; h <= 7; ++h) {
            const double v = enumerate_path_prob(m, pi, 0, h, StateSet{3});
            EXPECT_GE(v, prev - 1e-15);
            EXPECT_LE(v, 1.0 + 1e-12);
            prev = v;
        }
    }
}

TEST(EnumeratePathProb, ScaleLimit)
{
    const auto m = chain_model();
    EXPECT_THROW((void)enumerate_path_prob(m, MemorylessPolicy{{0, 0}}, 0, oracle_max_horizon + 1, StateSet{1}),
                 ScaleLimitError);
}

TEST(Policy, RejectsUnavailableAction)
{
    const auto m = chain_model();
    EXPECT_THROW(check_policy(m, MemorylessPolicy{{1, 0}}), InputError);
    EXPECT_THROW(check_policy(m, MemorylessPolicy{{0}}), InputError);
}
