#pragma once

#include "cshield/state_set.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cshield {

// Classifier output for one observation. Class i stands for StateId i.
struct ScoredSample
{
    StateId true_state = 0;
    std::vector<double> scores;
};

// Split-conformal calibration result. q_hat is empty when the calibration
// set is too small for the requested coverage (prediction sets saturate to
// every class).
struct ConformalModel
{
    double alpha = 0.1;
    std::optional<double> q_hat;
    std::size_t calibration_size = 0;

    [[nodiscard]] bool saturated() const { return !q_hat.has_value(); }
};

// k-th smallest nonconformity score 1 - scores[true_state] with
// k = ceil((n + 1)(1 - alpha)).
[[nodiscard]] ConformalModel calibrate(std::span<const ScoredSample> samples, double alpha);

// {s | 1 - scores[s] <= q_hat}; argmax singleton if that would be empty.
[[nodiscard]] StateSet predict_set(const ConformalModel& cm, std::span<const double> scores);

[[nodiscard]] StateSet point_estimate(std::span<const double> scores);

struct CoverageReport
{
    std::size_t samples = 0;
    double coverage = 0.0;
    double mean_set_size = 0.0;
    std::map<std::size_t, std::size_t> size_histogram;
};

[[nodiscard]] CoverageReport coverage(const ConformalModel& cm, std::span<const ScoredSample> test);

// Tally of realized prediction sets per actual state.
struct SetConfusion
{
    std::map<std::pair<StateId, StateSet>, std::size_t> counts;
    std::map<StateId, std::size_t> totals;

    void add(StateId actual, const StateSet& predicted, std::size_t n = 1);
};

[[nodiscard]] SetConfusion build_set_confusion(const ConformalModel& cm, std::span<const ScoredSample> test);

// Confusion over argmax point estimates (no conformalization).
[[nodiscard]] SetConfusion build_point_confusion(std::span<const ScoredSample> test);

// Throws InputError if a sample is malformed for `class_count` classes.
void check_sample(const ScoredSample& s, std::size_t class_count);

} // namespace cshield
