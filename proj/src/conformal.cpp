#include "cshield/conformal.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace cshield {

void check_sample(const ScoredSample& s, std::size_t class_count)
{
    if (s.scores.size() != class_count) {
        throw InputError(fmt::format("sample has {} scores, expected {}", s.scores.size(), class_count));
    }
    if (s.true_state >= class_count) {
        throw InputError(fmt::format("true state {} outside the {} perception classes", s.true_state, class_count));
    }
    double sum = 0.0;
    for (double p : s.scores) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("score {} outside [0,1]", p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InputError(fmt::format("scores sum to {:.9g}, expected 1", sum));
}

ConformalModel calibrate(std::span<const ScoredSample> samples, double alpha)
{
    if (samples.empty()) throw InputError("empty calibration set");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError(fmt::format("alpha {} outside (0,1)", alpha));
    const std::size_t classes = samples.front().scores.size();
    std::vector<double> nonconformity;
    nonconformity.reserve(samples.size());
    for (const auto& s : samples) {
        check_sample(s, classes);
        nonconformity.push_back(1.0 - s.scores[s.true_state]);
    }
    std::sort(nonconformity.begin(), nonconformity.end());

    const std::size_t n = samples.size();
    // The epsilon keeps exact integers (in real arithmetic) from rounding up.
    const double rank = std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-9);
    ConformalModel cm;
    cm.alpha = alpha;
    cm.calibration_size = n;
    const auto k = static_cast<std::size_t>(std::max(rank, 1.0));
    if (k <= n) cm.q_hat = nonconformity[k - 1];
    return cm;
}

StateSet point_estimate(std::span<const double> scores)
{
    if (scores.empty()) throw InputError("empty score vector");
    const auto it = std::max_element(scores.begin(), scores.end());
    return StateSet::singleton(static_cast<StateId>(std::distance(scores.begin(), it)));
}

StateSet predict_set(const ConformalModel& cm, std::span<const double> scores)
{
    if (cm.saturated()) return StateSet::range(0, static_cast<StateId>(scores.size()));
    StateSet out;
    for (std::size_t s = 0; s < scores.size(); ++s) {
        if (1.0 - scores[s] <= *cm.q_hat) out.insert(static_cast<StateId>(s));
    }
    if (out.empty()) return point_estimate(scores);
    return out;
}

CoverageReport coverage(const ConformalModel& cm, std::span<const ScoredSample> test)
{
    if (test.empty()) throw InputError("empty test set");
    CoverageReport r;
    r.samples = test.size();
    std::size_t covered = 0;
    std::size_t total_size = 0;
    for (const auto& s : test) {
        const StateSet set = predict_set(cm, s.scores);
        if (set.contains(s.true_state)) ++covered;
        const std::size_t size = set.count();
        total_size += size;
        ++r.size_histogram[size];
    }
    r.coverage = static_cast<double>(covered) / static_cast<double>(test.size());
    r.mean_set_size = static_cast<double>(total_size) / static_cast<double>(test.size());
    return r;
}

void SetConfusion::add(StateId actual, const StateSet& predicted, std::size_t n)
{
    counts[{actual, predicted}] += n;
    totals[actual] += n;
}

SetConfusion build_set_confusion(const ConformalModel& cm, std::span<const ScoredSample> test)
{
    if (test.empty()) throw InputError("empty test set");
    SetConfusion c;
    for (const auto& s : test) c.add(s.true_state, predict_set(cm, s.scores));
    return c;
}

SetConfusion build_point_confusion(std::span<const ScoredSample> test)
{
    if (test.empty()) throw InputError("empty test set");
    SetConfusion c;
    for (const auto& s : test) c.add(s.true_state, point_estimate(s.scores));
    return c;
}

} // namespace cshield
