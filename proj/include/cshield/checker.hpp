#pragma once

#include "cshield/mdp.hpp"

#include <cstddef>
#include <vector>

namespace cshield {

struct PropertyResult
{
    enum class Mode { fixed_policy, worst_case };

    std::size_t horizon = 0;
    double p_fail = 0.0;
    double p_stuck = 0.0;
    double p_success = 0.0;
    Mode mode = Mode::fixed_policy;
};

// Bounded fail / stuck / success probabilities from the initial state of a
// model labeled "fail" and "stuck". Models with a single choice per state are
// evaluated as fixed-policy chains; otherwise fail and stuck are maximised by
// independent adversaries and success is the minimum survival probability.
// One backward-induction sweep per property serves every horizon.
[[nodiscard]] std::vector<PropertyResult> check_properties(const ExplicitMdp& m, const std::vector<std::size_t>& horizons);

[[nodiscard]] bool has_single_choice_per_state(const ExplicitMdp& m);

} // namespace cshield
