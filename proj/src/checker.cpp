#include "cshield/checker.hpp"

#include "cshield/errors.hpp"

#include <algorithm>

namespace cshield {

bool has_single_choice_per_state(const ExplicitMdp& m)
{
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (m.choices(s).size() != 1) return false;
    }
    return true;
}

std::vector<PropertyResult> check_properties(const ExplicitMdp& m, const std::vector<std::size_t>& horizons)
{
    if (!m.has_label("fail") || !m.has_label("stuck")) {
        throw InputError("model must define labels \"fail\" and \"stuck\"");
    }
    std::vector<PropertyResult> out;
    if (horizons.empty()) return out;
    const std::size_t max_h = *std::max_element(horizons.begin(), horizons.end());

    const StateSet& fail = m.label("fail");
    const StateSet& stuck = m.label("stuck");
    const auto p_fail = bounded_reach_stages(m, fail, max_h, Optimize::max);
    const auto p_stuck = bounded_reach_stages(m, stuck, max_h, Optimize::max);
    const auto p_end = bounded_reach_stages(m, fail | stuck, max_h, Optimize::max);
    const auto mode =
        has_single_choice_per_state(m) ? PropertyResult::Mode::fixed_policy : PropertyResult::Mode::worst_case;

    const StateId init = m.initial();
    for (std::size_t h : horizons) {
        out.push_back(PropertyResult{h, p_fail[h][init], p_stuck[h][init], std::clamp(1.0 - p_end[h][init], 0.0, 1.0), mode});
    }
    return out;
}

} // namespace cshield
