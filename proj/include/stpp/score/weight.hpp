#pragma once

#include <array>
#include <optional>
#include <string>

#include "stpp/core/events.hpp"

namespace stpp::score {

using Vec3 = std::array<double, 3>;

enum class WeightMode { CoordinateBoundaryDistance, TemporalOnly, ScalarLinf };

[[nodiscard]] std::string weight_mode_name(WeightMode m);
[[nodiscard]] WeightMode weight_mode_from_name(const std::string& name);

struct WeightConfig {
    WeightMode mode{WeightMode::CoordinateBoundaryDistance};
    std::optional<double> cap{};

    void validate() const;
};

// Boundary-vanishing weight at (dt, s).
[[nodiscard]] Vec3 weight(const core::TransformedEvent& xt, const core::Domain& domain,
                          const WeightConfig& cfg);

// Diagonal of the weight Jacobian, (∂w_t/∂dt, ∂w_1/∂s1, ∂w_2/∂s2), defined almost everywhere.
[[nodiscard]] Vec3 weight_diag_gradient(const core::TransformedEvent& xt,
                                        const core::Domain& domain, const WeightConfig& cfg);

}  // namespace stpp::score
