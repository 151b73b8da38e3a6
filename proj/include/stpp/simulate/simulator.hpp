#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/core/geometry.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::sim {

// Base-rate change from pre.mu to post.mu at time tau inside omega.
struct ChangeScenario {
    HawkesParams pre{};
    HawkesParams post{};
    double tau{0.5};
    core::RegionUnion omega{};
    core::Domain domain{};

    // Throws ConfigError on invalid parameters or when the regimes differ in
    // anything other than mu.
    void validate() const;
    [[nodiscard]] double base_rate(double t, const core::Point& s) const;
    // Same scenario with no change inside the horizon.
    [[nodiscard]] ChangeScenario without_change() const;
};

// Scenario of the synthetic study: unit box, T=1, tau=0.5, Omega=[0.4,0.6]^2,
// mu0=100, mu1=1000, beta=0.1, Gaussian spatial kernel of bandwidth 0.02.
[[nodiscard]] ChangeScenario reference_scenario(double alpha = 0.0);

// λ(x) = μ(x) + α Σ κ(x, x') over `history`, evaluated directly.
// Throws ConfigError when history is unordered or not strictly before x.
[[nodiscard]] double intensity_at(const ChangeScenario& sc, const core::Event& x,
                                  const core::EventStream& history);

struct SimulationOptions {
    std::size_t max_events{1'000'000};
};

// Thinning sampler; deterministic for a given (seed, index). Throws BudgetError
// once the stream would exceed max_events.
[[nodiscard]] core::EventStream simulate(const ChangeScenario& sc, std::uint64_t seed,
                                         std::uint64_t index = 0,
                                         const SimulationOptions& opts = {});

// Λ over [t_a, t_b) × S given the stream (events before t_b are history).
[[nodiscard]] double compensator(const ChangeScenario& sc, const core::EventStream& stream,
                                 double t_a, double t_b);

// Λ between consecutive events (first entry from 0 to t_1), for time rescaling.
[[nodiscard]] std::vector<double> rescaled_gaps(const ChangeScenario& sc,
                                                const core::EventStream& stream);

[[nodiscard]] nlohmann::json params_to_json(const HawkesParams& p);
[[nodiscard]] HawkesParams params_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json scenario_to_json(const ChangeScenario& sc);
[[nodiscard]] ChangeScenario scenario_from_json(const nlohmann::json& j);

}  // namespace stpp::sim
