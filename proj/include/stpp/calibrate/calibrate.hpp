#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/detect/detector.hpp"
#include "stpp/simulate/simulator.hpp"

namespace stpp::calibrate {

// One detector run at a threshold. With gamma = +inf the whole trajectory is
// recorded. The statistic must not depend on gamma before stopping, so first
// passages can be read off an unstopped trajectory.
using Detector = std::function<detect::DetectionResult(const core::EventStream&, double gamma)>;

struct CalibrationConfig {
    std::size_t n_trials{200};
    double horizon{2.0};
    double target_arl{5.0};
    std::uint64_t seed{0};
    std::size_t jobs{0};  // 0: default parallelism

    void validate() const;
};

[[nodiscard]] nlohmann::json calibration_config_to_json(const CalibrationConfig& c);
[[nodiscard]] CalibrationConfig calibration_config_from_json(const nlohmann::json& j);

// Unstopped statistic path of one stream.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> stats;
    std::size_t events{0};

    [[nodiscard]] double max() const;
    // First time with statistic >= gamma.
    [[nodiscard]] std::optional<double> first_passage(double gamma) const;
};

// The scenario with no change, run to `horizon`.
[[nodiscard]] sim::ChangeScenario null_scenario(const sim::ChangeScenario& sc, double horizon);

// Unstopped trajectories of streams (seed, i) for i in [0, n), simulated from
// the no-change version of `sc` over [0, horizon]. Order follows i.
[[nodiscard]] std::vector<Trajectory> null_trajectories(const Detector& detector, const sim::ChangeScenario& sc,
                                                        std::size_t n, double horizon, std::uint64_t seed,
                                                        std::size_t jobs = 0);

// Linear-interpolation (type 7) empirical quantile, p in [0, 1].
[[nodiscard]] double quantile(std::vector<double> values, double p);

struct CalibrationReport {
    CalibrationConfig config;
    double mean_events{0.0};  // N̄
    double event_rate{0.0};   // N̄ / horizon
    double level{0.0};        // exp(-N̄ / (target_arl · rate))
    double gamma{0.0};
    std::vector<double> w_max;

    [[nodiscard]] nlohmann::json to_json(std::size_t histogram_bins = 20) const;
};

// Quantile of the maxima at level exp(-N̄/λ), λ = target_arl × mean event rate.
// Throws ConfigError when the level is not in (0, 1] or is below 1/N₁.
[[nodiscard]] CalibrationReport calibrate_from_trajectories(const std::vector<Trajectory>& null_runs,
                                                            const CalibrationConfig& cfg);

[[nodiscard]] CalibrationReport calibrate_threshold(const Detector& detector, const sim::ChangeScenario& sc,
                                                    const CalibrationConfig& cfg);

struct ArlEstimate {
    double arl{0.0};
    std::size_t n_trials{0};
    std::size_t n_censored{0};
    std::vector<double> stopping_times;  // censored trials contribute the horizon

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] ArlEstimate empirical_arl(const std::vector<Trajectory>& null_runs, double gamma, double horizon);

[[nodiscard]] ArlEstimate empirical_arl(const Detector& detector, const sim::ChangeScenario& sc, double gamma,
                                        std::size_t n_trials, double horizon, std::uint64_t seed,
                                        std::size_t jobs = 0);

// Smallest threshold in [lo, hi] (to bisection tolerance) whose empirical ARL
// over `null_runs` reaches `target_arl`. Returns hi when even hi falls short.
[[nodiscard]] double gamma_for_arl(const std::vector<Trajectory>& null_runs, double target_arl, double horizon,
                                   double lo, double hi, int iterations = 60);

}  // namespace stpp::calibrate
