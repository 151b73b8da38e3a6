#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stpp/calibrate/calibrate.hpp"
#include "stpp/detect/detector.hpp"
#include "stpp/score/neural.hpp"
#include "stpp/simulate/simulator.hpp"

namespace stpp::cli {

inline constexpr int kConfigVersion = 1;

struct DetectorSpec {
    std::string kind{"primary"};  // primary, cusum, scusum, pp-cusum, min-cusum
    double delta{0.1};
    int K{5};
    bool warm_start{false};
    std::optional<double> gamma;  // unset: infinite
    score::WeightConfig weight{};
    std::string score{"analytic"};         // analytic or neural
    std::string post_model{"regional"};    // analytic post-change model: regional or global
    std::string checkpoint_pre;
    std::string checkpoint_post;
    int grid{5};
    double dt_bin{0.01};
    std::string aggregation{"sum"};
    detect::OnlineOptions online{};
};

struct EvaluationSpec {
    std::size_t n_trials{100};
    std::size_t n_null_trials{200};
    double arl_horizon{10.0};
    // Multipliers of each detector's calibrated threshold.
    std::vector<double> gamma_factors{0.5, 0.75, 1.0, 1.25, 1.5};
    std::vector<double> snapshot_times{0.25, 0.5, 0.75, 1.0};
    std::vector<std::string> detectors{"primary"};
};

struct RunConfig {
    int version{kConfigVersion};
    std::uint64_t seed{0};
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir{"out"};
    sim::ChangeScenario scenario{sim::reference_scenario()};
    DetectorSpec detector{};
    score::DSMConfig training{};
    calibrate::CalibrationConfig calibration{};
    EvaluationSpec evaluation{};
};

// Throws ConfigError on unknown keys, a missing or unsupported version, or bad values.
[[nodiscard]] RunConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const RunConfig& c);

[[nodiscard]] double parse_gamma(const std::string& text);

// Detector of the given kind built from the config (models loaded or fitted as needed).
[[nodiscard]] calibrate::Detector make_detector(const RunConfig& cfg, const std::string& kind, bool online = false);

}  // namespace stpp::cli
