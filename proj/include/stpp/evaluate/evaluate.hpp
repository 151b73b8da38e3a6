#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stpp/calibrate/calibrate.hpp"
#include "stpp/core/events.hpp"
#include "stpp/core/geometry.hpp"
#include "stpp/detect/detector.hpp"
#include "stpp/simulate/simulator.hpp"

namespace stpp::evaluate {

struct TrialRecord {
    std::uint64_t seed{0};
    std::uint64_t index{0};
    std::size_t events{0};
    double runtime_seconds{0.0};
    detect::DetectionResult result;
};

struct TrialBatch {
    sim::ChangeScenario scenario;
    std::string detector;
    nlohmann::json detector_config = nlohmann::json::object();
    double gamma{0.0};
    std::vector<TrialRecord> trials;  // ordered by index

    [[nodiscard]] nlohmann::json to_json() const;
};

// Trials i in [0, n) on streams simulate(scenario, seed, i), run at threshold gamma.
[[nodiscard]] TrialBatch run_batch(const sim::ChangeScenario& scenario, const std::string& name,
                                   const calibrate::Detector& detector, double gamma, std::size_t n_trials,
                                   std::uint64_t seed, std::size_t jobs = 0);

struct EddReport {
    std::optional<double> edd;           // mean ν - τ over trials with ν > τ
    std::optional<double> edd_censored;  // horizon-exhausted trials counted as T - τ
    std::size_t n_detected{0};
    std::size_t n_false_alarms{0};
    std::size_t n_exhausted{0};
    double false_alarm_rate{0.0};

    [[nodiscard]] nlohmann::json to_json() const;
};

// Requires τ < T.
[[nodiscard]] EddReport edd(const TrialBatch& batch);

struct JaccardReport {
    std::optional<double> mean;  // over trials detected after τ
    std::size_t n{0};

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] JaccardReport jaccard_at_stop(const TrialBatch& batch, const core::RegionUnion& truth);

// min{|Ω| / |Ω ⊕ B_δ|, |Ω ⊖ B_δ| / |Ω|} within `bounds`.
[[nodiscard]] double jaccard_lower_bound(const core::RegionUnion& omega, double delta, const core::Box& bounds);

[[nodiscard]] double mean_runtime(const TrialBatch& batch);

struct TradeoffPoint {
    double gamma{0.0};
    double arl{0.0};
    std::size_t arl_censored{0};
    std::optional<double> edd;
    std::optional<double> jaccard;
    double false_alarm_rate{0.0};
    double mean_runtime{0.0};
};

struct TradeoffOptions {
    std::size_t n_trials{100};      // change trials per threshold
    std::size_t n_null_trials{200}; // pre-change trials (shared by all thresholds)
    double arl_horizon{10.0};
    std::uint64_t seed{0};
    std::size_t jobs{0};
};

// For each threshold: ARL from shared pre-change trajectories (first passage),
// EDD and Jaccard from change trials on common random numbers.
[[nodiscard]] std::vector<TradeoffPoint> tradeoff_curve(const sim::ChangeScenario& scenario,
                                                        const calibrate::Detector& detector,
                                                        const std::vector<double>& gamma_grid,
                                                        const TradeoffOptions& opts);

void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffPoint>& points);

struct Curve {
    std::string label;
    std::vector<TradeoffPoint> points;
};

enum class Metric { Edd, Jaccard };

// Metric against ARL with a log-scaled x axis; one chart per file.
void write_tradeoff_svg(const std::string& path, const std::vector<Curve>& curves, Metric metric);

struct Snapshot {
    double t{0.0};
    core::RegionUnion region;
};

// Region estimate at each snapshot time t, from the detector run with γ = ∞ on
// the events before t.
[[nodiscard]] std::vector<Snapshot> region_evolution(const core::EventStream& stream,
                                                     const calibrate::Detector& detector,
                                                     const std::vector<double>& snapshot_times);

// Events up to the snapshot time, the true region outlined and the estimate filled.
void write_region_svg(const std::string& path, const Snapshot& snapshot, const core::EventStream& stream,
                      const core::RegionUnion& truth, const core::Box& bounds);

}  // namespace stpp::evaluate
