#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/core/geometry.hpp"
#include "stpp/score/hyvarinen.hpp"
#include "stpp/score/model.hpp"
#include "stpp/score/weight.hpp"

namespace stpp::detect {

struct ScoredEvent {
    core::Event event;
    double delta_value{0.0};
};

// Windows are index ranges [begin, n) over the events seen so far, the newest
// event included. begin == n is the empty window (value 0).

// Fast membership for a RegionUnion: boxes bucketed on a uniform grid, excluded
// points in a hash set. Agrees exactly with RegionUnion::contains. Keeps its own
// copy of the region.
class RegionLookup {
public:
    RegionLookup(const core::RegionUnion& region, const core::Box& bounds, double cell);
    [[nodiscard]] bool contains(const core::Point& p) const;

private:
    struct PointHash {
        std::size_t operator()(const core::Point& p) const;
    };
    std::vector<core::Box> boxes_;
    core::Box bounds_;
    double cell_;
    int nx_{1}, ny_{1};
    std::vector<std::vector<std::uint32_t>> cells_;
    std::unordered_set<core::Point, PointHash> excluded_;
};

// I-step: δ-boxes around window events with Δ > 0; window events with Δ < 0 are
// excluded points. Empty region when no window event has Δ > 0.
[[nodiscard]] core::RegionUnion istep(std::span<const ScoredEvent> scored, std::size_t begin,
                                      double delta, const core::Domain& domain);

// O-step: begin index in [0, n] maximizing the sum of Δ over events with index
// >= begin inside the region. One backward pass; ties go to the latest begin.
[[nodiscard]] std::size_t ostep(std::span<const ScoredEvent> scored, const core::RegionUnion& region,
                                const core::Domain& domain, double cell);

// Σ Δ over window events inside the region (index order).
[[nodiscard]] double statistic(std::span<const ScoredEvent> scored, std::size_t begin,
                               const core::RegionUnion& region);

// Time-valued change-point estimate of a window: the time of its first event,
// or the time of the newest event for an empty window.
[[nodiscard]] double window_time(std::span<const ScoredEvent> scored, std::size_t begin);

struct AlternationResult {
    std::size_t begin{0};
    core::RegionUnion region;
    double value{0.0};
    std::vector<double> values;  // statistic after each alternation
};

// K alternations of I-step and O-step starting from `begin0`.
[[nodiscard]] AlternationResult alternate(std::span<const ScoredEvent> scored, std::size_t begin0, int K,
                                          double delta, const core::Domain& domain);

struct DetectorOptions {
    double gamma{1.0};
    int K{5};
    // Start each step from the previous estimate instead of index 0.
    bool warm_start{false};

    void validate() const;
};

struct DetectionResult {
    bool detected{false};
    std::optional<double> nu;  // stopping time, unset when the horizon was exhausted
    std::size_t stop_index{0};  // index of the stopping (or last) event
    double tau_hat{0.0};
    core::RegionUnion omega_hat;
    std::vector<double> times;
    std::vector<double> stats;

    [[nodiscard]] nlohmann::json to_json() const;
    static DetectionResult from_json(const nlohmann::json& j);
    void write_trajectory_csv(const std::string& path) const;
};

// Δ for every event of the stream under the two models.
[[nodiscard]] std::vector<ScoredEvent> score_stream(const core::EventStream& stream,
                                                    const score::ScoreModel& model0,
                                                    const score::ScoreModel& model1,
                                                    const score::WeightConfig& wcfg);

// Detection over pre-scored events. Stops at the first event with W >= gamma.
[[nodiscard]] DetectionResult detect_scored(std::span<const ScoredEvent> scored, double delta,
                                            const core::Domain& domain, const DetectorOptions& opts);

// Algorithm 1: scoring, alternation, stopping.
[[nodiscard]] DetectionResult run_detector(const core::EventStream& stream, const score::ScoreModel& model0,
                                           const score::ScoreModel& model1, const score::WeightConfig& wcfg,
                                           const DetectorOptions& opts);

struct OnlineOptions {
    double eta{1e-3};
    int steps_per_event{1};
    double sigma{0.02};  // DSM noise level of the updates
    std::size_t batch_cap{128};  // most recent qualifying events per step
    std::uint64_t seed{0};

    void validate() const;
};

// Algorithm 2: the post-change model starts as a copy of the (neural) pre-change
// model and is refitted after every event on the events of the current window
// and region. Throws ConfigError for non-neural models and DivergenceError when
// an update diverges.
[[nodiscard]] DetectionResult run_online_detector(const core::EventStream& stream,
                                                  const score::ScoreModel& model0,
                                                  const score::WeightConfig& wcfg,
                                                  const DetectorOptions& opts,
                                                  const OnlineOptions& online);

}  // namespace stpp::detect
