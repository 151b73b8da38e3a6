#include "stpp/detect/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "stpp/error.hpp"
#include "stpp/io/json.hpp"
#include "stpp/score/neural.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::detect {

using nlohmann::json;

std::size_t RegionLookup::PointHash::operator()(const core::Point& p) const {
    // Adding 0.0 maps -0.0 to +0.0 so equal points hash equally.
    const auto hx = std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(p.x + 0.0));
    const auto hy = std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(p.y + 0.0));
    return hx ^ (hy + 0x9e3779b97f4a7c15ULL + (hx << 6) + (hx >> 2));
}

RegionLookup::RegionLookup(const core::RegionUnion& region, const core::Box& bounds, double cell)
    : boxes_(region.boxes()), bounds_(bounds) {
    // Cap the grid so large regions do not allocate huge tables.
    const double span = std::max(bounds.width(), bounds.height());
    cell_ = std::max(cell, span / 256.0);
    nx_ = std::max(1, static_cast<int>(std::ceil(bounds.width() / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(bounds.height() / cell_)));
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    auto clampi = [](int v, int hi) { return std::min(std::max(v, 0), hi - 1); };
    for (std::uint32_t k = 0; k < boxes_.size(); ++k) {
        const auto& b = boxes_[k];
        const int i0 = clampi(static_cast<int>(std::floor((b.x0 - bounds_.x0) / cell_)), nx_);
        const int i1 = clampi(static_cast<int>(std::floor((b.x1 - bounds_.x0) / cell_)), nx_);
        const int j0 = clampi(static_cast<int>(std::floor((b.y0 - bounds_.y0) / cell_)), ny_);
        const int j1 = clampi(static_cast<int>(std::floor((b.y1 - bounds_.y0) / cell_)), ny_);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) cells_[static_cast<std::size_t>(i) * ny_ + j].push_back(k);
    }
    excluded_.insert(region.excluded().begin(), region.excluded().end());
}

bool RegionLookup::contains(const core::Point& p) const {
    if (excluded_.count(p)) return false;
    // Bucketing is monotone in the coordinate, so a box containing p is
    // registered in p's (clamped) cell.
    auto clampi = [](int v, int hi) { return std::min(std::max(v, 0), hi - 1); };
    const int i = clampi(static_cast<int>(std::floor((p.x - bounds_.x0) / cell_)), nx_);
    const int j = clampi(static_cast<int>(std::floor((p.y - bounds_.y0) / cell_)), ny_);
    for (auto k : cells_[static_cast<std::size_t>(i) * ny_ + j])
        if (boxes_[k].contains(p)) return true;
    return false;
}

core::RegionUnion istep(std::span<const ScoredEvent> scored, std::size_t begin, double delta,
                        const core::Domain& domain) {
    core::RegionUnion region;
    bool any_positive = false;
    for (std::size_t j = begin; j < scored.size(); ++j) {
        const auto& e = scored[j];
        if (e.delta_value > 0.0) {
            region.add_box(core::neighborhood(e.event.s, delta, domain));
            any_positive = true;
        } else if (e.delta_value < 0.0) {
            region.add_excluded(e.event.s);
        }
    }
    if (!any_positive) return {};
    return region;
}

namespace {

std::size_t ostep_lookup(std::span<const ScoredEvent> scored, const RegionLookup& lookup) {
    const std::size_t n = scored.size();
    std::size_t best_begin = n;
    double best = 0.0, suffix = 0.0;
    for (std::size_t b = n; b-- > 0;) {
        if (lookup.contains(scored[b].event.s)) suffix += scored[b].delta_value;
        if (suffix > best) {
            best = suffix;
            best_begin = b;
        }
    }
    return best_begin;
}

double statistic_lookup(std::span<const ScoredEvent> scored, std::size_t begin, const RegionLookup& lookup) {
    double w = 0.0;
    for (std::size_t j = begin; j < scored.size(); ++j)
        if (lookup.contains(scored[j].event.s)) w += scored[j].delta_value;
    return w;
}

}  // namespace

std::size_t ostep(std::span<const ScoredEvent> scored, const core::RegionUnion& region,
                  const core::Domain& domain, double cell) {
    if (region.empty()) return scored.size();
    return ostep_lookup(scored, RegionLookup(region, domain.s_bounds, cell));
}

double statistic(std::span<const ScoredEvent> scored, std::size_t begin, const core::RegionUnion& region) {
    double w = 0.0;
    if (region.empty()) return w;
    for (std::size_t j = begin; j < scored.size(); ++j)
        if (region.contains(scored[j].event.s)) w += scored[j].delta_value;
    return w;
}

double window_time(std::span<const ScoredEvent> scored, std::size_t begin) {
    if (scored.empty()) return 0.0;
    if (begin >= scored.size()) return scored.back().event.t;
    return scored[begin].event.t;
}

AlternationResult alternate(std::span<const ScoredEvent> scored, std::size_t begin0, int K, double delta,
                            const core::Domain& domain) {
    AlternationResult r;
    r.begin = std::min(begin0, scored.size());
    r.values.reserve(static_cast<std::size_t>(std::max(K, 0)));
    for (int k = 0; k < K; ++k) {
        r.region = istep(scored, r.begin, delta, domain);
        if (r.region.empty()) {
            r.begin = scored.size();
            r.value = 0.0;
        } else {
            const RegionLookup lookup(r.region, domain.s_bounds, delta);
            r.begin = ostep_lookup(scored, lookup);
            r.value = statistic_lookup(scored, r.begin, lookup);
        }
        r.values.push_back(r.value);
    }
    return r;
}

void DetectorOptions::validate() const {
    if (!(gamma >= 0.0)) throw ConfigError("detector: gamma must be >= 0");
    if (K < 1) throw ConfigError("detector: K must be >= 1");
}

void OnlineOptions::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("online detector: eta must be >= 0");
    if (steps_per_event < 0) throw ConfigError("online detector: steps_per_event must be >= 0");
    if (!(sigma > 0.0)) throw ConfigError("online detector: sigma must be > 0");
    if (batch_cap < 1) throw ConfigError("online detector: batch_cap must be >= 1");
}

json DetectionResult::to_json() const {
    return {{"detected", detected},
            {"nu", nu ? json(*nu) : json(nullptr)},
            {"stop_index", stop_index},
            {"tau_hat", tau_hat},
            {"omega_hat", io::region_to_json(omega_hat)},
            {"trajectory", {{"t", times}, {"W", stats}}}};
}

DetectionResult DetectionResult::from_json(const json& j) {
    try {
        DetectionResult r;
        r.detected = j.at("detected").get<bool>();
        if (!j.at("nu").is_null()) r.nu = j.at("nu").get<double>();
        r.stop_index = j.at("stop_index").get<std::size_t>();
        r.tau_hat = j.at("tau_hat").get<double>();
        r.omega_hat = io::region_from_json(j.at("omega_hat"));
        r.times = j.at("trajectory").at("t").get<std::vector<double>>();
        r.stats = j.at("trajectory").at("W").get<std::vector<double>>();
        if (r.times.size() != r.stats.size()) throw ConfigError("detection result: trajectory length mismatch");
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("detection result: ") + e.what());
    }
}

void DetectionResult::write_trajectory_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "t,W\n" << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i) out << times[i] << ',' << stats[i] << '\n';
}

namespace {

void check_pair(const score::ScoreModel& m0, const score::ScoreModel& m1) {
    if (m0.delta() != m1.delta())
        throw ConfigError("detector: pre- and post-change models must share delta");
    const auto& a = m0.domain();
    const auto& b = m1.domain();
    if (a.t_end != b.t_end || !(a.s_bounds == b.s_bounds))
        throw ConfigError("detector: pre- and post-change models must share the domain");
}

// Shared stepping logic of both detectors.
class Stepper {
public:
    Stepper(double delta, const core::Domain& domain, const DetectorOptions& opts)
        : delta_(delta), domain_(domain), opts_(opts) {
        opts_.validate();
    }

    // Returns true when the detector stops at the newest event.
    bool step(std::span<const ScoredEvent> scored, DetectionResult& out) {
        const std::size_t begin0 = opts_.warm_start ? std::min(last_.begin, scored.size()) : 0;
        last_ = alternate(scored, begin0, opts_.K, delta_, domain_);
        const double w = last_.value;
        if (!std::isfinite(w)) throw DivergenceError("detector: statistic is not finite");
        out.times.push_back(scored.back().event.t);
        out.stats.push_back(w);
        out.stop_index = scored.size() - 1;
        out.tau_hat = window_time(scored, last_.begin);
        out.omega_hat = last_.region;
        if (w >= opts_.gamma) {
            out.detected = true;
            out.nu = scored.back().event.t;
            return true;
        }
        return false;
    }

    [[nodiscard]] const AlternationResult& last() const { return last_; }

private:
    double delta_;
    core::Domain domain_;
    DetectorOptions opts_;
    AlternationResult last_;
};

}  // namespace

std::vector<ScoredEvent> score_stream(const core::EventStream& stream, const score::ScoreModel& model0,
                                      const score::ScoreModel& model1, const score::WeightConfig& wcfg) {
    check_pair(model0, model1);
    score::HistoryTracker tracker(model0.domain(), {&model0, &model1});
    std::vector<ScoredEvent> scored;
    scored.reserve(stream.size());
    for (const auto& e : stream) {
        const auto& in = tracker.prepare(e);
        const double d = score::anomaly(model0, model1, wcfg, in);
        if (!std::isfinite(d)) throw DivergenceError("detector: non-finite anomaly score");
        scored.push_back({e, d});
        tracker.add(e);
    }
    return scored;
}

DetectionResult detect_scored(std::span<const ScoredEvent> scored, double delta, const core::Domain& domain,
                              const DetectorOptions& opts) {
    Stepper stepper(delta, domain, opts);
    DetectionResult out;
    for (std::size_t i = 0; i < scored.size(); ++i)
        if (stepper.step(scored.first(i + 1), out)) break;
    return out;
}

DetectionResult run_detector(const core::EventStream& stream, const score::ScoreModel& model0,
                             const score::ScoreModel& model1, const score::WeightConfig& wcfg,
                             const DetectorOptions& opts) {
    check_pair(model0, model1);
    opts.validate();
    Stepper stepper(model0.delta(), model0.domain(), opts);
    score::HistoryTracker tracker(model0.domain(), {&model0, &model1});
    std::vector<ScoredEvent> scored;
    scored.reserve(stream.size());
    DetectionResult out;
    for (const auto& e : stream) {
        const auto& in = tracker.prepare(e);
        const double d = score::anomaly(model0, model1, wcfg, in);
        if (!std::isfinite(d)) throw DivergenceError("detector: non-finite anomaly score");
        scored.push_back({e, d});
        tracker.add(e);
        if (stepper.step(scored, out)) break;
    }
    return out;
}

DetectionResult run_online_detector(const core::EventStream& stream, const score::ScoreModel& model0,
                                    const score::WeightConfig& wcfg, const DetectorOptions& opts,
                                    const OnlineOptions& online) {
    opts.validate();
    online.validate();
    const auto* neural0 = dynamic_cast<const score::NeuralScoreModel*>(&model0);
    if (!neural0) throw ConfigError("online detector: the post-change model must be neural");
    score::NeuralScoreModel model1 = *neural0;
    const double delta = model0.delta();
    const auto& domain = model0.domain();

    Stepper stepper(delta, domain, opts);
    score::HistoryTracker tracker(domain, {&model0, &model1});
    const double wide = score::dsm_candidate_radius(delta, online.sigma);
    score::HistoryTracker wide_tracker(domain, wide, false, wide, 0.0,
                                       score::dsm_candidate_cap(delta, online.sigma, model1.max_history()));
    auto rng = sim::make_rng(online.seed, 0);

    std::vector<ScoredEvent> scored;
    std::vector<score::DSMPoint> points;
    scored.reserve(stream.size());
    points.reserve(stream.size());
    DetectionResult out;
    std::vector<const score::DSMPoint*> batch;
    for (const auto& e : stream) {
        const auto& in = tracker.prepare(e);
        const double d = score::anomaly(model0, model1, wcfg, in);
        if (!std::isfinite(d)) throw DivergenceError("online detector: non-finite anomaly score");
        scored.push_back({e, d});
        tracker.add(e);
        points.push_back(score::make_dsm_point(wide_tracker.prepare(e)));
        wide_tracker.add(e);
        if (stepper.step(scored, out)) break;

        if (online.eta == 0.0 || online.steps_per_event == 0) continue;
        const auto& st = stepper.last();
        if (st.region.empty()) continue;
        const RegionLookup lookup(st.region, domain.s_bounds, delta);
        batch.clear();
        for (std::size_t j = scored.size(); j-- > st.begin && batch.size() < online.batch_cap;)
            if (lookup.contains(scored[j].event.s)) batch.push_back(&points[j]);
        if (batch.empty()) continue;
        for (int s = 0; s < online.steps_per_event; ++s)
            (void)score::dsm_gradient_step(model1, batch, online.sigma, online.eta, rng);
    }
    return out;
}

}  // namespace stpp::detect
