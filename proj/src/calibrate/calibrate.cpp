#include "stpp/calibrate/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stpp/core/parallel.hpp"
#include "stpp/error.hpp"
#include "stpp/io/json.hpp"

namespace stpp::calibrate {

void CalibrationConfig::validate() const {
    if (n_trials < 20) throw ConfigError("calibration: n_trials must be >= 20");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("calibration: horizon must be positive");
    if (!(target_arl > 0.0)) throw ConfigError("calibration: target_arl must be positive");
}

nlohmann::json calibration_config_to_json(const CalibrationConfig& c) {
    return {{"n_trials", c.n_trials}, {"horizon", c.horizon}, {"target_arl", c.target_arl}, {"seed", c.seed}};
}

CalibrationConfig calibration_config_from_json(const nlohmann::json& j) {
    io::reject_unknown_keys(j, {"n_trials", "horizon", "target_arl", "seed"}, "calibration");
    CalibrationConfig c;
    try {
        c.n_trials = j.value("n_trials", c.n_trials);
        c.horizon = j.value("horizon", c.horizon);
        c.target_arl = j.value("target_arl", c.target_arl);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("calibration: ") + e.what());
    }
    c.validate();
    return c;
}

double Trajectory::max() const {
    double m = 0.0;
    for (double v : stats) m = std::max(m, v);
    return m;
}

std::optional<double> Trajectory::first_passage(double gamma) const {
    for (std::size_t i = 0; i < stats.size(); ++i)
        if (stats[i] >= gamma) return times[i];
    return std::nullopt;
}

sim::ChangeScenario null_scenario(const sim::ChangeScenario& sc, double horizon) {
    auto out = sc;
    out.domain.t_end = horizon;
    return out.without_change();
}

std::vector<Trajectory> null_trajectories(const Detector& detector, const sim::ChangeScenario& sc, std::size_t n,
                                          double horizon, std::uint64_t seed, std::size_t jobs) {
    const auto null = null_scenario(sc, horizon);
    std::vector<Trajectory> out(n);
    core::parallel_for(n, jobs, [&](std::size_t i) {
        const auto stream = sim::simulate(null, seed, i);
        auto r = detector(stream, std::numeric_limits<double>::infinity());
        out[i].times = std::move(r.times);
        out[i].stats = std::move(r.stats);
        out[i].events = stream.size();
    });
    return out;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

nlohmann::json CalibrationReport::to_json(std::size_t histogram_bins) const {
    nlohmann::json hist = nlohmann::json::object();
    if (!w_max.empty() && histogram_bins > 0) {
        const auto [mn, mx] = std::minmax_element(w_max.begin(), w_max.end());
        const double lo = *mn, width = (*mx - *mn) / static_cast<double>(histogram_bins);
        std::vector<std::size_t> counts(histogram_bins, 0);
        for (double v : w_max) {
            std::size_t k = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
            ++counts[std::min(k, histogram_bins - 1)];
        }
        std::vector<double> edges(histogram_bins + 1);
        for (std::size_t k = 0; k <= histogram_bins; ++k) edges[k] = lo + width * static_cast<double>(k);
        hist = {{"edges", edges}, {"counts", counts}};
    }
    return {{"inputs", calibration_config_to_json(config)},
            {"mean_events", mean_events},
            {"event_rate", event_rate},
            {"quantile_level", level},
            {"gamma", gamma},
            {"w_max_histogram", hist}};
}

CalibrationReport calibrate_from_trajectories(const std::vector<Trajectory>& null_runs,
                                              const CalibrationConfig& cfg) {
    cfg.validate();
    if (null_runs.size() < 20) throw ConfigError("calibration: at least 20 trajectories are required");
    CalibrationReport r;
    r.config = cfg;
    double total = 0.0;
    for (const auto& t : null_runs) {
        r.w_max.push_back(t.max());
        total += static_cast<double>(t.events);
    }
    r.mean_events = total / static_cast<double>(null_runs.size());
    r.event_rate = r.mean_events / cfg.horizon;
    const double lambda_target = cfg.target_arl * r.event_rate;
    if (!(lambda_target > 0.0)) throw ConfigError("calibration: no events in the calibration runs");
    r.level = std::exp(-r.mean_events / lambda_target);
    if (!(r.level > 0.0 && r.level <= 1.0) || r.level < 1.0 / static_cast<double>(null_runs.size()))
        throw ConfigError("calibration: target ARL is infeasible for the number of trials (quantile level " +
                          std::to_string(r.level) + ")");
    r.gamma = quantile(r.w_max, r.level);
    return r;
}

CalibrationReport calibrate_threshold(const Detector& detector, const sim::ChangeScenario& sc,
                                      const CalibrationConfig& cfg) {
    cfg.validate();
    return calibrate_from_trajectories(null_trajectories(detector, sc, cfg.n_trials, cfg.horizon, cfg.seed, cfg.jobs),
                                       cfg);
}

nlohmann::json ArlEstimate::to_json() const {
    return {{"arl", arl}, {"n_trials", n_trials}, {"n_censored", n_censored}, {"stopping_times", stopping_times}};
}

ArlEstimate empirical_arl(const std::vector<Trajectory>& null_runs, double gamma, double horizon) {
    if (null_runs.empty()) throw ConfigError("empirical_arl: no trials");
    ArlEstimate e;
    e.n_trials = null_runs.size();
    for (const auto& t : null_runs) {
        const auto nu = t.first_passage(gamma);
        if (nu && *nu <= horizon) {
            e.stopping_times.push_back(*nu);
        } else {
            e.stopping_times.push_back(horizon);
            ++e.n_censored;
        }
    }
    e.arl = std::accumulate(e.stopping_times.begin(), e.stopping_times.end(), 0.0) /
            static_cast<double>(e.n_trials);
    return e;
}

ArlEstimate empirical_arl(const Detector& detector, const sim::ChangeScenario& sc, double gamma,
                          std::size_t n_trials, double horizon, std::uint64_t seed, std::size_t jobs) {
    const auto null = null_scenario(sc, horizon);
    std::vector<Trajectory> runs(n_trials);
    core::parallel_for(n_trials, jobs, [&](std::size_t i) {
        const auto stream = sim::simulate(null, seed, i);
        auto r = detector(stream, gamma);
        runs[i].times = std::move(r.times);
        runs[i].stats = std::move(r.stats);
        runs[i].events = stream.size();
    });
    return empirical_arl(runs, gamma, horizon);
}

double gamma_for_arl(const std::vector<Trajectory>& null_runs, double target_arl, double horizon, double lo,
                     double hi, int iterations) {
    if (!(hi >= lo)) throw ConfigError("gamma_for_arl: empty bracket");
    if (empirical_arl(null_runs, lo, horizon).arl >= target_arl) return lo;
    if (empirical_arl(null_runs, hi, horizon).arl < target_arl) return hi;
    for (int k = 0; k < iterations; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (empirical_arl(null_runs, mid, horizon).arl >= target_arl)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace stpp::calibrate
