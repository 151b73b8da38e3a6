#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "stpp/baselines/baselines.hpp"
#include "stpp/calibrate/calibrate.hpp"
#include "stpp/error.hpp"

using namespace stpp;
using namespace stpp::calibrate;

namespace {

sim::ChangeScenario poisson_scenario() {
    auto sc = sim::reference_scenario(0.0);
    sc.post.mu = 150.0;
    return sc;
}

Detector pp_detector(const sim::ChangeScenario& sc) {
    return [sc](const core::EventStream& s, double gamma) {
        return baselines::pp_cusum(s, sc.pre, sc.post, gamma, sc.domain).result;
    };
}

}  // namespace

TEST_CASE("type-7 quantile") {
    CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
    CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
    CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(quantile({7}, 0.3) == 7.0);
    CHECK_THROWS_AS((void)quantile({}, 0.5), ConfigError);
    CHECK_THROWS_AS((void)quantile({1.0}, 1.5), ConfigError);
}

TEST_CASE("trajectory first passage") {
    Trajectory t{{0.1, 0.2, 0.3}, {0.5, 2.0, 1.0}, 3};
    CHECK(t.max() == 2.0);
    CHECK(*t.first_passage(0.0) == 0.1);
    CHECK(*t.first_passage(1.0) == 0.2);
    CHECK_FALSE(t.first_passage(2.5).has_value());
}

TEST_CASE("calibration properties") {
    const auto sc = poisson_scenario();
    const auto det = pp_detector(sc);
    CalibrationConfig cfg;
    cfg.n_trials = 60;
    cfg.seed = 5;
    const auto runs = null_trajectories(det, sc, cfg.n_trials, cfg.horizon, cfg.seed);
    for (const auto& r : runs) CHECK(r.events > 0);

    const auto rep = calibrate_from_trajectories(runs, cfg);
    CHECK(rep.level == doctest::Approx(std::exp(-cfg.horizon / cfg.target_arl)));
    CHECK(rep.event_rate == doctest::Approx(rep.mean_events / cfg.horizon));
    CHECK(rep.gamma == quantile(rep.w_max, rep.level));

    // Same result through the simulating entry point, independent of worker count.
    cfg.jobs = 1;
    const auto a = calibrate_threshold(det, sc, cfg);
    cfg.jobs = 3;
    const auto b = calibrate_threshold(det, sc, cfg);
    CHECK(a.gamma == rep.gamma);
    CHECK(b.gamma == rep.gamma);
    CHECK(a.w_max == b.w_max);

    // γ is non-decreasing in the target ARL and reaches the largest maximum in the limit.
    double prev = -INFINITY;
    for (double target : {0.6, 1.0, 2.0, 5.0, 20.0, 100.0}) {
        cfg.target_arl = target;
        const double g = calibrate_from_trajectories(runs, cfg).gamma;
        CHECK(g >= prev);
        prev = g;
    }
    cfg.target_arl = std::numeric_limits<double>::infinity();
    CHECK(calibrate_from_trajectories(runs, cfg).gamma == *std::max_element(rep.w_max.begin(), rep.w_max.end()));

    cfg.target_arl = 0.1;  // level e^{-20} is below 1/N₁
    CHECK_THROWS_AS((void)calibrate_from_trajectories(runs, cfg), ConfigError);
    cfg.target_arl = 5.0;
    auto small = cfg;
    small.n_trials = 10;
    CHECK_THROWS_AS(small.validate(), ConfigError);

    const auto j = rep.to_json(10);
    CHECK(j["w_max_histogram"]["counts"].size() == 10);
    std::size_t total = 0;
    for (const auto& c : j["w_max_histogram"]["counts"]) total += c.get<std::size_t>();
    CHECK(total == runs.size());
    CHECK(calibration_config_from_json(calibration_config_to_json(cfg)).horizon == cfg.horizon);
    CHECK_THROWS_AS((void)calibration_config_from_json({{"n_trials", 50}, {"bogus", 1}}), ConfigError);
}

TEST_CASE("empirical ARL") {
    const auto sc = poisson_scenario();
    const auto det = pp_detector(sc);
    // γ = 0 stops at the first event: mean first arrival 1/(μ0 |S|) = 0.01.
    const auto first = empirical_arl(det, sc, 0.0, 200, 1.0, 17);
    CHECK(first.n_censored == 0);
    CHECK(std::abs(first.arl - 0.01) < 5.0 * 0.01 / std::sqrt(200.0));

    const double horizon = 3.0;
    const auto runs = null_trajectories(det, sc, 80, horizon, 21);
    const auto direct = empirical_arl(det, sc, 4.0, 80, horizon, 21);
    const auto from_runs = empirical_arl(runs, 4.0, horizon);
    CHECK(direct.stopping_times == from_runs.stopping_times);

    // Pathwise monotonicity on common random numbers.
    std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
    std::vector<ArlEstimate> est;
    for (double g : grid) est.push_back(empirical_arl(runs, g, horizon));
    for (std::size_t k = 1; k < est.size(); ++k) {
        CHECK(est[k].arl >= est[k - 1].arl);
        for (std::size_t i = 0; i < runs.size(); ++i)
            CHECK(est[k].stopping_times[i] >= est[k - 1].stopping_times[i]);
    }
    // log ARL grows with γ: positive least-squares slope over the uncensored part of the grid.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (est[k].n_censored > 0) continue;
        const double y = std::log(est[k].arl);
        sx += grid[k], sy += y, sxx += grid[k] * grid[k], sxy += grid[k] * y;
        ++m;
    }
    REQUIRE(m >= 3);
    CHECK((m * sxy - sx * sy) / (m * sxx - sx * sx) > 0.0);

    const double g = gamma_for_arl(runs, 0.5, horizon, 0.0, 50.0);
    CHECK(empirical_arl(runs, g, horizon).arl >= 0.5);
    CHECK(empirical_arl(runs, g - 1e-6, horizon).arl < 0.5);
}
