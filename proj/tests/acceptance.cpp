// Acceptance driver: one PASS/FAIL line per criterion. Exits non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "stpp/baselines/baselines.hpp"
#include "stpp/calibrate/calibrate.hpp"
#include "stpp/core/geometry.hpp"
#include "stpp/detect/detector.hpp"
#include "stpp/evaluate/evaluate.hpp"
#include "stpp/score/hyvarinen.hpp"
#include "stpp/score/model.hpp"
#include "stpp/score/neural.hpp"
#include "stpp/simulate/simulator.hpp"

using namespace stpp;
using core::Box;
using core::RegionUnion;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Box kUnit{0, 0, 1, 1};

int g_failed = 0;

class Clock {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failed;
}

void info(const std::string& text) {
    std::printf("              info: %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

bool interior(const core::Point& s) { return s.x > 0.1 && s.x < 0.9 && s.y > 0.1 && s.y < 0.9; }

score::WeightConfig temporal_only() {
    score::WeightConfig w;
    w.mode = score::WeightMode::TemporalOnly;
    return w;
}

sim::ChangeScenario stationary(const sim::HawkesParams& p, double T) {
    sim::ChangeScenario sc;
    sc.pre = sc.post = p;
    sc.domain = core::Domain{T, kUnit};
    sc.tau = T;
    return sc;
}

// Mean Δ between global regimes μ0 = 50 and μ1 = 100 over a stream from `truth`.
struct Drift {
    double mean{0.0};
    double interior_mean{0.0};
    std::size_t n{0};
};

Drift drift(const sim::HawkesParams& truth, double alpha, double beta, double T, std::uint64_t seed) {
    sim::HawkesParams p0{50.0, alpha, beta, 0.02, sim::KernelKind::Gaussian};
    auto p1 = p0;
    p1.mu = 100.0;
    const auto sc = stationary(truth, T);
    const auto stream = sim::simulate(sc, seed);
    const score::AnalyticScoreModel m0(p0, 0.1, sc.domain), m1(p1, 0.1, sc.domain);
    const auto scored = detect::score_stream(stream, m0, m1, temporal_only());
    Drift d;
    double sum = 0.0, sum_in = 0.0;
    std::size_t n_in = 0;
    for (const auto& e : scored) {
        sum += e.delta_value;
        if (interior(e.event.s)) sum_in += e.delta_value, ++n_in;
    }
    d.n = scored.size();
    d.mean = sum / static_cast<double>(d.n);
    d.interior_mean = sum_in / static_cast<double>(n_in);
    return d;
}

void criterion1() {
    const Clock clock;
    const sim::HawkesParams p0{50.0, 0.0, 0.1, 0.02, sim::KernelKind::Gaussian};
    auto p1 = p0;
    p1.mu = 100.0;
    const auto pre = drift(p0, 0.0, 0.1, 2000.0, 11);
    const auto post = drift(p1, 0.0, 0.1, 1000.0, 12);
    const double expected_post = (50.0 - 100.0) * (50.0 - 100.0) * 4 * 0.01 / 100.0;
    const double secs = clock.seconds();
    const bool ok = post.n >= 100000 && within_rel(post.mean, expected_post, 0.10) &&
                    within_rel(pre.mean, -2.0, 0.10) && secs < 120.0;
    report(1, ok,
           fmt("post mean %.4f (target %.1f +-10%%, n=%zu), pre mean %.4f (target -2.0 +-10%%), %.1fs (< 120s)",
               post.mean, expected_post, post.n, pre.mean, secs));
    info(fmt("interior (0.1,0.9)^2 means: post %.4f, pre %.4f", post.interior_mean, pre.interior_mean));
}

void criterion2() {
    const Clock clock;
    const double beta = 1.0, T = 100.0;
    auto truth = [&](double alpha) { return sim::HawkesParams{100.0, alpha, beta, 0.02, sim::KernelKind::Gaussian}; };
    const auto d0 = drift(truth(0.0), 0.0, beta, T, 1);
    const auto d5 = drift(truth(0.5), 0.5, beta, T, 1);
    const double ratio = d5.mean / d0.mean;
    const double secs = clock.seconds();
    report(2, std::abs(ratio - 0.5) <= 0.075 && secs < 300.0,
           fmt("post drift ratio alpha=0.5/alpha=0 = %.4f / %.4f = %.3f (target 0.5 +-0.075, beta=%.0f, T=%.0f), "
               "%.1fs (< 300s)",
               d5.mean, d0.mean, ratio, beta, T, secs));
}

void criterion3() {
    const sim::HawkesParams p0{50.0, 0.5, 1.0, 0.02, sim::KernelKind::Gaussian};
    auto p1 = p0;
    p1.mu = 100.0;
    const auto sc = stationary(p0, 12.0);
    const auto stream = sim::simulate(sc, 3);
    const score::AnalyticScoreModel q0(p0, 0.1, sc.domain, score::IntegralMethod::Quadrature);
    const score::AnalyticScoreModel q1(p1, 0.1, sc.domain, score::IntegralMethod::Quadrature);
    const auto inputs = score::build_inputs(stream, sc.domain, 0.1, {&q0});
    if (inputs.size() < 1000) {
        report(3, false, fmt("only %zu events simulated", inputs.size()));
        return;
    }
    // 1000 events drawn uniformly from the stream after a burn-in of 100 events.
    std::mt19937_64 rng(3);
    std::vector<std::size_t> idx(inputs.size() - 100);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i + 100;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(1000, idx.size()));

    double gap_closed = 0.0, gap_exact = 0.0, spatial_closed = 0.0, spatial_quad = 0.0;
    for (std::size_t i : idx) {
        const auto in = inputs[i].input();
        const auto a = q0.score(in), b = q1.score(in);
        const auto cf = score::score_diff_closed_form(p0, p1, in, 0.1, sc.domain);
        const auto ex = score::score_diff_exact(p0, p1, in, 0.1, sc.domain);
        for (int k = 0; k < 3; ++k) {
            const double d = b[k] - a[k];
            gap_closed = std::max(gap_closed, std::abs(d - cf[k]));
            gap_exact = std::max(gap_exact, std::abs(d - ex[k]));
            if (k > 0) {
                spatial_closed = std::max(spatial_closed, std::abs(cf[k]));
                spatial_quad = std::max(spatial_quad, std::abs(d));
            }
        }
    }
    report(3, gap_closed <= 1e-5 && spatial_quad <= 1e-5,
           fmt("n=%zu: max |closed form - quadrature difference| = %.3g (<= 1e-5), max spatial |quadrature "
               "difference| = %.3g (<= 1e-5), closed-form spatial = %.3g",
               idx.size(), gap_closed, spatial_quad, spatial_closed));
    info(fmt("difference keeping the kernel-gradient and boundary terms vs quadrature: max gap %.3g", gap_exact));
}

std::vector<detect::ScoredEvent> random_scored(std::mt19937_64& rng, std::size_t n, double p_zero) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> ts(n);
    for (auto& t : ts) t = u(rng);
    std::sort(ts.begin(), ts.end());
    std::vector<detect::ScoredEvent> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = u(rng) < p_zero ? 0.0 : g(rng);
        out.push_back({{ts[i], {u(rng), u(rng)}}, d});
    }
    return out;
}

// Supremum over window starts and subsets of the window's events.
double brute_force(const std::vector<detect::ScoredEvent>& s) {
    double best = 0.0;
    for (std::size_t b = 0; b < s.size(); ++b) {
        const std::size_t m = s.size() - b;
        for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
            double v = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                if (mask & (1u << k)) v += s[b + k].delta_value;
            best = std::max(best, v);
        }
    }
    return best;
}

void criterion4() {
    const core::Domain dom{1.0, kUnit};
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 12);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto s = random_scored(rng, static_cast<std::size_t>(size(rng)), trial % 3 == 0 ? 0.2 : 0.0);
        const auto r = detect::alternate(s, 0, 5, 0.1, dom);
        if (r.value != brute_force(s) || detect::statistic(s, r.begin, r.region) != r.value) ++mismatches;
    }
    report(4, mismatches == 0, fmt("%d of 500 random inputs differ from the exhaustive supremum", mismatches));
}

// State shared by criteria 5, 6 and 9.
struct Reference {
    sim::ChangeScenario sc{sim::reference_scenario(0.0)};
    calibrate::Detector primary;
    double gamma{0.0};
    double arl{0.0};
    evaluate::TrialBatch batch;
};

calibrate::Detector primary_detector(const sim::ChangeScenario& sc, double delta) {
    const score::AnalyticScoreModel m0(sc.pre, delta, sc.domain);
    const auto m1 = score::AnalyticScoreModel::regional(sc.pre, sc.omega, sc.post.mu, delta, sc.domain);
    return [m0, m1](const core::EventStream& s, double gamma) {
        detect::DetectorOptions o;
        o.gamma = gamma;
        o.K = 5;
        return detect::run_detector(s, m0, m1, score::WeightConfig{}, o);
    };
}

constexpr std::uint64_t kCalibrationSeed = 1000;
constexpr std::uint64_t kNullSeed = 2000;
constexpr std::uint64_t kTrialSeed = 3000;
constexpr double kArlHorizon = 10.0;

void criterion5(Reference& ref) {
    const Clock clock;
    ref.primary = primary_detector(ref.sc, 0.1);
    calibrate::CalibrationConfig cfg;
    cfg.seed = kCalibrationSeed;
    const auto rep = calibrate::calibrate_threshold(ref.primary, ref.sc, cfg);
    ref.gamma = rep.gamma;

    const auto runs = calibrate::null_trajectories(ref.primary, ref.sc, 200, kArlHorizon, kNullSeed);
    const auto est = calibrate::empirical_arl(runs, ref.gamma, kArlHorizon);
    ref.arl = est.arl;

    // Pathwise monotonicity over a threshold grid on the same streams.
    std::vector<double> grid;
    for (double f = 0.0; f <= 3.0; f += 0.125) grid.push_back(f * ref.gamma);
    bool monotone = true;
    auto prev = calibrate::empirical_arl(runs, grid[0], kArlHorizon);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const auto cur = calibrate::empirical_arl(runs, grid[k], kArlHorizon);
        for (std::size_t i = 0; i < runs.size(); ++i)
            monotone = monotone && cur.stopping_times[i] >= prev.stopping_times[i];
        monotone = monotone && cur.arl >= prev.arl;
        prev = cur;
    }
    const double target = cfg.target_arl * ref.sc.domain.t_end;
    report(5, within_rel(est.arl, target, 0.25) && monotone,
           fmt("gamma=%.2f (level %.3f), ARL over 200 fresh streams = %.3f (target %.1f +-25%%, %zu censored at %.0f), "
               "pathwise monotone over %zu thresholds: %s, %.1fs",
               ref.gamma, rep.level, est.arl, target, est.n_censored, kArlHorizon, grid.size(),
               monotone ? "yes" : "no", clock.seconds()));
}

void criterion6(Reference& ref) {
    const Clock clock;
    ref.batch = evaluate::run_batch(ref.sc, "primary", ref.primary, ref.gamma, 100, kTrialSeed);
    const auto e = evaluate::edd(ref.batch);
    const auto j = evaluate::jaccard_at_stop(ref.batch, ref.sc.omega);
    double max_rt = 0.0;
    for (const auto& t : ref.batch.trials) max_rt = std::max(max_rt, t.runtime_seconds);
    const double edd = e.edd.value_or(kInf);
    const double jac = j.mean.value_or(0.0);
    report(6, edd >= 0.05 && edd <= 0.25 && jac >= 0.05 && max_rt < 1.0,
           fmt("EDD %.3f (in [0.05, 0.25]), mean Jaccard %.3f (>= 0.05), detected %zu, false alarms %zu, "
               "max per-trial runtime %.3fs (< 1s, mean %.3fs), %.1fs",
               edd, jac, e.n_detected, e.n_false_alarms, max_rt, evaluate::mean_runtime(ref.batch),
               clock.seconds()));
}

void criterion7() {
    const Clock clock;
    const double delta = 0.05;
    const auto sc = sim::reference_scenario(0.0);
    const auto det = primary_detector(sc, delta);
    // γ = ∞ runs to the horizon; Ω̂ is read at T.
    const auto batch = evaluate::run_batch(sc, "primary", det, kInf, 100, 7000);
    double sum = 0.0;
    for (const auto& t : batch.trials) sum += core::jaccard(t.result.omega_hat, sc.omega);
    const double mean = sum / static_cast<double>(batch.trials.size());
    const double bound = evaluate::jaccard_lower_bound(sc.omega, delta, sc.domain.s_bounds);
    report(7, mean >= bound - 0.05,
           fmt("delta=0.05, mean Jaccard at the horizon %.3f (>= bound %.3f - 0.05), %.1fs", mean, bound,
               clock.seconds()));
}

void criterion8() {
    const Clock clock;
    auto sc = sim::reference_scenario(0.0);
    sc.pre.mu = sc.post.mu = 50.0;
    sc.domain.t_end = 200.0;
    const auto train = sim::simulate(sc, 1);
    score::DSMConfig cfg;
    cfg.seed = 1;
    const auto res = score::train_score_model(train, 0.1, sc.domain, cfg);

    sc.domain.t_end = 20.0;
    const auto test = sim::simulate(sc, 2);
    score::HistoryTracker tracker(sc.domain, {&res.model});
    double sum = 0.0;
    int n = 0;
    for (const auto& e : test) {
        const auto& in = tracker.prepare(e);
        // Interior events with a gap beyond the noise scale and a previous in-ball event.
        if (interior(e.s) && in.dt() >= 0.06 && in.t_n > 0) {
            sum += res.model.score(in)[0];
            ++n;
        }
        tracker.add(e);
    }
    const double mean = sum / n;
    const double target = -50.0 * 4 * 0.01;
    report(8, within_rel(mean, target, 0.10),
           fmt("held-out mean temporal score %.4f over %d events (target %.1f +-10%%), %zu training events, %.1fs",
               mean, n, target, train.size(), clock.seconds()));
}

calibrate::Detector binned_detector(const sim::ChangeScenario& sc, int grid, bool regional) {
    return [sc, grid, regional](const core::EventStream& s, double gamma) {
        auto dom = sc.domain;
        if (!s.empty()) dom.t_end = std::max(dom.t_end, s.events().back().t);
        const auto series = baselines::bin_events(s, grid, 0.01, dom);
        return regional ? baselines::min_cusum(series, sc.pre.mu, sc.post.mu, gamma).result
                        : baselines::cusum_binned(series, sc.pre.mu, sc.post.mu, gamma).result;
    };
}

struct Matched {
    double gamma, arl;
    evaluate::EddReport edd;
    evaluate::JaccardReport jaccard;
};

Matched match_arl(const Reference& ref, const calibrate::Detector& det, const std::string& name) {
    const auto runs = calibrate::null_trajectories(det, ref.sc, 200, kArlHorizon, kNullSeed);
    double hi = 1.0;
    for (const auto& r : runs) hi = std::max(hi, r.max() + 1.0);
    const double g = calibrate::gamma_for_arl(runs, ref.arl, kArlHorizon, 0.0, hi);
    const auto batch = evaluate::run_batch(ref.sc, name, det, g, 100, kTrialSeed);
    return {g, calibrate::empirical_arl(runs, g, kArlHorizon).arl, evaluate::edd(batch),
            evaluate::jaccard_at_stop(batch, ref.sc.omega)};
}

void criterion9(const Reference& ref) {
    const Clock clock;
    const auto cusum = match_arl(ref, binned_detector(ref.sc, 5, false), "cusum");
    const auto minc = match_arl(ref, binned_detector(ref.sc, 5, true), "min-cusum(5)");
    const double edd_p = evaluate::edd(ref.batch).edd.value_or(kInf);
    const double jac_p = evaluate::jaccard_at_stop(ref.batch, ref.sc.omega).mean.value_or(0.0);
    const double edd_c = cusum.edd.edd.value_or(kInf);
    const double jac_m = minc.jaccard.mean.value_or(0.0);
    report(9, edd_p <= edd_c && jac_p >= jac_m,
           fmt("at ARL %.3f: primary EDD %.3f <= CUSUM EDD %.3f (gamma %.2f, ARL %.3f); primary Jaccard %.3f >= "
               "MinCUSUM(5) Jaccard %.3f (gamma %.2f, ARL %.3f), %.1fs",
               ref.arl, edd_p, edd_c, cusum.gamma, cusum.arl, jac_p, jac_m, minc.gamma, minc.arl, clock.seconds()));
    info(fmt("false alarms of 100: primary %zu, CUSUM %zu, MinCUSUM(5) %zu", evaluate::edd(ref.batch).n_false_alarms,
             cusum.edd.n_false_alarms, minc.edd.n_false_alarms));
}

void criterion10() {
    const Clock clock;
    struct Shape {
        const char* name;
        RegionUnion omega;
        bool graded;
    };
    // Both graded shapes have area close to 0.2; the last one keeps the 0.2-wide squares of
    // the reference region and is reported only.
    const std::vector<Shape> shapes{
        {"cross", RegionUnion({Box{0.2, 0.4, 0.8, 0.6}, Box{0.4, 0.2, 0.6, 0.8}}), true},
        {"bimodal", RegionUnion({Box{0.15, 0.15, 0.45, 0.45}, Box{0.55, 0.55, 0.85, 0.85}}), true},
        {"bimodal, 0.2 squares", RegionUnion({Box{0.2, 0.2, 0.4, 0.4}, Box{0.6, 0.6, 0.8, 0.8}}), false},
    };
    bool ok = true;
    std::string detail, extra;
    for (const auto& shape : shapes) {
        auto sc = sim::reference_scenario(0.0);
        sc.omega = shape.omega;
        const auto primary = evaluate::run_batch(sc, "primary", primary_detector(sc, 0.1), kInf, 100, 500);
        const auto mc2 = evaluate::run_batch(sc, "min-cusum(2)", binned_detector(sc, 2, true), kInf, 100, 500);
        double jp = 0.0, jm = 0.0;
        for (std::size_t i = 0; i < primary.trials.size(); ++i) {
            jp += core::jaccard(primary.trials[i].result.omega_hat, sc.omega);
            jm += core::jaccard(mc2.trials[i].result.omega_hat, sc.omega);
        }
        jp /= static_cast<double>(primary.trials.size());
        jm /= static_cast<double>(mc2.trials.size());
        if (!shape.graded) {
            extra = fmt("%s: primary %.3f, MinCUSUM(2) %.3f", shape.name, jp, jm);
            continue;
        }
        ok = ok && jp >= 0.3 && jm <= jp;
        detail += fmt("%s: primary %.3f (>= 0.3), MinCUSUM(2) %.3f (<= primary); ", shape.name, jp, jm);
    }
    report(10, ok, detail + fmt("snapshot at T, 100 matched trials each, %.1fs", clock.seconds()));
    info(extra);
}

RegionUnion random_union(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Box> boxes;
    for (int i = 0; i < n; ++i) {
        const double x0 = u(rng), y0 = u(rng);
        const double w = 0.3 * u(rng), h = 0.3 * u(rng);
        boxes.push_back({x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)});
    }
    return RegionUnion(boxes);
}

// Fraction of the 1000 x 1000 cell centres of the unit square covered by the union.
constexpr int kRaster = 1000;

double raster_area(const RegionUnion& r) {
    const int n = kRaster;
    std::vector<unsigned char> hit(static_cast<std::size_t>(n) * n, 0);
    auto lo = [](double v) { return std::clamp(static_cast<int>(std::ceil(v * kRaster - 0.5)), 0, kRaster); };
    for (const auto& b : r.boxes()) {
        // Centres c = (i + 0.5)/n with x0 <= c < x1.
        const int i0 = lo(b.x0), i1 = lo(b.x1), j0 = lo(b.y0), j1 = lo(b.y1);
        for (int j = j0; j < j1; ++j)
            std::fill(hit.begin() + static_cast<std::ptrdiff_t>(j) * n + i0,
                      hit.begin() + static_cast<std::ptrdiff_t>(j) * n + i1, 1);
    }
    return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / (static_cast<double>(n) * n);
}

RegionUnion dyadic_union(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> k(0, 1023), w(1, 300);
    std::vector<Box> boxes;
    for (int i = 0; i < n; ++i) {
        const int x0 = k(rng), y0 = k(rng);
        boxes.push_back({x0 / 1024.0, y0 / 1024.0, std::min(1024, x0 + w(rng)) / 1024.0,
                         std::min(1024, y0 + w(rng)) / 1024.0});
    }
    return RegionUnion(boxes);
}

// Exact set equality: membership agrees on every cell of the joint coordinate grid.
bool same_set(const RegionUnion& a, const RegionUnion& b) {
    std::vector<double> xs, ys;
    for (const auto* r : {&a, &b})
        for (const auto& q : r->boxes()) {
            xs.insert(xs.end(), {q.x0, q.x1});
            ys.insert(ys.end(), {q.y0, q.y1});
        }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const core::Point p{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])};
            if (a.contains(p) != b.contains(p)) return false;
        }
    return true;
}

void criterion11() {
    const Clock clock;
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = random_union(rng, 20);
        const double exact = core::region_area(r);
        worst = std::max(worst, std::abs(raster_area(r) - exact) / exact);
    }

    // Identities on box inputs, checked as exact set equalities. Coordinates and δ lie on
    // the grid k/1024 so that x ± δ is exact in floating point.
    auto grid = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng) / 1024.0; };
    int broken = 0;
    auto expect = [&broken](const RegionUnion& x, const RegionUnion& y) {
        if (!same_set(x, y)) ++broken;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const double d = grid(0, 100);
        const double x0 = grid(102, 400), y0 = grid(102, 400);
        const Box b{x0, y0, x0 + grid(10, 410), y0 + grid(10, 410)};
        const RegionUnion box({b});
        const auto dil = core::dilate(box, d, kUnit);
        expect(dil, RegionUnion({Box{std::max(0.0, b.x0 - d), std::max(0.0, b.y0 - d), std::min(1.0, b.x1 + d),
                                     std::min(1.0, b.y1 + d)}}));
        const bool survives = b.width() > 2 * d && b.height() > 2 * d;
        expect(core::erode(box, d, kUnit),
               survives ? RegionUnion({Box{b.x0 + d, b.y0 + d, b.x1 - d, b.y1 - d}}) : RegionUnion{});
        if (b.x0 - d >= 0 && b.y0 - d >= 0 && b.x1 + d <= 1 && b.y1 + d <= 1)
            expect(core::erode(dil, d, kUnit), box);
        if (survives) expect(core::dilate(core::erode(box, d, kUnit), d, kUnit), box);
        expect(core::dilate(box, 0.0, kUnit), box);
        expect(core::erode(box, 0.0, kUnit), box);

        const auto other = dyadic_union(rng, 3);
        std::vector<Box> both = other.boxes();
        both.push_back(b);
        std::vector<Box> parts = core::dilate(other, d, kUnit).boxes();
        for (const auto& q : dil.boxes()) parts.push_back(q);
        expect(core::dilate(RegionUnion(both), d, kUnit), RegionUnion(parts));
    }
    report(11, worst <= 0.005 && broken == 0,
           fmt("max relative area error vs 10^6-cell rasterization %.4f%% (<= 0.5%%) over 100 unions of 20 boxes; "
               "%d identity violations over 200 random boxes, %.1fs",
               100 * worst, broken, clock.seconds()));
}

}  // namespace

// Arguments select criteria by number; none runs all of them.
int main(int argc, char** argv) {
    const Clock total;
    std::vector<bool> run(12, argc == 1);
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (id >= 1 && id <= 11) run[static_cast<std::size_t>(id)] = true;
    }
    Reference ref;
    const bool need_ref = run[5] || run[6] || run[9];
    const std::vector<std::function<void()>> steps{
        [] {},
        criterion1,
        criterion2,
        criterion3,
        criterion4,
        [&] { if (need_ref) criterion5(ref); },
        [&] { if (run[6] || run[9]) criterion6(ref); },
        criterion7,
        criterion8,
        [&] { criterion9(ref); },
        criterion10,
        criterion11,
    };
    int selected = 0;
    for (std::size_t id = 1; id < steps.size(); ++id) {
        // 5 and 6 also run when a later criterion depends on them.
        if (run[id] || (id == 5 && need_ref) || (id == 6 && run[9])) {
            const int before = g_failed;
            steps[id]();
            if (run[id])
                ++selected;
            else
                g_failed = before;
        }
    }
    std::printf("%d of %d criteria failed, %.1fs total\n", g_failed, selected, total.seconds());
    return g_failed == 0 ? 0 : 1;
}
