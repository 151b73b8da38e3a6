#include "stpp/evaluate/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stpp/core/parallel.hpp"
#include "stpp/error.hpp"
#include "stpp/io/json.hpp"

namespace stpp::evaluate {

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f.precision(17);
    return f;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

nlohmann::json TrialBatch::to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& r : trials)
        t.push_back({{"seed", r.seed},
                     {"index", r.index},
                     {"events", r.events},
                     {"runtime_seconds", r.runtime_seconds},
                     {"result", r.result.to_json()}});
    return {{"scenario", sim::scenario_to_json(scenario)},
            {"detector", detector},
            {"detector_config", detector_config},
            {"gamma", gamma},
            {"trials", t}};
}

TrialBatch run_batch(const sim::ChangeScenario& scenario, const std::string& name,
                     const calibrate::Detector& detector, double gamma, std::size_t n_trials, std::uint64_t seed,
                     std::size_t jobs) {
    scenario.validate();
    TrialBatch b;
    b.scenario = scenario;
    b.detector = name;
    b.gamma = gamma;
    b.trials.resize(n_trials);
    core::parallel_for(n_trials, jobs, [&](std::size_t i) {
        const auto stream = sim::simulate(scenario, seed, i);
        auto& rec = b.trials[i];
        rec.seed = seed;
        rec.index = i;
        rec.events = stream.size();
        const auto start = std::chrono::steady_clock::now();
        rec.result = detector(stream, gamma);
        rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return b;
}

nlohmann::json EddReport::to_json() const {
    return {{"edd", opt(edd)},
            {"edd_censored", opt(edd_censored)},
            {"n_detected", n_detected},
            {"n_false_alarms", n_false_alarms},
            {"n_exhausted", n_exhausted},
            {"false_alarm_rate", false_alarm_rate}};
}

EddReport edd(const TrialBatch& batch) {
    const double tau = batch.scenario.tau, t_end = batch.scenario.domain.t_end;
    if (!(tau < t_end)) throw ConfigError("edd: the scenario has no change inside the horizon");
    EddReport r;
    double sum = 0.0;
    for (const auto& t : batch.trials) {
        if (!t.result.nu) {
            ++r.n_exhausted;
        } else if (*t.result.nu <= tau) {
            ++r.n_false_alarms;
        } else {
            ++r.n_detected;
            sum += *t.result.nu - tau;
        }
    }
    if (r.n_detected > 0) r.edd = sum / static_cast<double>(r.n_detected);
    if (r.n_detected + r.n_exhausted > 0)
        r.edd_censored = (sum + static_cast<double>(r.n_exhausted) * (t_end - tau)) /
                         static_cast<double>(r.n_detected + r.n_exhausted);
    if (!batch.trials.empty())
        r.false_alarm_rate = static_cast<double>(r.n_false_alarms) / static_cast<double>(batch.trials.size());
    return r;
}

nlohmann::json JaccardReport::to_json() const { return {{"mean", opt(mean)}, {"n", n}}; }

JaccardReport jaccard_at_stop(const TrialBatch& batch, const core::RegionUnion& truth) {
    JaccardReport r;
    double sum = 0.0;
    for (const auto& t : batch.trials) {
        if (!t.result.nu || *t.result.nu <= batch.scenario.tau) continue;
        sum += core::jaccard(t.result.omega_hat, truth);
        ++r.n;
    }
    if (r.n > 0) r.mean = sum / static_cast<double>(r.n);
    return r;
}

double jaccard_lower_bound(const core::RegionUnion& omega, double delta, const core::Box& bounds) {
    if (delta < 0.0) throw ConfigError("jaccard_lower_bound: delta must be >= 0");
    const double a = core::region_area(omega);
    if (!(a > 0.0)) throw ConfigError("jaccard_lower_bound: region has zero area");
    const double outer = a / core::region_area(core::dilate(omega, delta, bounds));
    const double inner = core::region_area(core::erode(omega, delta, bounds)) / a;
    return std::min(outer, inner);
}

double mean_runtime(const TrialBatch& batch) {
    if (batch.trials.empty()) return 0.0;
    double s = 0.0;
    for (const auto& t : batch.trials) s += t.runtime_seconds;
    return s / static_cast<double>(batch.trials.size());
}

std::vector<TradeoffPoint> tradeoff_curve(const sim::ChangeScenario& scenario, const calibrate::Detector& detector,
                                          const std::vector<double>& gamma_grid, const TradeoffOptions& opts) {
    const auto null_runs = calibrate::null_trajectories(detector, scenario, opts.n_null_trials, opts.arl_horizon,
                                                        opts.seed + 1, opts.jobs);
    std::vector<TradeoffPoint> out;
    for (double g : gamma_grid) {
        TradeoffPoint p;
        p.gamma = g;
        const auto arl = calibrate::empirical_arl(null_runs, g, opts.arl_horizon);
        p.arl = arl.arl;
        p.arl_censored = arl.n_censored;
        const auto batch = run_batch(scenario, "", detector, g, opts.n_trials, opts.seed, opts.jobs);
        const auto e = edd(batch);
        p.edd = e.edd;
        p.false_alarm_rate = e.false_alarm_rate;
        p.jaccard = jaccard_at_stop(batch, scenario.omega).mean;
        p.mean_runtime = mean_runtime(batch);
        out.push_back(p);
    }
    return out;
}

void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffPoint>& points) {
    auto f = open_out(path);
    f << "gamma,arl,arl_censored,edd,jaccard,false_alarm_rate,mean_runtime\n";
    auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& p : points)
        f << p.gamma << ',' << p.arl << ',' << p.arl_censored << ',' << cell(p.edd) << ',' << cell(p.jaccard) << ','
          << p.false_alarm_rate << ',' << p.mean_runtime << '\n';
}

void write_tradeoff_svg(const std::string& path, const std::vector<Curve>& curves, Metric metric) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 30, B = 55;
    auto value = [&](const TradeoffPoint& p) { return metric == Metric::Edd ? p.edd : p.jaccard; };
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            const auto v = value(p);
            if (!v || !(p.arl > 0.0)) continue;
            xmin = std::min(xmin, std::log10(p.arl));
            xmax = std::max(xmax, std::log10(p.arl));
            ymin = std::min(ymin, *v);
            ymax = std::max(ymax, *v);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-9) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-9) ymin -= 0.5, ymax += 0.5;
    ymin = std::min(ymin, 0.0);
    auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    auto f = open_out(path);
    f.precision(6);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<rect width=\"100%\" height=\"100%\" style=\"fill:#ffffff\"/>\n";
    f << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" style=\"stroke:#000\"/>\n";
    f << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" style=\"stroke:#000\"/>\n";
    for (int d = static_cast<int>(std::floor(xmin)); d <= static_cast<int>(std::ceil(xmax)); ++d) {
        if (d < xmin - 1e-9 || d > xmax + 1e-9) continue;
        f << "<line x1=\"" << px(d) << "\" y1=\"" << H - B << "\" x2=\"" << px(d) << "\" y2=\"" << H - B + 5
          << "\" style=\"stroke:#000\"/><text x=\"" << px(d) << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double y = ymin + (ymax - ymin) * k / 4.0;
        f << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
    }
    f << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">ARL (log scale)</text>\n";
    f << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\">" << (metric == Metric::Edd ? "EDD" : "Jaccard") << "</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = kPalette[c % std::size(kPalette)];
        auto pts = curves[c].points;
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.arl < b.arl; });
        std::ostringstream poly;
        poly.precision(6);
        for (const auto& p : pts) {
            const auto v = value(p);
            if (!v || !(p.arl > 0.0)) continue;
            poly << px(std::log10(p.arl)) << ',' << py(*v) << ' ';
            f << "<circle cx=\"" << px(std::log10(p.arl)) << "\" cy=\"" << py(*v) << "\" r=\"3\" style=\"fill:"
              << color << "\"/>\n";
        }
        f << "<polyline points=\"" << poly.str() << "\" style=\"fill:none;stroke:" << color
          << ";stroke-width:2\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(c);
        f << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
          << "\" style=\"stroke:" << color << ";stroke-width:2\"/><text x=\"" << W - R + 38 << "\" y=\"" << ly + 4
          << "\">" << curves[c].label << "</text>\n";
    }
    f << "</svg>\n";
}

std::vector<Snapshot> region_evolution(const core::EventStream& stream, const calibrate::Detector& detector,
                                       const std::vector<double>& snapshot_times) {
    std::vector<Snapshot> out;
    for (double t : snapshot_times) {
        const auto prefix = stream.prefix_before(t);
        Snapshot s;
        s.t = t;
        if (!prefix.empty()) s.region = detector(prefix, std::numeric_limits<double>::infinity()).omega_hat;
        out.push_back(std::move(s));
    }
    return out;
}

void write_region_svg(const std::string& path, const Snapshot& snapshot, const core::EventStream& stream,
                      const core::RegionUnion& truth, const core::Box& bounds) {
    constexpr double size = 400, pad = 20;
    auto sx = [&](double x) { return pad + (x - bounds.x0) / bounds.width() * size; };
    auto sy = [&](double y) { return pad + (bounds.y1 - y) / bounds.height() * size; };
    auto rect = [&](std::ostream& o, const core::Box& b, const char* style) {
        o << "<rect x=\"" << sx(b.x0) << "\" y=\"" << sy(b.y1) << "\" width=\"" << sx(b.x1) - sx(b.x0)
          << "\" height=\"" << sy(b.y0) - sy(b.y1) << "\" style=\"" << style << "\"/>\n";
    };
    auto f = open_out(path);
    f.precision(6);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\"" << size + 2 * pad + 20
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<rect width=\"100%\" height=\"100%\" style=\"fill:#ffffff\"/>\n";
    rect(f, bounds, "fill:none;stroke:#000");
    for (const auto& e : stream) {
        if (e.t >= snapshot.t) break;
        f << "<circle cx=\"" << sx(e.s.x) << "\" cy=\"" << sy(e.s.y) << "\" r=\"1.2\" style=\"fill:#999999\"/>\n";
    }
    for (const auto& b : snapshot.region.boxes()) rect(f, b, "fill:#d62728;fill-opacity:0.35;stroke:none");
    for (const auto& b : truth.boxes()) rect(f, b, "fill:none;stroke:#1f77b4;stroke-width:2");
    f << "<text x=\"" << pad << "\" y=\"" << size + 2 * pad + 12 << "\">t = " << snapshot.t
      << ", Jaccard = " << core::jaccard(snapshot.region, truth) << "</text>\n";
    f << "</svg>\n";
}

}  // namespace stpp::evaluate
