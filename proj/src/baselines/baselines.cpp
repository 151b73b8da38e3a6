#include "stpp/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "stpp/error.hpp"

namespace stpp::baselines {

namespace {

int cell_index(double v, double lo, double hi, int n) {
    const int k = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
    return std::clamp(k, 0, n - 1);
}

BaselineResult make_result(std::string name) {
    BaselineResult r;
    r.detector = std::move(name);
    return r;
}

core::RegionUnion whole(const core::Domain& d) { return core::RegionUnion({d.s_bounds}); }

double poisson_llr(int k, double rate0, double rate1) {
    return k * std::log(rate1 / rate0) - (rate1 - rate0);
}

}  // namespace

core::Box BinnedSeries::cell_box(int ix, int iy) const {
    const auto& b = domain.s_bounds;
    const double w = b.width() / n, h = b.height() / n;
    return {b.x0 + ix * w, b.y0 + iy * h, ix == n - 1 ? b.x1 : b.x0 + (ix + 1) * w,
            iy == n - 1 ? b.y1 : b.y0 + (iy + 1) * h};
}

double BinnedSeries::bin_end(std::size_t k) const {
    return std::min(domain.t_end, static_cast<double>(k + 1) * dt_bin);
}

Eigen::VectorXd BinnedSeries::vector(std::size_t k) const {
    Eigen::VectorXd z(cells());
    for (int c = 0; c < cells(); ++c) z[c] = counts[k][c];
    return z;
}

BinnedSeries bin_events(const core::EventStream& stream, int n, double dt_bin, const core::Domain& domain) {
    if (n < 1) throw ConfigError("bin_events: grid size must be >= 1");
    if (!(dt_bin > 0.0)) throw ConfigError("bin_events: dt_bin must be > 0");
    domain.validate();
    BinnedSeries s;
    s.n = n;
    s.dt_bin = dt_bin;
    s.domain = domain;
    const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(domain.t_end / dt_bin - 1e-9)));
    s.counts.assign(bins, std::vector<int>(static_cast<std::size_t>(n) * n, 0));
    const auto& b = domain.s_bounds;
    for (const auto& e : stream) {
        const auto k = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(e.t / dt_bin))));
        const int ix = cell_index(e.s.x, b.x0, b.x1, n);
        const int iy = cell_index(e.s.y, b.y0, b.y1, n);
        ++s.counts[k][static_cast<std::size_t>(ix) * n + iy];
    }
    return s;
}

nlohmann::json BaselineResult::to_json() const {
    auto j = result.to_json();
    j["detector"] = detector;
    return j;
}

BaselineResult cusum_binned(const BinnedSeries& series, double mu0, double mu1, double gamma) {
    if (mu0 == mu1) throw ConfigError("cusum: mu0 and mu1 must differ");
    if (!(mu0 > 0.0) || !(mu1 > 0.0)) throw ConfigError("cusum: rates must be positive");
    const double vol = series.dt_bin * series.domain.area();
    auto out = make_result("cusum");
    auto& r = out.result;
    r.omega_hat = whole(series.domain);
    double w = 0.0;
    for (std::size_t k = 0; k < series.bins(); ++k) {
        int total = 0;
        for (int c : series.counts[k]) total += c;
        w = std::max(0.0, w) + poisson_llr(total, mu0 * vol, mu1 * vol);
        r.times.push_back(series.bin_end(k));
        r.stats.push_back(std::max(w, 0.0));
        r.stop_index = k;
        if (w >= gamma) {
            r.detected = true;
            r.nu = series.bin_end(k);
            break;
        }
    }
    return out;
}

GaussianModel GaussianModel::fit(const BinnedSeries& series, double loading) {
    if (series.bins() < 2) throw ConfigError("scusum: need at least two reference bins");
    const int d = series.cells();
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(series.bins()), d);
    for (std::size_t k = 0; k < series.bins(); ++k) Z.row(static_cast<Eigen::Index>(k)) = series.vector(k).transpose();
    GaussianModel m;
    m.mean = Z.colwise().mean().transpose();
    const Eigen::MatrixXd C = Z.rowwise() - m.mean.transpose();
    Eigen::MatrixXd cov = (C.transpose() * C) / static_cast<double>(series.bins() - 1);
    cov.diagonal().array() += loading;
    m.precision = cov.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    return m;
}

double GaussianModel::hyvarinen(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd g = precision * (z - mean);
    return g.squaredNorm() - 2.0 * precision.trace();
}

BaselineResult scusum_binned(const BinnedSeries& series, const GaussianModel& model0,
                             const GaussianModel& model1, double gamma) {
    if (model0.mean.size() != series.cells() || model1.mean.size() != series.cells())
        throw ConfigError("scusum: model dimension does not match the grid");
    auto out = make_result("scusum");
    auto& r = out.result;
    r.omega_hat = whole(series.domain);
    double w = 0.0;
    for (std::size_t k = 0; k < series.bins(); ++k) {
        const Eigen::VectorXd z = series.vector(k);
        w = std::max(0.0, w) + (model0.hyvarinen(z) - model1.hyvarinen(z));
        r.times.push_back(series.bin_end(k));
        r.stats.push_back(std::max(w, 0.0));
        r.stop_index = k;
        if (w >= gamma) {
            r.detected = true;
            r.nu = series.bin_end(k);
            break;
        }
    }
    return out;
}

BaselineResult pp_cusum(const core::EventStream& stream, const sim::HawkesParams& pre,
                        const sim::HawkesParams& post, double gamma, const core::Domain& domain) {
    pre.validate();
    post.validate();
    if (!pre.same_kernel(post)) throw ConfigError("pp_cusum: regimes must share alpha, beta and the kernel");
    const sim::SpatialKernel g(pre.kernel, pre.spatial_sigma);
    const double c = (post.mu - pre.mu) * domain.area();
    const double lag = sim::negligible_lag(pre.beta);
    auto out = make_result("pp-cusum");
    auto& r = out.result;
    r.omega_hat = whole(domain);
    const auto& ev = stream.events();
    double best_open = -INFINITY;  // max over non-empty windows
    double t_prev = 0.0;
    std::size_t first = 0;
    for (std::size_t j = 0; j < ev.size(); ++j) {
        double excitation = 0.0;
        if (pre.alpha > 0.0) {
            while (first < j && ev[j].t - ev[first].t > lag) ++first;
            for (std::size_t i = first; i < j; ++i)
                excitation += std::exp(-pre.beta * (ev[j].t - ev[i].t)) *
                              g.density(ev[j].s.x - ev[i].s.x, ev[j].s.y - ev[i].s.y);
            excitation *= pre.alpha * pre.beta;
        }
        const double l = std::log((post.mu + excitation) / (pre.mu + excitation));
        best_open = std::max(best_open - c * (ev[j].t - t_prev), 0.0) + l;
        t_prev = ev[j].t;
        const double w = std::max(0.0, best_open);
        r.times.push_back(ev[j].t);
        r.stats.push_back(w);
        r.stop_index = j;
        if (w >= gamma) {
            r.detected = true;
            r.nu = ev[j].t;
            break;
        }
    }
    return out;
}

BaselineResult min_cusum(const BinnedSeries& series, double mu0, double mu1, double gamma, Aggregation agg) {
    if (mu0 == mu1) throw ConfigError("min_cusum: mu0 and mu1 must differ");
    if (!(mu0 > 0.0) || !(mu1 > 0.0)) throw ConfigError("min_cusum: rates must be positive");
    const double vol = series.dt_bin * series.cell_area();
    auto out = make_result("min-cusum(" + std::to_string(series.n) + ")");
    auto& r = out.result;
    std::vector<double> w(static_cast<std::size_t>(series.cells()), 0.0);
    for (std::size_t k = 0; k < series.bins(); ++k) {
        double global = 0.0;
        for (int c = 0; c < series.cells(); ++c) {
            auto& wc = w[static_cast<std::size_t>(c)];
            wc = std::max(0.0, wc) + poisson_llr(series.counts[k][c], mu0 * vol, mu1 * vol);
            const double pos = std::max(wc, 0.0);
            global = agg == Aggregation::Sum ? global + pos : std::max(global, pos);
        }
        r.times.push_back(series.bin_end(k));
        r.stats.push_back(global);
        r.stop_index = k;
        if (global >= gamma) {
            r.detected = true;
            r.nu = series.bin_end(k);
            break;
        }
    }
    core::RegionUnion region;
    for (int ix = 0; ix < series.n; ++ix)
        for (int iy = 0; iy < series.n; ++iy)
            if (w[static_cast<std::size_t>(ix) * series.n + iy] > 0.0) region.add_box(series.cell_box(ix, iy));
    r.omega_hat = region;
    return out;
}

}  // namespace stpp::baselines
