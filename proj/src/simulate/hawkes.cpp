#include "stpp/simulate/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stpp/error.hpp"

namespace stpp::sim {

std::string kernel_name(KernelKind k) { return k == KernelKind::Gaussian ? "gaussian" : "uniform"; }

KernelKind kernel_from_name(const std::string& name) {
    if (name == "gaussian") return KernelKind::Gaussian;
    if (name == "uniform") return KernelKind::Uniform;
    throw ConfigError("unknown kernel '" + name + "' (expected gaussian or uniform)");
}

void HawkesParams::validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("hawkes: mu must be >= 0");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("hawkes: alpha must lie in [0,1)");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("hawkes: beta must be > 0");
    if (!(spatial_sigma > 0.0)) throw ConfigError("hawkes: spatial_sigma must be > 0");
}

double stationary_intensity(const HawkesParams& p) {
    if (!(p.alpha < 1.0)) throw ConfigError("stationary intensity requires alpha < 1");
    return p.mu / (1.0 - p.alpha);
}

SpatialKernel::SpatialKernel(KernelKind kind, double sigma)
    : kind_(kind), sigma_(sigma),
      norm_(kind == KernelKind::Gaussian ? 1.0 / (2.0 * std::numbers::pi * sigma * sigma)
                                         : 1.0 / (4.0 * sigma * sigma)) {}

double SpatialKernel::density(double dx, double dy) const {
    if (kind_ == KernelKind::Gaussian)
        return norm_ * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_ * sigma_));
    return (std::abs(dx) <= sigma_ && std::abs(dy) <= sigma_) ? norm_ : 0.0;
}

double SpatialKernel::pdf1(double u) const {
    if (kind_ == KernelKind::Gaussian) {
        const double z = u / sigma_;
        return std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
    }
    return std::abs(u) <= sigma_ ? 0.5 / sigma_ : 0.0;
}

double SpatialKernel::dpdf1(double u) const {
    if (kind_ == KernelKind::Gaussian) return -u / (sigma_ * sigma_) * pdf1(u);
    return 0.0;
}

double SpatialKernel::cdf1(double u) const {
    if (kind_ == KernelKind::Gaussian) return 0.5 * std::erfc(-u / (sigma_ * std::numbers::sqrt2));
    return std::clamp((u + sigma_) / (2.0 * sigma_), 0.0, 1.0);
}

double SpatialKernel::mass_in_box(const core::Point& src, const core::Box& box) const {
    const double px = cdf1(box.x1 - src.x) - cdf1(box.x0 - src.x);
    const double py = cdf1(box.y1 - src.y) - cdf1(box.y0 - src.y);
    return px * py;
}

double SpatialKernel::support_radius() const {
    return kind_ == KernelKind::Gaussian ? 10.0 * sigma_ : sigma_;
}

double SpatialKernel::moment_param() const {
    return kind_ == KernelKind::Gaussian ? 1.0 / (2.0 * sigma_ * sigma_) : sigma_;
}

simd::Moments SpatialKernel::moments(const simd::SourceView& src, const simd::Query& q) const {
    return kind_ == KernelKind::Gaussian ? simd::gaussian_moments(src, q) : simd::box_moments(src, q);
}

ExcitationIndex::ExcitationIndex(const core::Box& bounds, double cell_size, double time_cut)
    : bounds_(bounds), cell_(cell_size), time_cut_(time_cut) {
    if (!(cell_size > 0.0)) throw ConfigError("excitation index: cell size must be > 0");
    nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.width() / cell_size)));
    ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.height() / cell_size)));
    cells_.resize(nx_ * ny_);
}

std::size_t ExcitationIndex::cell_x(double x) const {
    const double f = std::floor((x - bounds_.x0) / cell_);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(nx_ - 1)));
}

std::size_t ExcitationIndex::cell_y(double y) const {
    const double f = std::floor((y - bounds_.y0) / cell_);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(ny_ - 1)));
}

void ExcitationIndex::add(const core::Event& e) {
    Cell& c = cells_[cell_y(e.s.y) * nx_ + cell_x(e.s.x)];
    c.t.push_back(e.t);
    c.x.push_back(e.s.x);
    c.y.push_back(e.s.y);
    ++count_;
}

void ExcitationIndex::gather(const core::Box& region, double t_now, EventBuffer& out) {
    const std::size_t i0 = cell_x(region.x0), i1 = cell_x(region.x1);
    const std::size_t j0 = cell_y(region.y0), j1 = cell_y(region.y1);
    for (std::size_t j = j0; j <= j1; ++j) {
        for (std::size_t i = i0; i <= i1; ++i) {
            Cell& c = cells_[j * nx_ + i];
            while (c.start < c.t.size() && t_now - c.t[c.start] > time_cut_) ++c.start;
            for (std::size_t k = c.start; k < c.t.size() && c.t[k] < t_now; ++k) {
                out.t.push_back(c.t[k]);
                out.x.push_back(c.x[k]);
                out.y.push_back(c.y[k]);
            }
        }
    }
}

void ExcitationIndex::recent_in_box(const core::Box& box, double t_now, std::size_t k,
                                    EventBuffer& out) const {
    if (k == 0) return;
    auto later = [](const core::Event& a, const core::Event& b) { return a.t > b.t; };
    // Min-heap on time holding the k most recent matches seen so far.
    std::vector<core::Event> heap;
    auto scan = [&](const Cell& c) {
        for (std::size_t m = c.t.size(); m-- > 0;) {
            if (!(c.t[m] < t_now)) continue;
            if (heap.size() == k && c.t[m] <= heap.front().t) break;
            const core::Point p{c.x[m], c.y[m]};
            if (!box.contains(p)) continue;
            heap.push_back({c.t[m], p});
            std::push_heap(heap.begin(), heap.end(), later);
            if (heap.size() > k) {
                std::pop_heap(heap.begin(), heap.end(), later);
                heap.pop_back();
            }
        }
    };
    const std::size_t i0 = cell_x(box.x0), i1 = cell_x(box.x1);
    const std::size_t j0 = cell_y(box.y0), j1 = cell_y(box.y1);
    const std::size_t ic = cell_x(0.5 * (box.x0 + box.x1)), jc = cell_y(0.5 * (box.y0 + box.y1));
    scan(cells_[jc * nx_ + ic]);
    for (std::size_t j = j0; j <= j1; ++j)
        for (std::size_t i = i0; i <= i1; ++i)
            if (i != ic || j != jc) scan(cells_[j * nx_ + i]);
    std::sort(heap.begin(), heap.end(), [](const core::Event& a, const core::Event& b) { return a.t < b.t; });
    for (const auto& e : heap) out.push(e);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace stpp::sim
