#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stpp/core/events.hpp"
#include "stpp/core/geometry.hpp"
#include "stpp/simd/kernels.hpp"

namespace stpp::sim {

enum class KernelKind { Gaussian, Uniform };

[[nodiscard]] std::string kernel_name(KernelKind k);
[[nodiscard]] KernelKind kernel_from_name(const std::string& name);

struct HawkesParams {
    double mu{100.0};
    double alpha{0.0};
    double beta{0.1};
    double spatial_sigma{0.02};
    KernelKind kernel{KernelKind::Gaussian};

    void validate() const;
    [[nodiscard]] bool same_kernel(const HawkesParams& o) const {
        return alpha == o.alpha && beta == o.beta && spatial_sigma == o.spatial_sigma &&
               kernel == o.kernel;
    }
    friend bool operator==(const HawkesParams&, const HawkesParams&) = default;
};

// μ/(1-α); throws ConfigError when α >= 1.
[[nodiscard]] double stationary_intensity(const HawkesParams& p);

// Normalized spatial density g and its separable one-dimensional factors.
class SpatialKernel {
public:
    SpatialKernel(KernelKind kind, double sigma);

    [[nodiscard]] KernelKind kind() const { return kind_; }
    [[nodiscard]] double sigma() const { return sigma_; }

    [[nodiscard]] double density(double dx, double dy) const;
    [[nodiscard]] double pdf1(double u) const;
    [[nodiscard]] double dpdf1(double u) const;
    [[nodiscard]] double cdf1(double u) const;
    // ∫_box g(s' - src) ds'.
    [[nodiscard]] double mass_in_box(const core::Point& src, const core::Box& box) const;
    // l-infinity distance beyond which the density is negligible (or exactly zero).
    [[nodiscard]] double support_radius() const;
    // Normalization and parameter for the vectorized moment kernels.
    [[nodiscard]] double moment_scale() const { return norm_; }
    [[nodiscard]] double moment_param() const;
    [[nodiscard]] simd::Moments moments(const simd::SourceView& src, const simd::Query& q) const;

    // Draw a displacement distributed as g.
    template <class Rng>
    core::Point sample(Rng& rng) const {
        if (kind_ == KernelKind::Gaussian) {
            std::normal_distribution<double> nd(0.0, sigma_);
            const double dx = nd(rng);
            const double dy = nd(rng);
            return {dx, dy};
        }
        std::uniform_real_distribution<double> ud(-sigma_, sigma_);
        const double dx = ud(rng);
        const double dy = ud(rng);
        return {dx, dy};
    }

private:
    KernelKind kind_;
    double sigma_;
    double norm_;
};

// Structure-of-arrays event buffer.
struct EventBuffer {
    std::vector<double> t, x, y;
    void clear() {
        t.clear();
        x.clear();
        y.clear();
    }
    void push(const core::Event& e) {
        t.push_back(e.t);
        x.push_back(e.s.x);
        y.push_back(e.s.y);
    }
    [[nodiscard]] std::size_t size() const { return t.size(); }
    [[nodiscard]] simd::SourceView view() const { return {t.data(), x.data(), y.data(), t.size()}; }
};

// Append-only uniform grid over S with per-cell SoA storage. Events older than
// `time_cut` relative to the query time are dropped lazily, so query times
// must be non-decreasing.
class ExcitationIndex {
public:
    ExcitationIndex(const core::Box& bounds, double cell_size, double time_cut);

    void add(const core::Event& e);
    // Appends to `out` every retained event in cells overlapping `region` with t < t_now.
    void gather(const core::Box& region, double t_now, EventBuffer& out);
    // Appends the (up to) k most recent events inside `box` with t < t_now, oldest
    // first. Ignores the time cut.
    void recent_in_box(const core::Box& box, double t_now, std::size_t k, EventBuffer& out) const;
    [[nodiscard]] std::size_t size() const { return count_; }

private:
    struct Cell {
        std::vector<double> t, x, y;
        std::size_t start{0};
    };
    [[nodiscard]] std::size_t cell_x(double x) const;
    [[nodiscard]] std::size_t cell_y(double y) const;

    core::Box bounds_;
    double cell_;
    double time_cut_;
    std::size_t nx_, ny_;
    std::vector<Cell> cells_;
    std::size_t count_{0};
};

// Time beyond which e^{-beta dt} is below double resolution.
[[nodiscard]] inline double negligible_lag(double beta) { return 37.0 / beta; }

// Deterministic generator for (seed, stream index).
[[nodiscard]] std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index = 0);

}  // namespace stpp::sim
