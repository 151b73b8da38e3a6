#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stpp/core/events.hpp"
#include "stpp/detect/detector.hpp"
#include "stpp/simulate/hawkes.hpp"

namespace stpp::baselines {

// Counts on an n×n spatial grid per time bin [k·dt_bin, (k+1)·dt_bin).
struct BinnedSeries {
    int n{1};
    double dt_bin{0.01};
    core::Domain domain{};
    std::vector<std::vector<int>> counts;  // counts[bin][ix * n + iy]

    [[nodiscard]] std::size_t bins() const { return counts.size(); }
    [[nodiscard]] int cells() const { return n * n; }
    [[nodiscard]] double cell_area() const { return domain.area() / (n * n); }
    [[nodiscard]] core::Box cell_box(int ix, int iy) const;
    [[nodiscard]] double bin_end(std::size_t k) const;
    [[nodiscard]] Eigen::VectorXd vector(std::size_t k) const;
};

// Half-open cells; points on the upper domain edge go to the last cell.
[[nodiscard]] BinnedSeries bin_events(const core::EventStream& stream, int n, double dt_bin,
                                      const core::Domain& domain);

struct BaselineResult {
    std::string detector;
    detect::DetectionResult result;

    [[nodiscard]] nlohmann::json to_json() const;
};

// Poisson CUSUM on the total count per bin; the region estimate is all of S.
[[nodiscard]] BaselineResult cusum_binned(const BinnedSeries& series, double mu0, double mu1, double gamma);

// Gaussian model of per-bin count vectors.
struct GaussianModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;  // inverse of the loaded covariance

    // Sample mean and covariance of the bins, covariance loaded by `loading` on the diagonal.
    static GaussianModel fit(const BinnedSeries& series, double loading = 1e-6);
    // ‖Σ⁻¹(z - m)‖² - 2 tr(Σ⁻¹).
    [[nodiscard]] double hyvarinen(const Eigen::VectorXd& z) const;
};

[[nodiscard]] BaselineResult scusum_binned(const BinnedSeries& series, const GaussianModel& model0,
                                           const GaussianModel& model1, double gamma);

// Continuous-time point-process CUSUM with Ω = S: W_t = sup over change times of
// the log-likelihood ratio of the post- against the pre-change Hawkes regime.
// The regimes must share α, β and the kernel, so the compensator difference is
// (μ1 - μ0)|S|(t - τ) exactly.
[[nodiscard]] BaselineResult pp_cusum(const core::EventStream& stream, const sim::HawkesParams& pre,
                                      const sim::HawkesParams& post, double gamma,
                                      const core::Domain& domain);

enum class Aggregation { Sum, Max };

// Per-cell Poisson CUSUMs combined into one statistic; the region estimate is
// the union of cells with a positive statistic at stopping.
[[nodiscard]] BaselineResult min_cusum(const BinnedSeries& series, double mu0, double mu1, double gamma,
                                       Aggregation agg = Aggregation::Sum);

}  // namespace stpp::baselines
