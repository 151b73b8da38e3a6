#include "stpp/score/hyvarinen.hpp"

#include <cmath>

#include "stpp/error.hpp"

namespace stpp::score {

namespace {

// w_k(x) f_k(x) with coordinate k of the evaluation point shifted by `shift`.
double weighted_component(const ScoreModel& model, const WeightConfig& wcfg, ScoreInput in, int k,
                          double shift) {
    if (k == 0) in.t += shift;
    if (k == 1) in.s.x += shift;
    if (k == 2) in.s.y += shift;
    const Vec3 w = weight(in.transformed(), model.domain(), wcfg);
    if (w[k] == 0.0 && shift == 0.0) return 0.0;
    return w[k] * model.score(in)[k];
}

}  // namespace

double divergence(const ScoreModel& model, const WeightConfig& wcfg, const ScoreInput& in,
                  DivergenceMethod method, double step) {
    std::optional<Vec3> jac;
    if (method != DivergenceMethod::FiniteDifference) jac = model.jacobian_diag(in);
    if (method == DivergenceMethod::ClosedForm && !jac)
        throw ConfigError("score model has no closed-form Jacobian");

    if (jac) {
        const auto xt = in.transformed();
        const Vec3 w = weight(xt, model.domain(), wcfg);
        const Vec3 dw = weight_diag_gradient(xt, model.domain(), wcfg);
        const Vec3 f = model.score(in);
        double div = 0.0;
        for (int k = 0; k < 3; ++k) div += dw[k] * f[k] + w[k] * (*jac)[k];
        return div;
    }

    const auto xt = in.transformed();
    const Vec3 w = weight(xt, model.domain(), wcfg);
    const Vec3 dw = weight_diag_gradient(xt, model.domain(), wcfg);
    double div = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (w[k] == 0.0 && dw[k] == 0.0) continue;
        if (k == 0 && in.dt() < step) {
            const double g0 = weighted_component(model, wcfg, in, k, 0.0);
            const double g1 = weighted_component(model, wcfg, in, k, step);
            const double g2 = weighted_component(model, wcfg, in, k, 2.0 * step);
            div += (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * step);
        } else {
            const double gp = weighted_component(model, wcfg, in, k, step);
            const double gm = weighted_component(model, wcfg, in, k, -step);
            div += (gp - gm) / (2.0 * step);
        }
    }
    return div;
}

double hyvarinen(const ScoreModel& model, const WeightConfig& wcfg, const ScoreInput& in,
                 DivergenceMethod method) {
    const Vec3 w = weight(in.transformed(), model.domain(), wcfg);
    const Vec3 f = model.score(in);
    double quad = 0.0;
    for (int k = 0; k < 3; ++k) quad += w[k] * f[k] * f[k];
    return quad + 2.0 * divergence(model, wcfg, in, method);
}

double anomaly(const ScoreModel& model0, const ScoreModel& model1, const WeightConfig& wcfg,
               const ScoreInput& in) {
    return anomaly(hyvarinen(model0, wcfg, in), hyvarinen(model1, wcfg, in));
}

namespace {

void check_pair(const sim::HawkesParams& pre, const sim::HawkesParams& post) {
    if (!pre.same_kernel(post))
        throw ConfigError("score difference: regimes must share alpha, beta and the kernel");
}

}  // namespace

Vec3 score_diff_closed_form(const sim::HawkesParams& pre, const sim::HawkesParams& post,
                            const ScoreInput& in, double delta, const core::Domain& domain) {
    check_pair(pre, post);
    const double area = core::neighborhood(in.s, delta, domain).area();
    return {(pre.mu - post.mu) * area, 0.0, 0.0};
}

Vec3 score_diff_exact(const sim::HawkesParams& pre, const sim::HawkesParams& post,
                      const ScoreInput& in, double delta, const core::Domain& domain) {
    check_pair(pre, post);
    const sim::SpatialKernel g(pre.kernel, pre.spatial_sigma);
    // Σ_j ∇_x κ(x, x_j) with κ = β e^{-β(t - t_j)} g(s - s_j).
    double k_t = 0.0, k_1 = 0.0, k_2 = 0.0, excitation = 0.0;
    if (pre.alpha > 0.0 && in.history) {
        const auto& h = *in.history;
        const double inv_s2 = 1.0 / (g.sigma() * g.sigma());
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double dx = in.s.x - h.x[j], dy = in.s.y - h.y[j];
            const double kappa = pre.beta * std::exp(-pre.beta * (in.t - h.t[j])) * g.density(dx, dy);
            excitation += kappa;
            k_t += -pre.beta * kappa;
            if (g.kind() == sim::KernelKind::Gaussian) {
                k_1 += -dx * inv_s2 * kappa;
                k_2 += -dy * inv_s2 * kappa;
            }
        }
    }
    const double lam0 = pre.mu + pre.alpha * excitation;
    const double lam1 = post.mu + pre.alpha * excitation;
    if (!(lam0 > 0.0) || !(lam1 > 0.0))
        throw DegenerateIntensityError("score difference: zero intensity");
    const core::Box B = core::neighborhood(in.s, delta, domain);
    const auto& S = domain.s_bounds;
    const double d1 = ((in.s.x + delta < S.x1) ? 1.0 : 0.0) - ((in.s.x - delta > S.x0) ? 1.0 : 0.0);
    const double d2 = ((in.s.y + delta < S.y1) ? 1.0 : 0.0) - ((in.s.y - delta > S.y0) ? 1.0 : 0.0);
    const double scale = pre.mu - post.mu;
    const double denom = lam1 * lam0;
    return {scale * (pre.alpha * k_t / denom + B.area()),
            scale * (pre.alpha * k_1 / denom + in.dt() * d1 * B.height()),
            scale * (pre.alpha * k_2 / denom + in.dt() * d2 * B.width())};
}

}  // namespace stpp::score
