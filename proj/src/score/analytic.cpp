#include <algorithm>
#include <cmath>

#include "stpp/error.hpp"
#include "stpp/score/model.hpp"

namespace stpp::score {

using core::Box;

AnalyticScoreModel::AnalyticScoreModel(sim::HawkesParams params, double delta, core::Domain domain,
                                       IntegralMethod method)
    : params_(params), delta_(delta), domain_(domain), method_(method),
      kernel_(params.kernel, params.spatial_sigma) {
    params_.validate();
    domain_.validate();
    if (!(delta > 0.0)) throw ConfigError("score model: delta must be positive");
}

AnalyticScoreModel AnalyticScoreModel::regional(sim::HawkesParams params, const core::RegionUnion& region,
                                                double region_mu, double delta, core::Domain domain,
                                                IntegralMethod method) {
    AnalyticScoreModel m(params, delta, domain, method);
    if (!(region_mu > 0.0) || !std::isfinite(region_mu))
        throw ConfigError("score model: region rate must be positive");
    // Complement twice to get disjoint boxes, so overlap areas add up.
    const auto outside = core::complement_boxes(region.boxes(), domain.s_bounds);
    m.region_ = core::complement_boxes(outside, domain.s_bounds);
    m.region_excess_ = region_mu - params.mu;
    return m;
}

double AnalyticScoreModel::base_rate(const core::Point& s) const {
    for (const auto& b : region_)
        if (b.contains(s)) return params_.mu + region_excess_;
    return params_.mu;
}

AnalyticScoreModel::BaseMass AnalyticScoreModel::base_mass(const core::Point& s, const Box& B) const {
    BaseMass m{params_.mu * B.area(), 0.0, 0.0};
    const auto& S = domain_.s_bounds;
    const double hi1 = s.x + delta_ < S.x1 ? 1.0 : 0.0, lo1 = s.x - delta_ > S.x0 ? 1.0 : 0.0;
    const double hi2 = s.y + delta_ < S.y1 ? 1.0 : 0.0, lo2 = s.y - delta_ > S.y0 ? 1.0 : 0.0;
    m.d1 = params_.mu * (hi1 - lo1) * B.height();
    m.d2 = params_.mu * (hi2 - lo2) * B.width();
    for (const auto& D : region_) {
        const double x0 = std::max(B.x0, D.x0), x1 = std::min(B.x1, D.x1);
        const double y0 = std::max(B.y0, D.y0), y1 = std::min(B.y1, D.y1);
        if (!(x1 > x0) || !(y1 > y0)) continue;
        const double ox = x1 - x0, oy = y1 - y0;
        // An overlap edge moves with s only when it is an unclipped ball edge.
        const double g1 = (B.x1 < D.x1 ? hi1 : 0.0) - (B.x0 > D.x0 ? lo1 : 0.0);
        const double g2 = (B.y1 < D.y1 ? hi2 : 0.0) - (B.y0 > D.y0 ? lo2 : 0.0);
        m.value += region_excess_ * ox * oy;
        m.d1 += region_excess_ * g1 * oy;
        m.d2 += region_excess_ * g2 * ox;
    }
    return m;
}

double AnalyticScoreModel::history_radius() const { return delta_ + kernel_.support_radius(); }

std::unique_ptr<ScoreModel> AnalyticScoreModel::clone() const {
    return std::make_unique<AnalyticScoreModel>(*this);
}

namespace {

struct EdgeFlags {
    double hi1, lo1, hi2, lo2;  // 1 when the ball edge is not clipped by S
};

EdgeFlags edge_flags(const core::Point& s, double delta, const Box& S) {
    return {s.x + delta < S.x1 ? 1.0 : 0.0, s.x - delta > S.x0 ? 1.0 : 0.0,
            s.y + delta < S.y1 ? 1.0 : 0.0, s.y - delta > S.y0 ? 1.0 : 0.0};
}

// Kernel moments of the excitation at (t, s): λ - μ and its spatial derivatives.
struct Excitation {
    double value{0.0};
    double d1{0.0}, d2{0.0};
    double d11{0.0}, d22{0.0};
};

Excitation excitation(const sim::SpatialKernel& g, const sim::HawkesParams& p, const ScoreInput& in) {
    Excitation ex;
    if (p.alpha == 0.0 || in.history == nullptr || in.history->size() == 0) return ex;
    const simd::Query q{in.t, in.s.x, in.s.y, p.beta, g.moment_param()};
    const simd::Moments m = g.moments(in.history->view(), q);
    const double c = p.alpha * p.beta * g.moment_scale();
    ex.value = c * m.s0;
    if (g.kind() == sim::KernelKind::Gaussian) {
        const double inv_s2 = 1.0 / (g.sigma() * g.sigma());
        ex.d1 = -c * m.sx * inv_s2;
        ex.d2 = -c * m.sy * inv_s2;
        ex.d11 = c * (m.sxx * inv_s2 * inv_s2 - m.s0 * inv_s2);
        ex.d22 = c * (m.syy * inv_s2 * inv_s2 - m.s0 * inv_s2);
    }
    return ex;
}

// Sums over history of the ball-integrated kernel terms.
struct BallSums {
    double eg{0.0};                      // Σ e_j G_j
    double wg{0.0};                      // Σ (p_j - e_j) G_j
    double wg1{0.0}, wg2{0.0};           // Σ (p_j - e_j) ∂G_j
    double wg11{0.0}, wg22{0.0};         // Σ (p_j - e_j) ∂²G_j
};

BallSums ball_sums(const sim::SpatialKernel& g, const sim::HawkesParams& p, const ScoreInput& in,
                   const Box& B, const EdgeFlags& f) {
    BallSums out;
    if (p.alpha == 0.0 || in.history == nullptr) return out;
    const auto& h = *in.history;
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double e = std::exp(-p.beta * (in.t - h.t[j]));
        const double pj = std::exp(-p.beta * (std::max(in.t_n, h.t[j]) - h.t[j]));
        const double a0 = B.x0 - h.x[j], a1 = B.x1 - h.x[j];
        const double b0 = B.y0 - h.y[j], b1 = B.y1 - h.y[j];
        const double P1 = g.cdf1(a1) - g.cdf1(a0);
        const double P2 = g.cdf1(b1) - g.cdf1(b0);
        const double q1 = f.hi1 * g.pdf1(a1) - f.lo1 * g.pdf1(a0);
        const double q2 = f.hi2 * g.pdf1(b1) - f.lo2 * g.pdf1(b0);
        const double r1 = f.hi1 * g.dpdf1(a1) - f.lo1 * g.dpdf1(a0);
        const double r2 = f.hi2 * g.dpdf1(b1) - f.lo2 * g.dpdf1(b0);
        const double w = pj - e;
        out.eg += e * P1 * P2;
        out.wg += w * P1 * P2;
        out.wg1 += w * q1 * P2;
        out.wg2 += w * P1 * q2;
        out.wg11 += w * r1 * P2;
        out.wg22 += w * P1 * r2;
    }
    return out;
}

}  // namespace

double AnalyticScoreModel::intensity(const ScoreInput& in) const {
    const double lambda = base_rate(in.s) + excitation(kernel_, params_, in).value;
    if (!(lambda > 0.0))
        throw DegenerateIntensityError("intensity is zero at the evaluation point; log undefined");
    return lambda;
}

double AnalyticScoreModel::log_density(const ScoreInput& in) const {
    const Box B = core::neighborhood(in.s, delta_, domain_);
    const EdgeFlags f = edge_flags(in.s, delta_, domain_.s_bounds);
    const BallSums sums = ball_sums(kernel_, params_, in, B, f);
    const double lambda = intensity(in);
    return std::log(lambda) - (in.dt() * base_mass(in.s, B).value + params_.alpha * sums.wg);
}

Vec3 AnalyticScoreModel::score(const ScoreInput& in) const {
    return method_ == IntegralMethod::ClosedForm ? score_closed_form(in) : score_quadrature(in);
}

Vec3 AnalyticScoreModel::score_closed_form(const ScoreInput& in) const {
    const auto& p = params_;
    const Box B = core::neighborhood(in.s, delta_, domain_);
    const EdgeFlags f = edge_flags(in.s, delta_, domain_.s_bounds);
    const Excitation ex = excitation(kernel_, p, in);
    const double lambda = base_rate(in.s) + ex.value;
    if (!(lambda > 0.0))
        throw DegenerateIntensityError("intensity is zero at the evaluation point; log undefined");
    const BallSums sums = ball_sums(kernel_, p, in, B, f);
    const double dt = in.dt();
    const BaseMass bm = base_mass(in.s, B);
    return {-p.beta * ex.value / lambda - (bm.value + p.alpha * p.beta * sums.eg),
            ex.d1 / lambda - (dt * bm.d1 + p.alpha * sums.wg1),
            ex.d2 / lambda - (dt * bm.d2 + p.alpha * sums.wg2)};
}

std::optional<Vec3> AnalyticScoreModel::jacobian_diag(const ScoreInput& in) const {
    if (method_ != IntegralMethod::ClosedForm) return std::nullopt;
    const auto& p = params_;
    const Box B = core::neighborhood(in.s, delta_, domain_);
    const EdgeFlags f = edge_flags(in.s, delta_, domain_.s_bounds);
    const Excitation ex = excitation(kernel_, p, in);
    const double mu = base_rate(in.s);
    const double lambda = mu + ex.value;
    if (!(lambda > 0.0))
        throw DegenerateIntensityError("intensity is zero at the evaluation point; log undefined");
    const BallSums sums = ball_sums(kernel_, p, in, B, f);
    const double l2 = lambda * lambda;
    // The base mass is piecewise linear in s, so it adds nothing to the diagonal.
    return Vec3{p.beta * p.beta * ex.value * mu / l2 + p.beta * p.alpha * p.beta * sums.eg,
                ex.d11 / lambda - ex.d1 * ex.d1 / l2 - p.alpha * sums.wg11,
                ex.d22 / lambda - ex.d2 * ex.d2 / l2 - p.alpha * sums.wg22};
}

// Midpoint quadrature: the temporal entry integrates λ(t, ·) over the ball on an
// m×m grid; the spatial entries differentiate the moving-ball integral through its
// unclipped edges, integrating λ along each edge (m nodes) over [t_n, t) (mt nodes).
Vec3 AnalyticScoreModel::score_quadrature(const ScoreInput& in) const {
    constexpr int m = 16;
    constexpr int mt = 32;
    const auto& p = params_;
    const Box B = core::neighborhood(in.s, delta_, domain_);
    const EdgeFlags f = edge_flags(in.s, delta_, domain_.s_bounds);
    const Excitation ex = excitation(kernel_, p, in);
    const double lambda = base_rate(in.s) + ex.value;
    if (!(lambda > 0.0))
        throw DegenerateIntensityError("intensity is zero at the evaluation point; log undefined");

    const sim::EventBuffer empty;
    const sim::EventBuffer& h = in.history ? *in.history : empty;
    auto lambda_at = [&](double u, double x, double y) {
        double acc = 0.0;
        if (p.alpha > 0.0) {
            for (std::size_t j = 0; j < h.size(); ++j) {
                if (!(h.t[j] < u)) continue;
                acc += std::exp(-p.beta * (u - h.t[j])) * kernel_.density(x - h.x[j], y - h.y[j]);
            }
        }
        return base_rate({x, y}) + p.alpha * p.beta * acc;
    };

    const double hx = B.width() / m, hy = B.height() / m;
    double ball = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            ball += lambda_at(in.t, B.x0 + (a + 0.5) * hx, B.y0 + (b + 0.5) * hy);
    ball *= hx * hy;

    const double dt = in.dt();
    const double ht = dt / mt;
    auto edge_time_integral = [&](bool vertical, double coord) {
        double acc = 0.0;
        for (int k = 0; k < mt; ++k) {
            const double u = in.t_n + (k + 0.5) * ht;
            for (int a = 0; a < m; ++a) {
                acc += vertical ? lambda_at(u, coord, B.y0 + (a + 0.5) * hy)
                                : lambda_at(u, B.x0 + (a + 0.5) * hx, coord);
            }
        }
        return acc * ht * (vertical ? hy : hx);
    };
    double dlam1 = 0.0, dlam2 = 0.0;
    if (dt > 0.0) {
        if (f.hi1 > 0.0) dlam1 += edge_time_integral(true, B.x1);
        if (f.lo1 > 0.0) dlam1 -= edge_time_integral(true, B.x0);
        if (f.hi2 > 0.0) dlam2 += edge_time_integral(false, B.y1);
        if (f.lo2 > 0.0) dlam2 -= edge_time_integral(false, B.y0);
    }
    return {-p.beta * ex.value / lambda - ball, ex.d1 / lambda - dlam1, ex.d2 / lambda - dlam2};
}

HistoryTracker::HistoryTracker(const core::Domain& domain, double delta, bool needs_history,
                               double history_radius, double history_lag, std::size_t local_cap)
    : domain_(domain), delta_(delta), needs_history_(needs_history),
      radius_(std::max(history_radius, delta)), local_cap_(std::max<std::size_t>(local_cap, 1)),
      index_(domain.s_bounds, std::max(delta, domain.s_bounds.width() / 256.0), history_lag) {}

namespace {

struct TrackerSpec {
    bool needs{false};
    double radius{0.0};
    double lag{0.0};
    std::size_t cap{1};
};

TrackerSpec spec_for(std::initializer_list<const ScoreModel*> models) {
    TrackerSpec s;
    for (const auto* m : models) {
        if (m == nullptr) continue;
        s.needs = s.needs || m->needs_history();
        s.radius = std::max(s.radius, m->history_radius());
        s.lag = std::max(s.lag, m->history_lag());
        s.cap = std::max(s.cap, m->local_cap());
    }
    return s;
}

double delta_of(std::initializer_list<const ScoreModel*> models) {
    for (const auto* m : models)
        if (m) return m->delta();
    throw ConfigError("history tracker: no score model supplied");
}

}  // namespace

HistoryTracker::HistoryTracker(const core::Domain& domain,
                               std::initializer_list<const ScoreModel*> models)
    : HistoryTracker(domain, delta_of(models), spec_for(models).needs, spec_for(models).radius,
                     spec_for(models).lag, spec_for(models).cap) {}

const ScoreInput& HistoryTracker::prepare(const core::Event& x) {
    local_.clear();
    history_.clear();
    const Box ball = core::neighborhood(x.s, delta_, domain_);
    index_.recent_in_box(ball, x.t, local_cap_, local_);
    if (needs_history_) {
        const Box reach{x.s.x - radius_, x.s.y - radius_, x.s.x + radius_, x.s.y + radius_};
        index_.gather(reach, x.t, history_);
    }
    input_ = ScoreInput{x.t, local_.size() ? local_.t.back() : 0.0, x.s, &history_, &local_};
    return input_;
}

void HistoryTracker::add(const core::Event& x) { index_.add(x); }

HistoryTracker::Snapshot HistoryTracker::snapshot() const {
    return Snapshot{input_.t, input_.t_n, input_.s, std::make_shared<sim::EventBuffer>(history_),
                    std::make_shared<sim::EventBuffer>(local_)};
}

std::vector<HistoryTracker::Snapshot> build_inputs(const core::EventStream& stream,
                                                   const core::Domain& domain, double delta,
                                                   std::initializer_list<const ScoreModel*> models) {
    auto spec = spec_for(models);
    HistoryTracker tracker(domain, delta, spec.needs, spec.radius, spec.lag, spec.cap);
    std::vector<HistoryTracker::Snapshot> out;
    out.reserve(stream.size());
    for (const auto& e : stream) {
        tracker.prepare(e);
        out.push_back(tracker.snapshot());
        tracker.add(e);
    }
    return out;
}

}  // namespace stpp::score
