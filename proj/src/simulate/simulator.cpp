#include "stpp/simulate/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "stpp/error.hpp"
#include "stpp/io/json.hpp"

namespace stpp::sim {

using core::Box;
using core::Event;
using core::EventStream;
using core::Point;
using core::RegionUnion;

void ChangeScenario::validate() const {
    domain.validate();
    pre.validate();
    post.validate();
    if (!pre.same_kernel(post))
        throw ConfigError("scenario: pre and post regimes may differ only in mu");
    if (!(tau >= 0.0 && tau <= domain.t_end)) throw ConfigError("scenario: tau must lie in [0, T]");
}

double ChangeScenario::base_rate(double t, const Point& s) const {
    return (t >= tau && omega.contains(s)) ? post.mu : pre.mu;
}

ChangeScenario ChangeScenario::without_change() const {
    ChangeScenario out = *this;
    out.tau = domain.t_end;
    out.post = pre;
    return out;
}

ChangeScenario reference_scenario(double alpha) {
    ChangeScenario sc;
    sc.pre = HawkesParams{100.0, alpha, 0.1, 0.02, KernelKind::Gaussian};
    sc.post = sc.pre;
    sc.post.mu = 1000.0;
    sc.tau = 0.5;
    sc.omega = RegionUnion({Box{0.4, 0.4, 0.6, 0.6}});
    sc.domain = core::Domain{1.0, Box{0.0, 0.0, 1.0, 1.0}};
    return sc;
}

double intensity_at(const ChangeScenario& sc, const Event& x, const EventStream& history) {
    const SpatialKernel g(sc.pre.kernel, sc.pre.spatial_sigma);
    double excitation = 0.0;
    double prev = -INFINITY;
    for (const auto& e : history) {
        if (!(e.t > prev)) throw ConfigError("intensity_at: history is not time-ordered");
        if (!(e.t < x.t)) throw ConfigError("intensity_at: history must precede the event");
        prev = e.t;
        excitation += std::exp(-sc.pre.beta * (x.t - e.t)) * g.density(x.s.x - e.s.x, x.s.y - e.s.y);
    }
    return sc.base_rate(x.t, x.s) + sc.pre.alpha * sc.pre.beta * excitation;
}

namespace {

// Disjoint boxes covering omega ∩ S with cumulative areas for uniform sampling.
struct UniformRegionSampler {
    std::vector<Box> boxes;
    std::vector<double> cumulative;
    double area{0.0};

    UniformRegionSampler(const RegionUnion& r, const Box& bounds) {
        const auto outside = core::complement_boxes(r.boxes(), bounds);
        boxes = core::complement_boxes(outside, bounds);
        for (const auto& b : boxes) {
            area += b.area();
            cumulative.push_back(area);
        }
    }

    template <class Rng>
    Point sample(Rng& rng) const {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const double pick = u01(rng) * area;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const Box& b = boxes[std::min<std::size_t>(it - cumulative.begin(), boxes.size() - 1)];
        const double x = b.x0 + u01(rng) * b.width();
        const double y = b.y0 + u01(rng) * b.height();
        return {x, y};
    }
};

// Kernel components with weights e^{beta (t_j - t_ref)} and running prefix sums.
class ComponentTable {
public:
    explicit ComponentTable(double beta) : beta_(beta) {}

    void add(const Event& e) {
        events_.push_back(e);
        const double w = std::exp(beta_ * (e.t - t_ref_));
        prefix_.push_back((prefix_.empty() ? 0.0 : prefix_.back()) + w);
    }

    // Σ_j e^{-beta (t_k - t_j)}.
    [[nodiscard]] double decayed_total(double t_k) const {
        return prefix_.empty() ? 0.0 : prefix_.back() * std::exp(-beta_ * (t_k - t_ref_));
    }

    // Index j drawn with probability proportional to its weight.
    [[nodiscard]] const Event& pick(double u01) const {
        const double target = u01 * prefix_.back();
        auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
        return events_[std::min<std::size_t>(it - prefix_.begin(), events_.size() - 1)];
    }

    // Rebase weights to t_k once they grow large; drop negligible components.
    void maybe_rebase(double t_k) {
        if (beta_ * (t_k - t_ref_) < 200.0) return;
        const double cut = t_k - negligible_lag(beta_);
        std::vector<Event> kept;
        for (const auto& e : events_)
            if (e.t >= cut) kept.push_back(e);
        events_.clear();
        prefix_.clear();
        t_ref_ = t_k;
        for (const auto& e : kept) add(e);
    }

private:
    double beta_;
    double t_ref_{0.0};
    std::vector<Event> events_;
    std::vector<double> prefix_;
};

}  // namespace

EventStream simulate(const ChangeScenario& sc, std::uint64_t seed, std::uint64_t index,
                     const SimulationOptions& opts) {
    sc.validate();
    auto rng = make_rng(seed, index);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const Box& S = sc.domain.s_bounds;
    const double T = sc.domain.t_end;
    const double ab = sc.pre.alpha * sc.pre.beta;
    const SpatialKernel g(sc.pre.kernel, sc.pre.spatial_sigma);
    const UniformRegionSampler omega(sc.omega, S);
    const double extra = std::max(0.0, sc.post.mu - sc.pre.mu);
    const double base_mass = sc.pre.mu * S.area();
    const double radius = g.support_radius();

    ExcitationIndex index_grid(S, std::max(radius, S.width() / 256.0), negligible_lag(sc.pre.beta));
    ComponentTable components(sc.pre.beta);
    EventBuffer local;
    std::vector<Event> out;

    double t = 0.0;
    double t_k = 0.0;  // time at which the kernel part of the bound is frozen
    bool after_tau = sc.tau <= 0.0;
    while (true) {
        const double bg_mass = base_mass + (after_tau ? extra * omega.area : 0.0);
        const double kernel_mass = sc.pre.alpha > 0.0 ? ab * components.decayed_total(t_k) : 0.0;
        const double total = bg_mass + kernel_mass;
        const bool tau_ahead = !after_tau && sc.tau < T;
        if (!(total > 0.0)) {
            if (!tau_ahead) break;
            t = sc.tau;
            after_tau = true;
            continue;
        }
        const double tc = t + std::exponential_distribution<double>(total)(rng);
        if (tau_ahead && tc >= sc.tau) {
            t = sc.tau;
            after_tau = true;
            continue;
        }
        if (tc >= T) break;
        t = tc;

        const double pick = u01(rng) * total;
        Point s;
        if (pick < base_mass) {
            s = {S.x0 + u01(rng) * S.width(), S.y0 + u01(rng) * S.height()};
        } else if (pick < bg_mass) {
            s = omega.sample(rng);
        } else {
            const Event& parent = components.pick(u01(rng));
            const Point d = g.sample(rng);
            s = {parent.s.x + d.x, parent.s.y + d.y};
        }
        const double u_accept = u01(rng);
        if (!S.contains(s)) continue;

        double e_k = 0.0;
        if (sc.pre.alpha > 0.0) {
            local.clear();
            index_grid.gather(Box{s.x - radius, s.y - radius, s.x + radius, s.y + radius}, t, local);
            const simd::Query q{t_k, s.x, s.y, sc.pre.beta, g.moment_param()};
            e_k = ab * g.moment_scale() * g.moments(local.view(), q).s0;
        }
        const double bg_bar = sc.pre.mu + ((after_tau && sc.omega.contains(s)) ? extra : 0.0);
        const double lambda = sc.base_rate(t, s) + e_k * std::exp(-sc.pre.beta * (t - t_k));
        if (u_accept * (bg_bar + e_k) >= lambda) continue;

        if (!out.empty() && t <= out.back().t) t = std::nextafter(out.back().t, INFINITY);
        if (out.size() >= opts.max_events)
            throw BudgetError("simulation exceeded the event cap of " +
                              std::to_string(opts.max_events));
        const Event e{t, s};
        out.push_back(e);
        if (sc.pre.alpha > 0.0) {
            index_grid.add(e);
            components.maybe_rebase(t);
            components.add(e);
        }
        t_k = t;
    }
    return EventStream(std::move(out));
}

namespace {

double omega_area_in(const ChangeScenario& sc) {
    return core::intersection_area(sc.omega, RegionUnion({sc.domain.s_bounds}));
}

double background_integral(const ChangeScenario& sc, double a, double b, double omega_area) {
    const double S = sc.domain.s_bounds.area();
    double v = sc.pre.mu * S * (b - a);
    const double start = std::max(a, sc.tau);
    if (b > start) v += (sc.post.mu - sc.pre.mu) * omega_area * (b - start);
    return v;
}

}  // namespace

double compensator(const ChangeScenario& sc, const EventStream& stream, double t_a, double t_b) {
    const SpatialKernel g(sc.pre.kernel, sc.pre.spatial_sigma);
    double v = background_integral(sc, t_a, t_b, omega_area_in(sc));
    if (sc.pre.alpha == 0.0) return v;
    double exc = 0.0;
    for (const auto& e : stream) {
        if (!(e.t < t_b)) break;
        const double start = std::max(t_a, e.t);
        const double mass = g.mass_in_box(e.s, sc.domain.s_bounds);
        exc += (std::exp(-sc.pre.beta * (start - e.t)) - std::exp(-sc.pre.beta * (t_b - e.t))) * mass;
    }
    return v + sc.pre.alpha * exc;
}

std::vector<double> rescaled_gaps(const ChangeScenario& sc, const EventStream& stream) {
    const SpatialKernel g(sc.pre.kernel, sc.pre.spatial_sigma);
    const double omega_area = omega_area_in(sc);
    std::vector<double> gaps;
    gaps.reserve(stream.size());
    double carried = 0.0;  // Σ_j e^{-beta (t_prev - t_j)} mass_j
    double t_prev = 0.0;
    for (const auto& e : stream) {
        const double decay = std::exp(-sc.pre.beta * (e.t - t_prev));
        gaps.push_back(background_integral(sc, t_prev, e.t, omega_area) +
                       sc.pre.alpha * carried * (1.0 - decay));
        carried = carried * decay + g.mass_in_box(e.s, sc.domain.s_bounds);
        t_prev = e.t;
    }
    return gaps;
}

nlohmann::json params_to_json(const HawkesParams& p) {
    return {{"mu", p.mu},
            {"alpha", p.alpha},
            {"beta", p.beta},
            {"spatial_sigma", p.spatial_sigma},
            {"kernel", kernel_name(p.kernel)}};
}

HawkesParams params_from_json(const nlohmann::json& j) {
    io::reject_unknown_keys(j, {"mu", "alpha", "beta", "spatial_sigma", "kernel"}, "hawkes params");
    HawkesParams p;
    try {
        p.mu = j.value("mu", p.mu);
        p.alpha = j.value("alpha", p.alpha);
        p.beta = j.value("beta", p.beta);
        p.spatial_sigma = j.value("spatial_sigma", p.spatial_sigma);
        if (j.contains("kernel")) p.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hawkes params: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::json scenario_to_json(const ChangeScenario& sc) {
    return {{"pre", params_to_json(sc.pre)},
            {"post", params_to_json(sc.post)},
            {"tau", sc.tau},
            {"omega", io::region_to_json(sc.omega)},
            {"domain", io::domain_to_json(sc.domain)}};
}

ChangeScenario scenario_from_json(const nlohmann::json& j) {
    io::reject_unknown_keys(j, {"pre", "post", "tau", "omega", "domain"}, "scenario");
    ChangeScenario sc = reference_scenario();
    try {
        if (j.contains("pre")) sc.pre = params_from_json(j.at("pre"));
        if (j.contains("post")) sc.post = params_from_json(j.at("post"));
        if (j.contains("tau")) sc.tau = j.at("tau").get<double>();
        if (j.contains("omega")) sc.omega = io::region_from_json(j.at("omega"));
        if (j.contains("domain")) sc.domain = io::domain_from_json(j.at("domain"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    sc.validate();
    return sc;
}

}  // namespace stpp::sim
