#include "stpp/score/weight.hpp"

#include <algorithm>

#include "stpp/error.hpp"

namespace stpp::score {

std::string weight_mode_name(WeightMode m) {
    switch (m) {
        case WeightMode::CoordinateBoundaryDistance: return "coordinate-boundary-distance";
        case WeightMode::TemporalOnly: return "temporal-only";
        case WeightMode::ScalarLinf: return "scalar-linf";
    }
    return "coordinate-boundary-distance";
}

WeightMode weight_mode_from_name(const std::string& name) {
    if (name == "coordinate-boundary-distance") return WeightMode::CoordinateBoundaryDistance;
    if (name == "temporal-only") return WeightMode::TemporalOnly;
    if (name == "scalar-linf") return WeightMode::ScalarLinf;
    throw ConfigError("unknown weight mode '" + name + "'");
}

void WeightConfig::validate() const {
    if (cap && !(*cap > 0.0)) throw ConfigError("weight cap must be positive");
}

namespace {

struct Distances {
    double d[3];
    double slope[3];  // derivative of each distance in its own coordinate
};

Distances distances(const core::TransformedEvent& xt, const core::Domain& domain) {
    const auto& b = domain.s_bounds;
    Distances out{};
    out.d[0] = xt.dt;
    out.slope[0] = 1.0;
    const double l1 = xt.s.x - b.x0, u1 = b.x1 - xt.s.x;
    const double l2 = xt.s.y - b.y0, u2 = b.y1 - xt.s.y;
    out.d[1] = std::min(l1, u1);
    out.slope[1] = l1 <= u1 ? 1.0 : -1.0;
    out.d[2] = std::min(l2, u2);
    out.slope[2] = l2 <= u2 ? 1.0 : -1.0;
    return out;
}

}  // namespace

Vec3 weight(const core::TransformedEvent& xt, const core::Domain& domain, const WeightConfig& cfg) {
    const Distances dist = distances(xt, domain);
    Vec3 w{};
    switch (cfg.mode) {
        case WeightMode::CoordinateBoundaryDistance:
            w = {dist.d[0], dist.d[1], dist.d[2]};
            break;
        case WeightMode::TemporalOnly:
            w = {dist.d[0], 0.0, 0.0};
            break;
        case WeightMode::ScalarLinf: {
            const double m = std::min({dist.d[0], dist.d[1], dist.d[2]});
            w = {m, m, m};
            break;
        }
    }
    for (auto& v : w) {
        v = std::max(v, 0.0);
        if (cfg.cap) v = std::min(v, *cfg.cap);
    }
    return w;
}

Vec3 weight_diag_gradient(const core::TransformedEvent& xt, const core::Domain& domain,
                          const WeightConfig& cfg) {
    const Distances dist = distances(xt, domain);
    Vec3 g{};
    switch (cfg.mode) {
        case WeightMode::CoordinateBoundaryDistance:
            g = {dist.slope[0], dist.slope[1], dist.slope[2]};
            break;
        case WeightMode::TemporalOnly:
            g = {1.0, 0.0, 0.0};
            break;
        case WeightMode::ScalarLinf: {
            const int arg = static_cast<int>(std::min_element(dist.d, dist.d + 3) - dist.d);
            g[arg] = dist.slope[arg];
            break;
        }
    }
    const Vec3 w = weight(xt, domain, cfg);
    for (int k = 0; k < 3; ++k) {
        if (cfg.cap && w[k] >= *cfg.cap) g[k] = 0.0;
    }
    return g;
}

}  // namespace stpp::score
