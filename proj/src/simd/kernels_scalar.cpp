#include <cmath>

#include "stpp/simd/kernels.hpp"

namespace stpp::simd::scalar {

Moments gaussian_moments(const SourceView& src, const Query& q) {
    Moments m;
    for (std::size_t j = 0; j < src.n; ++j) {
        const double dx = q.x - src.x[j];
        const double dy = q.y - src.y[j];
        const double w = std::exp(-q.beta * (q.t - src.t[j]) - (dx * dx + dy * dy) * q.spatial);
        m.s0 += w;
        m.sx += w * dx;
        m.sy += w * dy;
        m.sxx += w * dx * dx;
        m.syy += w * dy * dy;
    }
    return m;
}

Moments box_moments(const SourceView& src, const Query& q) {
    Moments m;
    for (std::size_t j = 0; j < src.n; ++j) {
        const double dx = q.x - src.x[j];
        const double dy = q.y - src.y[j];
        if (std::abs(dx) > q.spatial || std::abs(dy) > q.spatial) continue;
        const double w = std::exp(-q.beta * (q.t - src.t[j]));
        m.s0 += w;
        m.sx += w * dx;
        m.sy += w * dy;
        m.sxx += w * dx * dx;
        m.syy += w * dy * dy;
    }
    return m;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = (bias ? bias[i] : 0.0) + dot(w + i * cols, x, cols);
    }
}

}  // namespace stpp::simd::scalar
