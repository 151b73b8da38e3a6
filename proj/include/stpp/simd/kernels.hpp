#pragma once

#include <cstddef>
#include <string_view>

namespace stpp::simd {

// Weighted moments of w_j = exp(-beta*(t - t_j) - |s - s_j|^2 / (2 sigma^2)) with
// d_j = s - s_j:  s0 = Σw, sx = Σw dx, sy = Σw dy, sxx = Σw dx², syy = Σw dy².
struct Moments {
    double s0{0.0};
    double sx{0.0};
    double sy{0.0};
    double sxx{0.0};
    double syy{0.0};
};

// Source events in structure-of-arrays layout.
struct SourceView {
    const double* t{nullptr};
    const double* x{nullptr};
    const double* y{nullptr};
    std::size_t n{0};
};

struct Query {
    double t{0.0};
    double x{0.0};
    double y{0.0};
    double beta{1.0};
    // Gaussian: 1/(2 sigma^2). Box: half-width of the l-infinity support.
    double spatial{1.0};
};

enum class Isa { Scalar, Avx2 };

// Gaussian spatial factor.
Moments gaussian_moments(const SourceView& src, const Query& q);
// Box spatial factor: indicator |dx| <= h and |dy| <= h, h = q.spatial.
Moments box_moments(const SourceView& src, const Query& q);

double dot(const double* a, const double* b, std::size_t n);
// y[i] = bias[i] + Σ_j w[i*cols + j] x[j]; bias may be null.
void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols);

// Active instruction set. Chosen once from CPU features unless STPP_SIMD=scalar.
Isa active_isa();
std::string_view isa_name(Isa isa);
// Override for tests; returns the previous value. Requesting Avx2 on a CPU
// without it leaves the scalar path active.
Isa set_isa(Isa isa);
bool cpu_has_avx2();

namespace scalar {
Moments gaussian_moments(const SourceView& src, const Query& q);
Moments box_moments(const SourceView& src, const Query& q);
double dot(const double* a, const double* b, std::size_t n);
void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols);
}  // namespace scalar

namespace avx2 {
Moments gaussian_moments(const SourceView& src, const Query& q);
Moments box_moments(const SourceView& src, const Query& q);
double dot(const double* a, const double* b, std::size_t n);
void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols);
// Vectorized exp on 4 lanes, exposed for accuracy tests.
void exp4(const double* in, double* out);
}  // namespace avx2

}  // namespace stpp::simd
