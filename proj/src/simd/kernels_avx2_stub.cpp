// Fallback for targets built without AVX2: forwards to the scalar kernels.
#include "stpp/simd/kernels.hpp"

#include <cmath>

namespace stpp::simd::avx2 {

Moments gaussian_moments(const SourceView& src, const Query& q) { return scalar::gaussian_moments(src, q); }
Moments box_moments(const SourceView& src, const Query& q) { return scalar::box_moments(src, q); }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    scalar::matvec(w, bias, x, y, rows, cols);
}
void exp4(const double* in, double* out) {
    for (int i = 0; i < 4; ++i) out[i] = std::exp(in[i]);
}

}  // namespace stpp::simd::avx2
