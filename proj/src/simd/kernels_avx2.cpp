// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "stpp/simd/kernels.hpp"

namespace stpp::simd::avx2 {

namespace {

// exp(x) on four lanes: x = n ln2 + r with |r| <= ln2/2, degree-13 Taylor for e^r,
// then scale by 2^n through the exponent field. Lanes below -708 flush to zero.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    static constexpr double kInvFact[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
        1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
        1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
        1.0,                1.0};
    __m256d p = _mm256_set1_pd(kInvFact[0]);
    for (int k = 1; k < 14; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[k]));

    const __m256d magic = _mm256_set1_pd(4503599627370496.0 + 1023.0);  // 2^52 + bias
    const __m256i bits = _mm256_castpd_si256(_mm256_add_pd(n, magic));
    const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
    const __m256d result = _mm256_mul_pd(p, scale);
    return _mm256_andnot_pd(underflow, result);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

struct Acc {
    __m256d s0 = _mm256_setzero_pd();
    __m256d sx = _mm256_setzero_pd();
    __m256d sy = _mm256_setzero_pd();
    __m256d sxx = _mm256_setzero_pd();
    __m256d syy = _mm256_setzero_pd();

    void add(__m256d w, __m256d dx, __m256d dy) {
        s0 = _mm256_add_pd(s0, w);
        const __m256d wx = _mm256_mul_pd(w, dx);
        const __m256d wy = _mm256_mul_pd(w, dy);
        sx = _mm256_add_pd(sx, wx);
        sy = _mm256_add_pd(sy, wy);
        sxx = _mm256_fmadd_pd(wx, dx, sxx);
        syy = _mm256_fmadd_pd(wy, dy, syy);
    }

    [[nodiscard]] Moments reduce() const { return {hsum(s0), hsum(sx), hsum(sy), hsum(sxx), hsum(syy)}; }
};

void add_tail(Moments& m, double w, double dx, double dy) {
    m.s0 += w;
    m.sx += w * dx;
    m.sy += w * dy;
    m.sxx += w * dx * dx;
    m.syy += w * dy * dy;
}

}  // namespace

void exp4(const double* in, double* out) { _mm256_storeu_pd(out, exp_pd(_mm256_loadu_pd(in))); }

Moments gaussian_moments(const SourceView& src, const Query& q) {
    const __m256d qt = _mm256_set1_pd(q.t);
    const __m256d qx = _mm256_set1_pd(q.x);
    const __m256d qy = _mm256_set1_pd(q.y);
    const __m256d nbeta = _mm256_set1_pd(-q.beta);
    const __m256d nspatial = _mm256_set1_pd(-q.spatial);
    Acc acc;
    std::size_t j = 0;
    for (; j + 4 <= src.n; j += 4) {
        const __m256d dt = _mm256_sub_pd(qt, _mm256_loadu_pd(src.t + j));
        const __m256d dx = _mm256_sub_pd(qx, _mm256_loadu_pd(src.x + j));
        const __m256d dy = _mm256_sub_pd(qy, _mm256_loadu_pd(src.y + j));
        const __m256d r2 = _mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy));
        const __m256d arg = _mm256_fmadd_pd(nspatial, r2, _mm256_mul_pd(nbeta, dt));
        acc.add(exp_pd(arg), dx, dy);
    }
    Moments m = acc.reduce();
    for (; j < src.n; ++j) {
        const double dx = q.x - src.x[j];
        const double dy = q.y - src.y[j];
        add_tail(m, std::exp(-q.beta * (q.t - src.t[j]) - (dx * dx + dy * dy) * q.spatial), dx, dy);
    }
    return m;
}

Moments box_moments(const SourceView& src, const Query& q) {
    const __m256d qt = _mm256_set1_pd(q.t);
    const __m256d qx = _mm256_set1_pd(q.x);
    const __m256d qy = _mm256_set1_pd(q.y);
    const __m256d nbeta = _mm256_set1_pd(-q.beta);
    const __m256d h = _mm256_set1_pd(q.spatial);
    const __m256d sign = _mm256_set1_pd(-0.0);
    Acc acc;
    std::size_t j = 0;
    for (; j + 4 <= src.n; j += 4) {
        const __m256d dt = _mm256_sub_pd(qt, _mm256_loadu_pd(src.t + j));
        const __m256d dx = _mm256_sub_pd(qx, _mm256_loadu_pd(src.x + j));
        const __m256d dy = _mm256_sub_pd(qy, _mm256_loadu_pd(src.y + j));
        const __m256d inside =
            _mm256_and_pd(_mm256_cmp_pd(_mm256_andnot_pd(sign, dx), h, _CMP_LE_OQ),
                          _mm256_cmp_pd(_mm256_andnot_pd(sign, dy), h, _CMP_LE_OQ));
        const __m256d w = _mm256_and_pd(inside, exp_pd(_mm256_mul_pd(nbeta, dt)));
        acc.add(w, dx, dy);
    }
    Moments m = acc.reduce();
    for (; j < src.n; ++j) {
        const double dx = q.x - src.x[j];
        const double dy = q.y - src.y[j];
        if (std::abs(dx) > q.spatial || std::abs(dy) > q.spatial) continue;
        add_tail(m, std::exp(-q.beta * (q.t - src.t[j])), dx, dy);
    }
    return m;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = (bias ? bias[i] : 0.0) + dot(w + i * cols, x, cols);
    }
}

}  // namespace stpp::simd::avx2
