#include <atomic>
#include <cstdlib>
#include <cstring>

#include "stpp/simd/kernels.hpp"

namespace stpp::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool has = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return has;
#else
    return false;
#endif
}

namespace {

Isa detect() {
    if (const char* env = std::getenv("STPP_SIMD"); env && std::strcmp(env, "scalar") == 0)
        return Isa::Scalar;
    return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa set_isa(Isa isa) {
    if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
    return current().exchange(isa);
}

Moments gaussian_moments(const SourceView& src, const Query& q) {
    return active_isa() == Isa::Avx2 ? avx2::gaussian_moments(src, q)
                                     : scalar::gaussian_moments(src, q);
}

Moments box_moments(const SourceView& src, const Query& q) {
    return active_isa() == Isa::Avx2 ? avx2::box_moments(src, q) : scalar::box_moments(src, q);
}

double dot(const double* a, const double* b, std::size_t n) {
    return active_isa() == Isa::Avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

void matvec(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    if (active_isa() == Isa::Avx2)
        avx2::matvec(w, bias, x, y, rows, cols);
    else
        scalar::matvec(w, bias, x, y, rows, cols);
}

}  // namespace stpp::simd
