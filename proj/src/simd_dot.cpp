#include "minerscope/simd_dot.hpp"

namespace minerscope::simd {

double dot_scalar(const std::uint64_t* keys_a, const double* counts_a, std::size_t n_a,
                  const std::uint64_t* keys_b, const double* counts_b, std::size_t n_b) {
    double sum = 0;
    std::size_t i = 0, j = 0;
    while (i < n_a && j < n_b) {
        if (keys_a[i] < keys_b[j]) {
            ++i;
        } else if (keys_b[j] < keys_a[i]) {
            ++j;
        } else {
            sum += counts_a[i] * counts_b[j];
            ++i;
            ++j;
        }
    }
    return sum;
}

DotKernel active_dot_kernel() {
#if defined(MINERSCOPE_HAVE_AVX2_TU)
    static const DotKernel kernel = __builtin_cpu_supports("avx2") ? dot_avx2 : dot_scalar;
#else
    static const DotKernel kernel = dot_scalar;
#endif
    return kernel;
}

const char* active_dot_kernel_name() {
#if defined(MINERSCOPE_HAVE_AVX2_TU)
    return active_dot_kernel() == dot_avx2 ? "avx2" : "scalar";
#else
    return "scalar";
#endif
}

}  // namespace minerscope::simd
