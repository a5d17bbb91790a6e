// Compiled with -mavx2; only reached after a runtime cpuid check.

#include <immintrin.h>

#include "minerscope/simd_dot.hpp"

namespace minerscope::simd {

namespace {

inline double accumulate_matches(unsigned mask, int rotation, const double* counts_a,
                                 const double* counts_b) {
    double sum = 0;
    while (mask) {
        int lane = __builtin_ctz(mask);
        mask &= mask - 1;
        sum += counts_a[lane] * counts_b[(lane + rotation) & 3];
    }
    return sum;
}

}  // namespace

double dot_avx2(const std::uint64_t* keys_a, const double* counts_a, std::size_t n_a,
                const std::uint64_t* keys_b, const double* counts_b, std::size_t n_b) {
    double sum = 0;
    std::size_t i = 0, j = 0;

    // Compare 4x4 key blocks: one cmpeq per rotation of the b block covers
    // all 16 lane pairs. Keys are strictly increasing, so each lane matches
    // at most once and block-max advancing never skips a shared key.
    while (i + 4 <= n_a && j + 4 <= n_b) {
        __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(keys_a + i));
        __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(keys_b + j));

        auto mask_of = [&](__m256i rotated) {
            return static_cast<unsigned>(
                _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpeq_epi64(va, rotated))));
        };
        if (unsigned m = mask_of(vb)) sum += accumulate_matches(m, 0, counts_a + i, counts_b + j);
        if (unsigned m = mask_of(_mm256_permute4x64_epi64(vb, 0x39)))
            sum += accumulate_matches(m, 1, counts_a + i, counts_b + j);
        if (unsigned m = mask_of(_mm256_permute4x64_epi64(vb, 0x4e)))
            sum += accumulate_matches(m, 2, counts_a + i, counts_b + j);
        if (unsigned m = mask_of(_mm256_permute4x64_epi64(vb, 0x93)))
            sum += accumulate_matches(m, 3, counts_a + i, counts_b + j);

        std::uint64_t max_a = keys_a[i + 3];
        std::uint64_t max_b = keys_b[j + 3];
        if (max_a <= max_b) i += 4;
        if (max_b <= max_a) j += 4;
    }

    sum += dot_scalar(keys_a + i, counts_a + i, n_a - i, keys_b + j, counts_b + j, n_b - j);
    return sum;
}

}  // namespace minerscope::simd
