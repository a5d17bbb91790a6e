#pragma once

#include <cstddef>
#include <cstdint>

namespace minerscope::simd {

/// Sparse dot product over two vectors stored as parallel arrays of
/// strictly increasing keys and their counts. Returns the sum of
/// count products over shared keys.
using DotKernel = double (*)(const std::uint64_t* keys_a, const double* counts_a, std::size_t n_a,
                             const std::uint64_t* keys_b, const double* counts_b, std::size_t n_b);

double dot_scalar(const std::uint64_t* keys_a, const double* counts_a, std::size_t n_a,
                  const std::uint64_t* keys_b, const double* counts_b, std::size_t n_b);

#if defined(__x86_64__) || defined(_M_X64)
/// AVX2 block merge: compares 4x4 key blocks per iteration. Only call on
/// hardware with AVX2; active_dot_kernel() handles that.
double dot_avx2(const std::uint64_t* keys_a, const double* counts_a, std::size_t n_a,
                const std::uint64_t* keys_b, const double* counts_b, std::size_t n_b);
#endif

/// Best kernel the running CPU supports, chosen once.
DotKernel active_dot_kernel();
const char* active_dot_kernel_name();

}  // namespace minerscope::simd
