#pragma once

// Data-parallel inner loops of the retrieval core. Every kernel has a scalar
// reference implementation; wider variants are compiled separately and picked
// at runtime from the CPU feature flags. Variants agree with the scalar
// reference up to floating-point summation order (integer kernels agree
// exactly).

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace geocloak::simd {

struct KernelTable {
  std::string_view name;

  // sum_i (a[i] - b[i])^2
  double (*squared_l2)(const double* a, const double* b, std::size_t dim);

  // out[r] = squared_l2(query, rows + r * dim) for r in [0, n_rows)
  void (*squared_l2_batch)(const double* query, const double* rows, std::size_t n_rows,
                           std::size_t dim, double* out);

  // out[r] = dot(query, rows + r * dim); a dense matrix-vector product.
  void (*dot_batch)(const double* query, const double* rows, std::size_t n_rows,
                    std::size_t dim, double* out);

  // Writes the indices i with popcount(sigs[i] ^ query) <= max_distance to
  // out_idx (ascending) and their distances to out_dist. Returns the count.
  std::size_t (*hamming_within)(std::uint64_t query, const std::uint64_t* sigs, std::size_t n,
                                std::uint32_t max_distance, std::uint32_t* out_idx,
                                std::uint8_t* out_dist);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels();

// The table used by the library. Defaults to the widest supported variant;
// GEOCLOAK_SIMD=scalar in the environment forces the reference kernels.
const KernelTable& active_kernels();

}  // namespace geocloak::simd
