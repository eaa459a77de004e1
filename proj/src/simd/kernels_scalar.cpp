#include <bit>

#include "geocloak/simd/kernels.hpp"

namespace geocloak::simd {
namespace {

double squared_l2(const double* a, const double* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void squared_l2_batch(const double* query, const double* rows, std::size_t n_rows,
                      std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = squared_l2(query, rows + r * dim, dim);
}

void dot_batch(const double* query, const double* rows, std::size_t n_rows, std::size_t dim,
               double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* row = rows + r * dim;
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) sum += query[i] * row[i];
    out[r] = sum;
  }
}

std::size_t hamming_within(std::uint64_t query, const std::uint64_t* sigs, std::size_t n,
                           std::uint32_t max_distance, std::uint32_t* out_idx,
                           std::uint8_t* out_dist) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::uint32_t>(std::popcount(sigs[i] ^ query));
    if (d <= max_distance) {
      out_idx[count] = static_cast<std::uint32_t>(i);
      out_dist[count] = static_cast<std::uint8_t>(d);
      ++count;
    }
  }
  return count;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", squared_l2, squared_l2_batch, dot_batch,
                                 hamming_within};
  return table;
}

}  // namespace geocloak::simd
