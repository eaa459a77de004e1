// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <bit>

#include "geocloak/simd/kernels.hpp"

namespace geocloak::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double squared_l2(const double* a, const double* b, std::size_t dim) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < dim; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void squared_l2_batch(const double* query, const double* rows, std::size_t n_rows,
                      std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = squared_l2(query, rows + r * dim, dim);
}

double dot(const double* a, const double* b, std::size_t dim) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < dim; ++i) sum += a[i] * b[i];
  return sum;
}

void dot_batch(const double* query, const double* rows, std::size_t n_rows, std::size_t dim,
               double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot(query, rows + r * dim, dim);
}

// Per-byte popcount through a nibble lookup, summed per 64-bit lane by SAD.
inline __m256i popcount_epi64(__m256i x) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,  //
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(x, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(x, 4), low_mask);
  const __m256i counts =
      _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

std::size_t hamming_within(std::uint64_t query, const std::uint64_t* sigs, std::size_t n,
                           std::uint32_t max_distance, std::uint32_t* out_idx,
                           std::uint8_t* out_dist) {
  const __m256i q = _mm256_set1_epi64x(static_cast<long long>(query));
  const __m256i limit = _mm256_set1_epi64x(static_cast<long long>(max_distance));
  alignas(32) std::uint64_t lanes[4];
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i x =
        _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(sigs + i)), q);
    const __m256i d = popcount_epi64(x);
    const int over = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(d, limit)));
    if (over == 0xf) continue;
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), d);
    for (int lane = 0; lane < 4; ++lane) {
      if ((over >> lane) & 1) continue;
      out_idx[count] = static_cast<std::uint32_t>(i + lane);
      out_dist[count] = static_cast<std::uint8_t>(lanes[lane]);
      ++count;
    }
  }
  for (; i < n; ++i) {
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

const KernelTable& avx2_kernels_unchecked() {
  static const KernelTable table{"avx2", squared_l2, squared_l2_batch, dot_batch, hamming_within};
  return table;
}

}  // namespace geocloak::simd
