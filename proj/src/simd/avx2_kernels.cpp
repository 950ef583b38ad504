#include <immintrin.h>

#include <limits>

#include "fewbit/simd.hpp"

namespace fewbit::simd::avx2 {

RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end) {
  const double inf = std::numeric_limits<double>::infinity();
  const __m256d f2_i = _mm256_set1_pd(p.f2[i]);
  const __m256d w_i = _mm256_set1_pd(p.w[i]);
  const __m256d fw_i = _mm256_set1_pd(p.fw[i]);
  const __m256d zero = _mm256_setzero_pd();

  // Each lane tracks its own running minimum with strict <, so within a lane
  // the first (smallest) j wins ties.
  __m256d best = _mm256_set1_pd(inf);
  __m256i best_j = _mm256_set1_epi64x(static_cast<long long>(j_end));
  __m256i jv = _mm256_setr_epi64x(static_cast<long long>(j_begin),
                                  static_cast<long long>(j_begin + 1),
                                  static_cast<long long>(j_begin + 2),
                                  static_cast<long long>(j_begin + 3));
  const __m256i four = _mm256_set1_epi64x(4);

  std::size_t j = j_begin;
  for (; j + 4 <= j_end; j += 4) {
    const __m256d dw = _mm256_sub_pd(w_i, _mm256_loadu_pd(&p.w[j]));
    const __m256d mass = _mm256_cmp_pd(dw, zero, _CMP_GT_OQ);
    const __m256d y = _mm256_div_pd(_mm256_sub_pd(fw_i, _mm256_loadu_pd(&p.fw[j])), dw);
    const __m256d t = _mm256_sub_pd(_mm256_sub_pd(f2_i, _mm256_loadu_pd(&p.f2[j])),
                                    _mm256_mul_pd(_mm256_mul_pd(y, y), dw));
    // t > 0 ? t : 0, then zero-mass lanes cost nothing.
    const __m256d cost = _mm256_and_pd(_mm256_max_pd(t, zero), mass);
    const __m256d c = _mm256_add_pd(_mm256_loadu_pd(&prev[j]), cost);
    const __m256d better = _mm256_cmp_pd(c, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, c, better);
    best_j = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(best_j), _mm256_castsi256_pd(jv), better));
    jv = _mm256_add_epi64(jv, four);
  }

  alignas(32) double vals[4];
  alignas(32) long long idxs[4];
  _mm256_store_pd(vals, best);
  _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), best_j);
  RowMin out{inf, j_end};
  for (int l = 0; l < 4; ++l) {
    const auto lj = static_cast<std::size_t>(idxs[l]);
    if (vals[l] < out.value || (vals[l] == out.value && lj < out.index && vals[l] != inf)) {
      out.value = vals[l];
      out.index = lj;
    }
  }
  // Tail: any remaining j is larger than every vector j, so strict < keeps ties correct.
  if (j < j_end) {
    const RowMin tail = scalar::segment_row_min(prev, p, i, j, j_end);
    if (tail.value < out.value) out = tail;
  }
  return out;
}

void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out) {
  const std::size_t n = x.size();
  std::size_t e = 0;
  if (depth > 0) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    const long long top = 1LL << (depth - 1);
    for (; e + 4 <= n; e += 4) {
      __m256d key = _mm256_loadu_pd(&x[e]);
      if (fold) key = _mm256_andnot_pd(sign, key);
      __m256i pos = _mm256_setzero_si256();
      for (long long half = top; half > 0; half >>= 1) {
        const __m256i probe_idx = _mm256_add_epi64(pos, _mm256_set1_epi64x(half - 1));
        const __m256d probe = _mm256_i64gather_pd(padded.data(), probe_idx, 8);
        const __m256i ge = _mm256_castpd_si256(_mm256_cmp_pd(key, probe, _CMP_GE_OQ));
        pos = _mm256_add_epi64(pos, _mm256_and_si256(ge, _mm256_set1_epi64x(half)));
      }
      alignas(32) long long lanes[4];
      _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), pos);
      for (int l = 0; l < 4; ++l) out[e + l] = static_cast<std::uint8_t>(lanes[l]);
    }
  }
  if (e < n) scalar::bin_search(padded, depth, fold, x.subspan(e), out.subspan(e));
}

void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out) {
  const std::size_t n = upstream.size();
  std::size_t e = 0;
  for (; e + 4 <= n; e += 4) {
    int packed;
    __builtin_memcpy(&packed, &idx[e], 4);
    const __m128i lanes = _mm_cvtepu8_epi32(_mm_cvtsi32_si128(packed));
    const __m256d lv = _mm256_i32gather_pd(levels.data(), lanes, 8);
    _mm256_storeu_pd(&out[e], _mm256_mul_pd(_mm256_loadu_pd(&upstream[e]), lv));
  }
  if (e < n) {
    scalar::gather_scale(upstream.subspan(e), idx.subspan(e), levels, out.subspan(e));
  }
}

void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload) {
  const std::size_t n = idx.size();
  const __m256i zero = _mm256_setzero_si256();
  std::size_t e = 0;
  for (; e + 32 <= n; e += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(&idx[e]));
    const __m256i set = _mm256_cmpgt_epi8(_mm256_and_si256(v, _mm256_set1_epi8(1)), zero);
    const auto bits = static_cast<std::uint32_t>(_mm256_movemask_epi8(set));
    // e is a multiple of 32, so the 32 bits land on 4 whole bytes.
    for (int k = 0; k < 4; ++k) payload[(e >> 3) + k] = static_cast<std::uint8_t>(bits >> (8 * k));
  }
  for (; e < n; ++e) payload[e >> 3] |= static_cast<std::uint8_t>((idx[e] & 1u) << (e & 7));
}

}  // namespace fewbit::simd::avx2
