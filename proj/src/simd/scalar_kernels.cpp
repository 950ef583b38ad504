#include <cmath>
#include <limits>

#include "fewbit/quadrature.hpp"
#include "fewbit/simd.hpp"

namespace fewbit::simd::scalar {

RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end) {
  RowMin best{std::numeric_limits<double>::infinity(), j_end};
  const double f2_i = p.f2[i];
  const double w_i = p.w[i];
  const double fw_i = p.fw[i];
  for (std::size_t j = j_begin; j < j_end; ++j) {
    const double c = prev[j] + segment_from_prefix(f2_i, p.f2[j], w_i, p.w[j], fw_i, p.fw[j]).cost;
    if (c < best.value) {
      best.value = c;
      best.index = j;
    }
  }
  return best;
}

void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out) {
  for (std::size_t e = 0; e < x.size(); ++e) {
    const double key = fold ? std::fabs(x[e]) : x[e];
    std::size_t pos = 0;
    for (std::size_t half = depth == 0 ? 0 : std::size_t{1} << (depth - 1); half > 0; half >>= 1) {
      if (key >= padded[pos + half - 1]) pos += half;
    }
    out[e] = static_cast<std::uint8_t>(pos);
  }
}

void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out) {
  for (std::size_t e = 0; e < upstream.size(); ++e) out[e] = upstream[e] * levels[idx[e]];
}

void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload) {
  for (std::size_t e = 0; e < idx.size(); ++e) {
    payload[e >> 3] |= static_cast<std::uint8_t>((idx[e] & 1u) << (e & 7));
  }
}

}  // namespace fewbit::simd::scalar
