#include "fewbit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fewbit/activations.hpp"
#include "fewbit/simd.hpp"

namespace fewbit {
namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("bit width must be in [1, 8]");
}

void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (std::isnan(v)) throw std::invalid_argument("NaN input");
  }
}

}  // namespace

PackedIndexBuffer::PackedIndexBuffer(int bits, std::size_t num_elements)
    : bits_(bits), size_(num_elements), payload_(payload_bytes(num_elements, bits), 0) {
  check_bits(bits);
}

PackedIndexBuffer pack_indices(std::span<const std::uint8_t> indices, int bits) {
  check_bits(bits);
  const unsigned limit = 1u << bits;
  for (std::uint8_t v : indices) {
    if (v >= limit) {
      throw std::invalid_argument("index " + std::to_string(v) + " does not fit in " +
                                  std::to_string(bits) + " bits");
    }
  }
  PackedIndexBuffer buf(bits, indices.size());
  auto payload = buf.mutable_payload();
  if (bits == 1) {
    simd::pack_bits1(indices, payload);
  } else if (bits == 8) {
    std::copy(indices.begin(), indices.end(), payload.begin());
  } else {
    for (std::size_t e = 0; e < indices.size(); ++e) {
      const std::size_t pos = e * static_cast<std::size_t>(bits);
      const unsigned shift = pos & 7;
      const unsigned v = indices[e];
      payload[pos >> 3] |= static_cast<std::uint8_t>(v << shift);
      if (shift + static_cast<unsigned>(bits) > 8) {
        payload[(pos >> 3) + 1] |= static_cast<std::uint8_t>(v >> (8 - shift));
      }
    }
  }
  return buf;
}

std::vector<std::uint8_t> unpack_indices(const PackedIndexBuffer& buffer) {
  const int bits = buffer.bits_per_element();
  const auto payload = buffer.payload();
  const unsigned mask = (1u << bits) - 1;
  std::vector<std::uint8_t> out(buffer.num_elements());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const std::size_t pos = e * static_cast<std::size_t>(bits);
    const unsigned shift = pos & 7;
    unsigned v = payload[pos >> 3] >> shift;
    if (shift + static_cast<unsigned>(bits) > 8) v |= unsigned{payload[(pos >> 3) + 1]} << (8 - shift);
    out[e] = static_cast<std::uint8_t>(v & mask);
  }
  return out;
}

BinLookup::BinLookup(const QuantizationTable& table) : fold_(table.exploit_symmetry) {
  const std::size_t k = table.num_levels();
  while ((std::size_t{1} << depth_) < k) ++depth_;
  padded_.assign((std::size_t{1} << depth_) - 1, std::numeric_limits<double>::infinity());
  std::copy(table.boundaries.begin(), table.boundaries.end(), padded_.begin());
}

void BinLookup::indices(std::span<const double> x, std::span<std::uint8_t> out) const {
  if (out.size() != x.size()) throw std::invalid_argument("index output size mismatch");
  check_finite(x);
  simd::bin_search(padded_, depth_, fold_, x, out);
}

QuantizedForward quantized_forward(std::span<const double> x, const QuantizationTable& table) {
  const auto& act = get_activation(table.activation);
  std::vector<std::uint8_t> idx(x.size());
  BinLookup(table).indices(x, idx);
  QuantizedForward r;
  r.out.resize(x.size());
  for (std::size_t e = 0; e < x.size(); ++e) r.out[e] = act.f(x[e]);
  r.saved = pack_indices(idx, table.bits);
  return r;
}

std::vector<double> quantized_backward(std::span<const double> upstream,
                                       const PackedIndexBuffer& saved,
                                       const QuantizationTable& table) {
  if (upstream.size() != saved.num_elements()) {
    throw std::invalid_argument("upstream length does not match saved element count");
  }
  if (saved.bits_per_element() != table.bits) {
    throw std::invalid_argument("saved buffer bit width does not match the table");
  }
  const auto idx = unpack_indices(saved);
  // Indices are < 2^bits but a table may have fewer levels; pad the lookup.
  std::vector<double> levels(std::size_t{1} << table.bits, 0.0);
  std::copy(table.levels.begin(), table.levels.end(), levels.begin());
  for (std::uint8_t i : idx) {
    if (i >= table.num_levels()) throw std::invalid_argument("saved index outside the table");
  }
  std::vector<double> out(upstream.size());
  simd::gather_scale(upstream, idx, levels, out);
  return out;
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  // SplitMix64 finalizer applied to a seed-keyed counter.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t r = mix(seed ^ mix(counter));
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

ActnnChunkState actnn_quantize(std::span<const double> h, int bits, std::size_t group_size,
                               std::uint64_t seed) {
  check_bits(bits);
  if (group_size == 0) throw std::invalid_argument("group size must be >= 1");
  check_finite(h);

  ActnnChunkState st;
  st.group_size = group_size;
  st.bits = bits;
  const double steps = static_cast<double>((1u << bits) - 1);
  std::vector<std::uint8_t> q(h.size());
  for (std::size_t start = 0; start < h.size(); start += group_size) {
    const std::size_t end = std::min(h.size(), start + group_size);
    const auto [mn, mx] = std::minmax_element(h.begin() + start, h.begin() + end);
    st.mins.push_back(*mn);
    st.maxs.push_back(*mx);
    const double range = *mx - *mn;
    if (!(range > 0.0)) continue;  // constant chunk: all zeros
    for (std::size_t e = start; e < end; ++e) {
      const double u = std::clamp(steps * (h[e] - *mn) / range, 0.0, steps);
      const double lo = std::floor(u);
      const double up = counter_uniform(seed, e) < u - lo ? 1.0 : 0.0;
      q[e] = static_cast<std::uint8_t>(lo + up);
    }
  }
  st.packed = pack_indices(q, bits);
  return st;
}

std::vector<double> actnn_dequantize(const ActnnChunkState& st) {
  const auto q = unpack_indices(st.packed);
  const unsigned top = (1u << st.bits) - 1;
  const double steps = static_cast<double>(top);
  std::vector<double> out(q.size());
  for (std::size_t e = 0; e < q.size(); ++e) {
    const std::size_t c = e / st.group_size;
    const double mn = st.mins[c];
    const double range = st.maxs[c] - mn;
    if (range > 0.0 && q[e] == top) {
      out[e] = st.maxs[c];
    } else {
      out[e] = range > 0.0 ? std::min(mn + q[e] * (range / steps), st.maxs[c]) : mn;
    }
  }
  return out;
}

}  // namespace fewbit
