#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fewbit/qtable.hpp"

namespace fewbit {

// b-bit indices packed back to back. Element i occupies stream bits
// [i*b, (i+1)*b), where stream bit j is bit (j % 8) of byte j / 8. Pad bits
// in the last byte are zero.
class PackedIndexBuffer {
 public:
  PackedIndexBuffer() = default;
  PackedIndexBuffer(int bits, std::size_t num_elements);

  int bits_per_element() const { return bits_; }
  std::size_t num_elements() const { return size_; }
  std::span<const std::uint8_t> payload() const { return payload_; }
  std::span<std::uint8_t> mutable_payload() { return payload_; }
  std::size_t bytes() const { return payload_.size(); }

  // Bytes needed for n elements of b bits.
  static std::size_t payload_bytes(std::size_t n, int bits) {
    return (n * static_cast<std::size_t>(bits) + 7) / 8;
  }

  friend bool operator==(const PackedIndexBuffer&, const PackedIndexBuffer&) = default;

 private:
  int bits_ = 1;
  std::size_t size_ = 0;
  std::vector<std::uint8_t> payload_;
};

// Throws std::invalid_argument for bits outside [1, 8] or an index >= 2^bits.
PackedIndexBuffer pack_indices(std::span<const std::uint8_t> indices, int bits);
std::vector<std::uint8_t> unpack_indices(const PackedIndexBuffer& buffer);

// Bulk lookup_index over a table, via the dispatched branchless search.
class BinLookup {
 public:
  explicit BinLookup(const QuantizationTable& table);
  // Throws std::invalid_argument on NaN input.
  void indices(std::span<const double> x, std::span<std::uint8_t> out) const;
  int index_bits() const { return static_cast<int>(depth_ == 0 ? 1 : depth_); }

 private:
  std::vector<double> padded_;
  unsigned depth_ = 0;
  bool fold_ = false;
};

struct QuantizedForward {
  std::vector<double> out;   // f(x), exact
  PackedIndexBuffer saved;   // segment index per element, table.bits wide
};

QuantizedForward quantized_forward(std::span<const double> x, const QuantizationTable& table);

// upstream[i] * levels[index_i]. Throws std::invalid_argument on a length or bit-width mismatch.
std::vector<double> quantized_backward(std::span<const double> upstream,
                                       const PackedIndexBuffer& saved,
                                       const QuantizationTable& table);

// Per-chunk min/max normalization with unbiased stochastic rounding. The
// chunk range is split into 2^b - 1 steps so every stored value fits in b bits.
struct ActnnChunkState {
  std::size_t group_size = 256;
  int bits = 1;
  std::vector<double> mins;
  std::vector<double> maxs;
  PackedIndexBuffer packed;

  std::size_t num_elements() const { return packed.num_elements(); }
};

// Uniform [0, 1) draw that depends only on (seed, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

ActnnChunkState actnn_quantize(std::span<const double> h, int bits, std::size_t group_size,
                               std::uint64_t seed);
std::vector<double> actnn_dequantize(const ActnnChunkState& state);

}  // namespace fewbit
