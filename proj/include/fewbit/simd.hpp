#pragma once

// Data-parallel inner loops, each with a scalar reference and an AVX2 variant.
// The variants are required to agree bitwise with the scalar reference; the
// dispatching entry points pick one at runtime.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace fewbit::simd {

enum class Level { kScalar, kAvx2 };

std::string_view to_string(Level level);

// Whether the AVX2 variants were compiled in and the CPU can run them.
bool avx2_available();

// Best supported level, unless FEWBIT_SIMD=scalar|avx2 or set_level() says otherwise.
Level active_level();

// Throws std::runtime_error if the level is not available.
void set_level(Level level);
void reset_level();

// Prefix tables of a quadrature grid, viewed without ownership.
struct PrefixView {
  std::span<const double> f2;
  std::span<const double> w;
  std::span<const double> fw;
};

struct RowMin {
  double value;
  std::size_t index;  // j_end when every candidate is +inf
};

// min over j in [j_begin, j_end) of prev[j] + cost(j, i), smallest j on ties.
using RowMinFn = RowMin (*)(std::span<const double> prev, const PrefixView& p, std::size_t i,
                            std::size_t j_begin, std::size_t j_end);

// out[e] = number of entries of `padded` that are <= key(x[e]), where key is |x|
// when `fold` and x otherwise. `padded` is sorted, has 2^depth - 1 entries and
// is padded with +inf. Inputs must not be NaN.
using BinSearchFn = void (*)(std::span<const double> padded, unsigned depth, bool fold,
                             std::span<const double> x, std::span<std::uint8_t> out);

// out[e] = upstream[e] * levels[idx[e]].
using GatherScaleFn = void (*)(std::span<const double> upstream,
                               std::span<const std::uint8_t> idx,
                               std::span<const double> levels, std::span<double> out);

// 1-bit packing of 0/1 values, little-endian bit order, payload pre-zeroed.
using PackBits1Fn = void (*)(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload);

namespace scalar {
RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end);
void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out);
void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out);
void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload);
}  // namespace scalar

// Only callable when avx2_available(); otherwise these throw.
namespace avx2 {
RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end);
void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out);
void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out);
void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload);
}  // namespace avx2

// Dispatching entry points.
RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end);
void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out);
void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out);
void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload);

}  // namespace fewbit::simd
