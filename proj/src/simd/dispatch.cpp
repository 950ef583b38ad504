#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fewbit/simd.hpp"

namespace fewbit::simd {

std::string_view to_string(Level level) { return level == Level::kAvx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(FEWBIT_HAVE_AVX2)
  static const bool ok = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return ok;
#else
  return false;
#endif
}

namespace {

Level initial_level() {
  if (const char* env = std::getenv("FEWBIT_SIMD")) {
    const std::string v = env;
    if (v == "scalar") return Level::kScalar;
    if (v == "avx2" && avx2_available()) return Level::kAvx2;
  }
  return avx2_available() ? Level::kAvx2 : Level::kScalar;
}

std::atomic<Level>& level_slot() {
  static std::atomic<Level> slot{initial_level()};
  return slot;
}

bool use_avx2() { return level_slot().load(std::memory_order_relaxed) == Level::kAvx2; }

}  // namespace

Level active_level() { return level_slot().load(); }

void set_level(Level level) {
  if (level == Level::kAvx2 && !avx2_available()) {
    throw std::runtime_error("AVX2 kernels are not available on this build or CPU");
  }
  level_slot().store(level);
}

void reset_level() { level_slot().store(initial_level()); }

#if !defined(FEWBIT_HAVE_AVX2)
namespace avx2 {
namespace {
[[noreturn]] void unavailable() { throw std::runtime_error("AVX2 kernels not compiled in"); }
}  // namespace
RowMin segment_row_min(std::span<const double>, const PrefixView&, std::size_t, std::size_t,
                       std::size_t) {
  unavailable();
}
void bin_search(std::span<const double>, unsigned, bool, std::span<const double>,
                std::span<std::uint8_t>) {
  unavailable();
}
void gather_scale(std::span<const double>, std::span<const std::uint8_t>,
                  std::span<const double>, std::span<double>) {
  unavailable();
}
void pack_bits1(std::span<const std::uint8_t>, std::span<std::uint8_t>) { unavailable(); }
}  // namespace avx2
#endif

RowMin segment_row_min(std::span<const double> prev, const PrefixView& p, std::size_t i,
                       std::size_t j_begin, std::size_t j_end) {
  return use_avx2() ? avx2::segment_row_min(prev, p, i, j_begin, j_end)
                    : scalar::segment_row_min(prev, p, i, j_begin, j_end);
}

void bin_search(std::span<const double> padded, unsigned depth, bool fold,
                std::span<const double> x, std::span<std::uint8_t> out) {
  use_avx2() ? avx2::bin_search(padded, depth, fold, x, out)
             : scalar::bin_search(padded, depth, fold, x, out);
}

void gather_scale(std::span<const double> upstream, std::span<const std::uint8_t> idx,
                  std::span<const double> levels, std::span<double> out) {
  use_avx2() ? avx2::gather_scale(upstream, idx, levels, out)
             : scalar::gather_scale(upstream, idx, levels, out);
}

void pack_bits1(std::span<const std::uint8_t> idx, std::span<std::uint8_t> payload) {
  use_avx2() ? avx2::pack_bits1(idx, payload) : scalar::pack_bits1(idx, payload);
}

}  // namespace fewbit::simd
