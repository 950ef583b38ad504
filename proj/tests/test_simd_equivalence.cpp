#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "fewbit/dp_solver.hpp"
#include "fewbit/kernels.hpp"
#include "fewbit/simd.hpp"

using namespace fewbit;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

struct LevelGuard {
  ~LevelGuard() { simd::reset_level(); }
};

}  // namespace

TEST_CASE("dispatch") {
  LevelGuard g;
  simd::set_level(simd::Level::kScalar);
  CHECK(simd::active_level() == simd::Level::kScalar);
  if (simd::avx2_available()) {
    simd::set_level(simd::Level::kAvx2);
    CHECK(simd::active_level() == simd::Level::kAvx2);
  } else {
    CHECK_THROWS(simd::set_level(simd::Level::kAvx2));
  }
}

TEST_CASE("segment_row_min: avx2 equals scalar bitwise") {
  if (!simd::avx2_available()) return;
  for (const auto& name : activation_names()) {
    const auto grid = build_grid(get_activation(name), WeightSpec::uniform(-10, 10), 333);
    const simd::PrefixView view{grid.f2, grid.w, grid.fw};
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::vector<double> prev(grid.n() + 1);
    for (auto& v : prev) v = u(rng);
    for (std::size_t k = 0; k < prev.size(); k += 7) prev[k] = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= grid.n(); ++i) {
      for (std::size_t jb : {std::size_t{0}, i / 3, i - 1}) {
        const auto a = simd::scalar::segment_row_min(prev, view, i, jb, i);
        const auto b = simd::avx2::segment_row_min(prev, view, i, jb, i);
        CHECK(a.index == b.index);
        CHECK(same_bits(a.value, b.value));
      }
    }
  }
}

TEST_CASE("segment_row_min: ties, all-infinite rows and zero-mass segments") {
  if (!simd::avx2_available()) return;
  // ReLU: every segment inside x < 0 is zero cost.
  const auto grid = build_grid(get_activation("relu"), WeightSpec::uniform(-10, 10), 40);
  const simd::PrefixView view{grid.f2, grid.w, grid.fw};
  std::vector<double> zeros(41, 0.0);
  for (std::size_t i = 1; i <= 20; ++i) {
    const auto a = simd::scalar::segment_row_min(zeros, view, i, 0, i);
    const auto b = simd::avx2::segment_row_min(zeros, view, i, 0, i);
    CHECK(a.index == 0);
    CHECK(b.index == 0);
    CHECK(same_bits(a.value, b.value));
  }
  std::vector<double> inf(41, std::numeric_limits<double>::infinity());
  const auto a = simd::scalar::segment_row_min(inf, view, 30, 3, 30);
  const auto b = simd::avx2::segment_row_min(inf, view, 30, 3, 30);
  CHECK(a.index == 30);
  CHECK(b.index == 30);
  // Zero-mass prefix: flat W across the row.
  std::vector<double> f2{0, 0, 0, 0, 0, 1, 2}, w{0, 0, 0, 0, 0, 1, 2}, fw{0, 0, 0, 0, 0, 1, 2};
  const simd::PrefixView flat{f2, w, fw};
  std::vector<double> p(7, 0.0);
  for (std::size_t i = 1; i <= 6; ++i) {
    const auto s = simd::scalar::segment_row_min(p, flat, i, 0, i);
    const auto v = simd::avx2::segment_row_min(p, flat, i, 0, i);
    CHECK(s.index == v.index);
    CHECK(same_bits(s.value, v.value));
  }
}

TEST_CASE("dp_solve is identical under both levels") {
  if (!simd::avx2_available()) return;
  LevelGuard g;
  const auto grid = build_grid(get_activation("gelu"), WeightSpec::uniform(-10, 10), 1000);
  simd::set_level(simd::Level::kScalar);
  const auto a = dp_solve_all(grid, 16);
  simd::set_level(simd::Level::kAvx2);
  const auto b = dp_solve_all(grid, 16);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(a[k].nodes == b[k].nodes);
    CHECK(same_bits(a[k].error, b[k].error));
  }
}

TEST_CASE("bin_search: avx2 equals scalar") {
  if (!simd::avx2_available()) return;
  std::mt19937 rng(4);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (unsigned depth = 0; depth <= 8; ++depth) {
    const std::size_t k = std::size_t{1} << depth;
    for (std::size_t used : {k, k / 2 + 1}) {
      if (used == 0 || used > k) continue;
      std::vector<double> padded(k - 1, std::numeric_limits<double>::infinity());
      std::vector<double> b;
      for (std::size_t i = 0; i + 1 < used; ++i) b.push_back(nd(rng));
      std::sort(b.begin(), b.end());
      std::copy(b.begin(), b.end(), padded.begin());
      for (bool fold : {false, true}) {
        std::vector<double> x(1003);  // odd length exercises the tail
        for (auto& v : x) v = nd(rng);
        for (std::size_t i = 0; i < b.size() && i < x.size(); ++i) x[i] = b[i];  // exact hits
        x.back() = -0.0;
        std::vector<std::uint8_t> s(x.size()), v(x.size());
        simd::scalar::bin_search(padded, depth, fold, x, s);
        simd::avx2::bin_search(padded, depth, fold, x, v);
        CHECK(s == v);
      }
    }
  }
}

TEST_CASE("gather_scale and pack_bits1: avx2 equals scalar") {
  if (!simd::avx2_available()) return;
  std::mt19937 rng(6);
  std::uniform_int_distribution<int> ui(0, 15);
  std::normal_distribution<double> nd;
  std::vector<double> levels(16);
  for (auto& v : levels) v = nd(rng);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 31u, 32u, 33u, 1000u}) {
    std::vector<double> up(n);
    std::vector<std::uint8_t> idx(n);
    for (std::size_t e = 0; e < n; ++e) {
      up[e] = nd(rng);
      idx[e] = static_cast<std::uint8_t>(ui(rng));
    }
    std::vector<double> a(n), b(n);
    simd::scalar::gather_scale(up, idx, levels, a);
    simd::avx2::gather_scale(up, idx, levels, b);
    for (std::size_t e = 0; e < n; ++e) CHECK(same_bits(a[e], b[e]));
    for (auto& v : idx) v &= 1;
    std::vector<std::uint8_t> pa((n + 7) / 8, 0), pb((n + 7) / 8, 0);
    simd::scalar::pack_bits1(idx, pa);
    simd::avx2::pack_bits1(idx, pb);
    CHECK(pa == pb);
  }
}

TEST_CASE("public kernels agree across levels") {
  if (!simd::avx2_available()) return;
  LevelGuard g;
  const auto t = build_table(get_activation("swish"), WeightSpec::uniform(-10, 10), 3,
                             {.grid_n = 500});
  std::mt19937 rng(2);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> x(777), up(777);
  for (auto& v : x) v = nd(rng);
  for (auto& v : up) v = nd(rng);
  simd::set_level(simd::Level::kScalar);
  const auto fa = quantized_forward(x, t);
  const auto ga = quantized_backward(up, fa.saved, t);
  simd::set_level(simd::Level::kAvx2);
  const auto fb = quantized_forward(x, t);
  const auto gb = quantized_backward(up, fb.saved, t);
  CHECK(fa.saved == fb.saved);
  for (std::size_t e = 0; e < x.size(); ++e) CHECK(same_bits(ga[e], gb[e]));
}
