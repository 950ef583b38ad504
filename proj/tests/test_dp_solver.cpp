#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fewbit/dp_solver.hpp"

using namespace fewbit;

namespace {

// Exhaustive search over every choice of K-1 interior grid nodes.
double brute_force(const QuadratureGrid& g, std::size_t K) {
  const std::size_t n = g.n();
  std::vector<std::size_t> cut(K + 1);
  cut[0] = 0;
  cut[K] = n;
  double best = std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, std::size_t k, std::size_t from) -> void {
    if (k == K) {
      double e = 0.0;
      for (std::size_t s = 0; s < K; ++s) e += segment_stats(g, cut[s], cut[s + 1]).cost;
      best = std::min(best, e);
      return;
    }
    for (std::size_t j = from; j + (K - k) <= n; ++j) {
      cut[k] = j;
      self(self, k + 1, j + 1);
    }
  };
  rec(rec, 1, 1);
  return best;
}

const WeightSpec kUniform = WeightSpec::uniform(-10, 10);

}  // namespace

TEST_CASE("ReLU two segments are exact") {
  const auto g = build_grid(get_activation("relu"), kUniform, 4000);
  const auto r = dp_solve(g, 2);
  REQUIRE(r.boundaries.size() == 3);
  CHECK(r.boundaries[0] == -10.0);
  CHECK(r.boundaries[1] == 0.0);
  CHECK(r.boundaries[2] == 10.0);
  CHECK(r.levels[0] == 0.0);
  CHECK(r.levels[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.error == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("one segment is the global weighted mean") {
  for (const auto& name : activation_names()) {
    const auto g = build_grid(get_activation(name), kUniform, 200);
    const auto r = dp_solve(g, 1);
    const double y = g.fw.back() / g.w.back();
    CHECK(r.levels[0] == doctest::Approx(y).epsilon(1e-14));
    CHECK(r.error == doctest::Approx(g.f2.back() - y * y * g.w.back()).epsilon(1e-12));
  }
}

TEST_CASE("GELU n=12 K=3 equals enumeration") {
  const auto g = build_grid(get_activation("gelu"), kUniform, 12);
  CHECK(std::abs(dp_solve(g, 3).error - brute_force(g, 3)) <= 1e-12);
}

TEST_CASE("DP equals enumeration for every activation, n <= 14, K <= 4") {
  for (const auto& name : activation_names()) {
    CAPTURE(name);
    for (std::size_t n : {4u, 7u, 10u, 14u}) {
      const auto g = build_grid(get_activation(name), kUniform, n);
      for (std::size_t K = 1; K <= 4; ++K) {
        CAPTURE(n);
        CAPTURE(K);
        CHECK(std::abs(dp_solve(g, K).error - brute_force(g, K)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("GELU 3-bit error on the default grid") {
  const auto g = build_grid(get_activation("gelu"), kUniform, 4000);
  const auto r = dp_solve(g, 8);
  CHECK(r.error == doctest::Approx(0.0119).epsilon(0.05));
}

TEST_CASE("result invariants") {
  const auto g = build_grid(get_activation("swish"), kUniform, 800);
  const auto r = dp_solve(g, 8);
  REQUIRE(r.segments() == 8);
  CHECK(r.boundaries.front() == -10.0);
  CHECK(r.boundaries.back() == 10.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(r.boundaries[k] < r.boundaries[k + 1]);
    CHECK(r.boundaries[k] == g.t[r.nodes[k]]);
    const auto st = segment_stats(g, r.nodes[k], r.nodes[k + 1]);
    CHECK(r.levels[k] == st.level);
    sum += st.cost;
  }
  CHECK(std::abs(r.error - sum) <= 1e-10);
}

TEST_CASE("error is nonincreasing in K and decays per added bit") {
  for (const auto& name : {"gelu", "swish", "tanh", "softplus", "selu", "sigmoid"}) {
    CAPTURE(name);
    const auto g = build_grid(get_activation(name), kUniform, 1000);
    const auto all = dp_solve_all(g, 16);
    for (std::size_t K = 1; K < 16; ++K) CHECK(all[K].error < all[K - 1].error);
    for (std::size_t K : {2u, 4u, 8u}) {
      const double ratio = all[2 * K - 1].error / all[K - 1].error;
      CAPTURE(K);
      CHECK(ratio >= 0.1);
      CHECK(ratio <= 0.7);
    }
  }
}

TEST_CASE("dp_solve_all matches individual solves") {
  const auto g = build_grid(get_activation("gelu"), kUniform, 300);
  const auto all = dp_solve_all(g, 9);
  for (std::size_t K = 1; K <= 9; ++K) {
    const auto one = dp_solve(g, K);
    CHECK(all[K - 1].nodes == one.nodes);
    CHECK(all[K - 1].error == one.error);
  }
}

TEST_CASE("ties go to the smallest boundary") {
  // ReLU on a grid where 0 is a node: any boundary inside x < 0 with K = 3 ties
  // at zero error, so the first feasible node (1) must be chosen.
  const auto g = build_grid(get_activation("relu"), kUniform, 10);
  const auto r = dp_solve(g, 3);
  CHECK(r.error == 0.0);
  CHECK(r.nodes == std::vector<std::size_t>{0, 1, 5, 10});
}

TEST_CASE("infeasible K") {
  const auto g = build_grid(get_activation("gelu"), kUniform, 10);
  CHECK_THROWS_AS(dp_solve(g, 11), std::invalid_argument);
  CHECK_THROWS_AS(dp_solve(g, 0), std::invalid_argument);
  CHECK_NOTHROW(dp_solve(g, 10));
}
