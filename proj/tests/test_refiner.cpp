#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "fewbit/dp_solver.hpp"
#include "fewbit/refiner.hpp"

using namespace fewbit;

namespace {

const WeightSpec kUniform = WeightSpec::uniform(-10, 10);

ApproxTarget full(const char* name) { return ApproxTarget::full(get_activation(name), kUniform); }

std::vector<double> random_boundaries(std::mt19937& rng, std::size_t K, double lo, double hi) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::vector<double> s;
  while (s.size() < K - 1) {
    const double v = u(rng);
    bool ok = true;
    for (double t : s) ok = ok && std::abs(t - v) > 0.05;
    if (ok) s.push_back(v);
  }
  std::sort(s.begin(), s.end());
  s.insert(s.begin(), lo);
  s.push_back(hi);
  return s;
}

}  // namespace

TEST_CASE("boundary vector validation") {
  CHECK_THROWS_AS(BoundaryVector({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(BoundaryVector({0.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(BoundaryVector({0.0, NAN, 1.0}), std::invalid_argument);
  const BoundaryVector s({-10, 0.5, 10});
  CHECK(s.segments() == 2);
  CHECK(s.interior().size() == 1);
  CHECK_THROWS_AS(objective(full("relu"), BoundaryVector({-9, 0, 10})), std::invalid_argument);
}

TEST_CASE("ReLU split at 0.5") {
  const auto t = full("relu");
  const BoundaryVector s({-10, 0.5, 10});
  const auto y = optimal_levels(t, s);
  CHECK(y[0] == doctest::Approx(1.0 / 21.0).epsilon(1e-13));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(objective(t, s) == doctest::Approx(10.0 / 21.0).epsilon(1e-12));
  CHECK(objective(t, s) == doctest::Approx(0.47619).epsilon(1e-5));
}

TEST_CASE("ReLU split at 0 has zero objective") {
  const auto t = full("relu");
  CHECK(objective(t, BoundaryVector({-10, 0, 10})) <= 1e-15);
}

TEST_CASE("objective matches adaptive quadrature") {
  using boost::math::quadrature::gauss_kronrod;
  const auto& gelu = get_activation("gelu");
  const auto t = full("gelu");
  const BoundaryVector s({-10, -1.3, 0.2, 2.7, 10});
  const auto y = optimal_levels(t, s);
  double oracle = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double yk = y[k];
    oracle += gauss_kronrod<double, 61>::integrate(
        [&](double x) { return std::pow(gelu.df(x) - yk, 2); }, s[k], s[k + 1], 15, 1e-14);
  }
  CHECK(std::abs(objective(t, s) - oracle) < 1e-11);
}

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937 rng(5);
  const double h = 1e-5;
  for (const auto* name : {"gelu", "swish", "selu", "softplus", "tanh", "sigmoid"}) {
    CAPTURE(name);
    const auto t = full(name);
    for (int trial = 0; trial < 5; ++trial) {
      const auto s = random_boundaries(rng, 6, -10, 10);
      const auto g = objective_gradient(t, BoundaryVector(s));
      REQUIRE(g.size() == 5);
      for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        auto up = s, dn = s;
        up[i] += h;
        dn[i] -= h;
        const double fd =
            (objective(t, BoundaryVector(up)) - objective(t, BoundaryVector(dn))) / (2 * h);
        // Relative error with a small absolute floor for near-flat directions.
        const double denom = std::max(std::abs(fd), 1e-6);
        CHECK(std::abs(g[i - 1] - fd) / denom <= 1e-4);
      }
    }
  }
}

TEST_CASE("weighted means are optimal for fixed boundaries") {
  const auto t = full("gelu");
  const BoundaryVector s({-10, -2, -0.5, 0.4, 1.9, 10});
  const auto y = optimal_levels(t, s);
  const double base = objective_with_levels(t, s, y);
  CHECK(base == doctest::Approx(objective(t, s)).epsilon(1e-14));
  for (std::size_t k = 0; k < y.size(); ++k) {
    for (double eps : {-1e-3, 1e-3}) {
      auto z = y;
      z[k] += eps;
      CHECK(objective_with_levels(t, s, z) > base);
    }
  }
  CHECK_THROWS_AS(objective_with_levels(t, s, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("refine never increases the objective and keeps the vector valid") {
  for (const auto* name : {"gelu", "swish", "selu"}) {
    CAPTURE(name);
    const auto t = full(name);
    const auto g = build_grid(t, 400);
    const auto dp = dp_solve(g, 8);
    const auto r = refine(t, BoundaryVector(dp.boundaries), {.steps = 100});
    CHECK(r.final_objective <= r.initial_objective);
    CHECK(r.initial_objective == doctest::Approx(dp.error).epsilon(1e-9));
    CHECK(r.boundaries[0] == -10.0);
    CHECK(r.boundaries[8] == 10.0);
    CHECK(r.final_objective == doctest::Approx(objective(t, r.boundaries)).epsilon(1e-14));
  }
}

TEST_CASE("refine from a perturbed start recovers the DP optimum") {
  const auto t = full("gelu");
  const auto g = build_grid(t, 2000);
  const auto dp = dp_solve(g, 4);
  auto s = dp.boundaries;
  s[1] += 0.1;
  s[3] -= 0.1;
  const auto r = refine(t, BoundaryVector(s), {.steps = 2000, .learning_rate = 0.05});
  CHECK(r.final_objective < r.initial_objective);
  CHECK(r.final_objective <= dp.error * (1 + 1e-4));
}

TEST_CASE("ReLU boundary converges to the kink") {
  const auto t = full("relu");
  const auto r = refine(t, BoundaryVector({-10, 0.5, 10}), {.steps = 500, .learning_rate = 0.01});
  CHECK(r.final_objective < 1e-4);
  CHECK(std::abs(r.boundaries[1]) < 1e-4);
}

TEST_CASE("refine rejects a nonpositive learning rate") {
  CHECK_THROWS_AS(refine(full("gelu"), BoundaryVector({-10, 0, 10}), {.learning_rate = 0.0}),
                  std::invalid_argument);
}
