#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "fewbit/qtable.hpp"

using namespace fewbit;

namespace {

const WeightSpec kUniform = WeightSpec::uniform(-10, 10);

// Linear scan over boundaries: count of boundaries <= key.
std::size_t scan_index(const QuantizationTable& t, double x) {
  const double key = t.exploit_symmetry ? std::abs(x) : x;
  std::size_t i = 0;
  while (i < t.boundaries.size() && key >= t.boundaries[i]) ++i;
  return i;
}

const QuantizationTable& gelu3() {
  static const auto t = build_table(get_activation("gelu"), kUniform, 3);
  return t;
}

std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  const auto p = text.find(key + " =");
  REQUIRE(p != std::string::npos);
  const auto e = text.find('\n', p);
  return text.replace(p, e - p, line);
}

}  // namespace

TEST_CASE("ReLU 1-bit table is exact") {
  const auto t = build_table(get_activation("relu"), kUniform, 1);
  REQUIRE(t.boundaries.size() == 1);
  CHECK(t.boundaries[0] == 0.0);
  CHECK(t.levels == std::vector<double>{0.0, 1.0});
  CHECK(t.achieved_error <= 1e-15);
  CHECK(lookup_index(t, -3.0) == 0);
  CHECK(lookup_index(t, 0.0) == 1);
  CHECK(lookup_index(t, 2.0) == 1);
  CHECK(lookup_level(t, lookup_index(t, 2.0)) == 1.0);
}

TEST_CASE("published-scale errors") {
  const auto g4 = build_table(get_activation("gelu"), kUniform, 4);
  CHECK(g4.achieved_error == doctest::Approx(0.0031).epsilon(0.05));
  CHECK(g4.num_levels() == 16);
  const auto s2 = build_table(get_activation("sigmoid"), kUniform, 2, {.exploit_symmetry = true});
  CHECK(s2.achieved_error == doctest::Approx(0.0038).epsilon(0.05));
  CHECK(s2.num_levels() == 4);
  CHECK(s2.boundaries.size() == 3);
}

TEST_CASE("GELU 3-bit level at zero") {
  const auto& t = gelu3();
  CHECK(t.num_levels() == 8);
  CHECK(std::abs(lookup_level(t, lookup_index(t, 0.0)) - 0.5) <= 0.15);
  CHECK(t.achieved_error == doctest::Approx(0.0119).epsilon(0.05));
}

TEST_CASE("build reports DP and refined errors") {
  const auto b = build_table_detailed(get_activation("swish"), kUniform, 2);
  CHECK(b.refined_error <= b.dp_error);
  CHECK(b.refined_error == b.table.achieved_error);
}

TEST_CASE("table_error agrees with achieved_error") {
  CHECK(table_error(gelu3()) == doctest::Approx(gelu3().achieved_error).epsilon(1e-9));
  for (int bits : {1, 3}) {
    const auto t = build_table(get_activation("tanh"), kUniform, bits, {.exploit_symmetry = true});
    CHECK(table_error(t) == doctest::Approx(t.achieved_error).epsilon(1e-9));
  }
}

TEST_CASE("error decreases with bits") {
  double prev = INFINITY;
  for (int bits = 1; bits <= 4; ++bits) {
    const auto t = build_table(get_activation("softplus"), kUniform, bits, {.grid_n = 1000});
    CHECK(t.achieved_error < prev);
    prev = t.achieved_error;
  }
}

TEST_CASE("lookup equals linear scan") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  const auto sym = build_table(get_activation("sigmoid"), kUniform, 3, {.exploit_symmetry = true});
  for (const auto* t : {&gelu3(), &sym}) {
    for (int k = 0; k < 2000; ++k) {
      const double x = u(rng);
      CHECK(lookup_index(*t, x) == scan_index(*t, x));
    }
    for (double b : t->boundaries) {
      CHECK(lookup_index(*t, b) == scan_index(*t, b));
      CHECK(lookup_index(*t, std::nextafter(b, -INFINITY)) == scan_index(*t, b) - 1);
    }
  }
}

TEST_CASE("symmetric lookup is even") {
  const auto t = build_table(get_activation("tanh"), kUniform, 2, {.exploit_symmetry = true});
  CHECK(t.exploit_symmetry);
  for (double x : {0.1, 0.7, 2.5, 9.0, 20.0}) CHECK(lookup_index(t, x) == lookup_index(t, -x));
  CHECK_THROWS_AS(build_table(get_activation("gelu"), kUniform, 2, {.exploit_symmetry = true}),
                  std::invalid_argument);
}

TEST_CASE("lookup error handling") {
  CHECK_THROWS_AS(lookup_index(gelu3(), NAN), std::invalid_argument);
  CHECK_THROWS_AS(lookup_level(gelu3(), 8), std::out_of_range);
  CHECK(lookup_index(gelu3(), -1e300) == 0);
  CHECK(lookup_index(gelu3(), 1e300) == 7);
}

TEST_CASE("build argument validation") {
  CHECK_THROWS_AS(build_table(get_activation("gelu"), kUniform, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_table(get_activation("gelu"), kUniform, 9), std::invalid_argument);
}

TEST_CASE("save and load round-trip bitwise") {
  const auto dir = std::filesystem::temp_directory_path() / "fewbit_qtable_test";
  std::filesystem::create_directories(dir);
  for (const auto& t : {gelu3(), build_table(get_activation("sigmoid"), WeightSpec::gaussian(-6, 6),
                                             2, {.grid_n = 600, .exploit_symmetry = true})}) {
    const auto path = dir / (t.activation + ".table");
    save_table(t, path);
    const auto back = load_table(path);
    CHECK(back == t);
    for (std::size_t k = 0; k < t.levels.size(); ++k) CHECK(back.levels[k] == t.levels[k]);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_table(dir / "missing.table"));
}

TEST_CASE("malformed files are rejected") {
  const auto good = format_table(gelu3());
  CHECK(parse_table(good) == gelu3());
  // Non-monotone boundaries.
  CHECK_THROWS_AS(parse_table(replace_line(good, "boundaries", "boundaries = [0 -1 2 3 4 5 6]")),
                  TableError);
  // Nine levels in a 3-bit table.
  auto nine = replace_line(good, "levels", "levels = [0 0.1 0.2 0.3 0.4 0.5 0.6 0.7 0.8]");
  nine = replace_line(nine, "num_levels", "num_levels = 9");
  nine = replace_line(nine, "boundaries", "boundaries = [-3 -2 -1 0 1 2 3 4]");
  CHECK_THROWS_AS(parse_table(nine), TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "num_levels", "num_levels = 7")), TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "format_version", "format_version = 99")),
                  TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "bits", "bits = three")), TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "activation", "activation = mish")), TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "levels", "levels = [0 1 2")), TableError);
  CHECK_THROWS_AS(parse_table(replace_line(good, "levels", "# dropped")), TableError);
  CHECK_THROWS_AS(parse_table("garbage"), TableError);
  CHECK_THROWS_AS(parse_table(good + "bits = 3\n"), TableError);
}
