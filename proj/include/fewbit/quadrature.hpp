#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fewbit/activations.hpp"

namespace fewbit {

enum class WeightKind { kUniform, kGaussian };

std::string_view to_string(WeightKind kind);
WeightKind weight_kind_from_string(std::string_view name);

// Nonnegative weight supported on [a, b]. The gaussian kind is the standard
// normal pdf truncated to [a, b] (not renormalized).
struct WeightSpec {
  WeightKind kind = WeightKind::kUniform;
  double a = -10.0;
  double b = 10.0;

  static WeightSpec uniform(double a, double b) { return {WeightKind::kUniform, a, b}; }
  static WeightSpec gaussian(double a, double b) { return {WeightKind::kGaussian, a, b}; }

  double density(double x) const;
  void validate() const;

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

// The weighted function being approximated: df on [lo, hi] under weight w.
//
// A folded target works on |x|: it lives on [0, max(|a|, |b|)] with weight
// w(x) + w(-x), so that its objective equals the full-axis objective of the
// mirrored approximation. Only valid for activations with an even derivative.
class ApproxTarget {
 public:
  static ApproxTarget full(const ActivationSpec& act, const WeightSpec& weight);
  static ApproxTarget folded(const ActivationSpec& act, const WeightSpec& weight);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool is_folded() const { return folded_; }
  const ActivationSpec& activation() const { return act_; }
  const WeightSpec& weight_spec() const { return weight_; }

  double derivative(double x) const { return act_.df(x); }
  double weight(double x) const;

  // Sorted points in (lo, hi) where the integrand may be discontinuous.
  const std::vector<double>& breakpoints() const { return breaks_; }

 private:
  ApproxTarget(const ActivationSpec& act, const WeightSpec& weight, bool folded);

  ActivationSpec act_;
  WeightSpec weight_;
  bool folded_;
  double lo_;
  double hi_;
  std::vector<double> breaks_;
};

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// Nodes by Newton iteration on the Legendre three-term recurrence.
GaussLegendreRule gauss_legendre(std::size_t points);

// The 16-point rule used throughout.
const GaussLegendreRule& gauss_legendre16();

// Composite 16-point Gauss-Legendre over [a, b], split at `breaks` and into
// sub-panels no wider than `max_width`. Calls fn(x, w) for every node with its
// quadrature weight already scaled to the sub-panel.
template <typename Fn>
void for_each_node(double a, double b, std::span<const double> breaks, double max_width, Fn&& fn);

// Discretization t_0..t_n of [lo, hi] with prefix integrals of f'^2 w, w and f' w.
struct QuadratureGrid {
  std::vector<double> t;
  std::vector<double> f2;
  std::vector<double> w;
  std::vector<double> fw;

  std::size_t n() const { return t.size() - 1; }
};

// Uniform grid with n panels. Throws std::invalid_argument for n < 2 and
// std::domain_error if the integrand is not finite somewhere.
QuadratureGrid build_grid(const ApproxTarget& target, std::size_t n);
QuadratureGrid build_grid(const ActivationSpec& act, const WeightSpec& weight, std::size_t n);

struct SegmentStats {
  double level = 0.0;  // optimal constant on [t_j, t_i]
  double cost = 0.0;   // weighted squared error of that constant
  bool zero_mass = false;
};

// Level and cost from prefix sums; requires 0 <= j < i <= n.
SegmentStats segment_stats(const QuadratureGrid& grid, std::size_t j, std::size_t i);

// The O(1) segment formula shared by segment_stats and every DP kernel. The
// operation order is part of the contract: SIMD kernels reproduce it exactly.
inline SegmentStats segment_from_prefix(double f2_i, double f2_j, double w_i, double w_j,
                                        double fw_i, double fw_j) {
  const double dw = w_i - w_j;
  if (!(dw > 0.0)) return {0.0, 0.0, true};
  const double y = (fw_i - fw_j) / dw;
  const double t = (f2_i - f2_j) - y * y * dw;
  return {y, t > 0.0 ? t : 0.0, false};
}

// ---------------------------------------------------------------------------

template <typename Fn>
void for_each_node(double a, double b, std::span<const double> breaks, double max_width, Fn&& fn) {
  const auto& rule = gauss_legendre16();
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return;
    std::size_t m = 1;
    if (max_width > 0) {
      const double pieces = (hi - lo) / max_width;
      if (pieces > 1.0) m = static_cast<std::size_t>(pieces) + 1;
    }
    for (std::size_t p = 0; p < m; ++p) {
      const double pa = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(m);
      const double pb = p + 1 == m ? hi
                                   : lo + (hi - lo) * static_cast<double>(p + 1) /
                                              static_cast<double>(m);
      const double half = 0.5 * (pb - pa);
      const double mid = 0.5 * (pa + pb);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        fn(mid + half * rule.nodes[q], half * rule.weights[q]);
      }
    }
  };
  double cur = a;
  for (double bp : breaks) {
    if (bp <= cur || bp >= b) continue;
    piece(cur, bp);
    cur = bp;
  }
  piece(cur, b);
}

}  // namespace fewbit
