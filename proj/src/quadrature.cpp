#include "fewbit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fewbit {

std::string_view to_string(WeightKind kind) {
  return kind == WeightKind::kUniform ? "uniform" : "gaussian";
}

WeightKind weight_kind_from_string(std::string_view name) {
  if (name == "uniform") return WeightKind::kUniform;
  if (name == "gaussian") return WeightKind::kGaussian;
  throw std::invalid_argument("unknown weight kind '" + std::string(name) +
                              "'; expected uniform or gaussian");
}

double WeightSpec::density(double x) const {
  if (x < a || x > b) return 0.0;
  if (kind == WeightKind::kUniform) return 1.0;
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void WeightSpec::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw std::invalid_argument("weight support must be finite with A < B");
  }
}

ApproxTarget::ApproxTarget(const ActivationSpec& act, const WeightSpec& weight, bool folded)
    : act_(act), weight_(weight), folded_(folded) {
  weight_.validate();
  if (folded_) {
    if (!act_.even_derivative) {
      throw std::invalid_argument("symmetric tables need an even derivative; '" + act_.name +
                                  "' does not have one");
    }
    lo_ = 0.0;
    hi_ = std::max(std::abs(weight_.a), std::abs(weight_.b));
    if (weight_.a > 0.0) lo_ = weight_.a;
    if (weight_.b < 0.0) lo_ = -weight_.b;
  } else {
    lo_ = weight_.a;
    hi_ = weight_.b;
  }

  std::vector<double> cand;
  for (double k : act_.kinks) cand.push_back(folded_ ? std::abs(k) : k);
  if (folded_) {
    cand.push_back(std::abs(weight_.a));
    cand.push_back(std::abs(weight_.b));
  }
  for (double c : cand) {
    if (c > lo_ && c < hi_) breaks_.push_back(c);
  }
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

ApproxTarget ApproxTarget::full(const ActivationSpec& act, const WeightSpec& weight) {
  return ApproxTarget(act, weight, false);
}

ApproxTarget ApproxTarget::folded(const ActivationSpec& act, const WeightSpec& weight) {
  return ApproxTarget(act, weight, true);
}

double ApproxTarget::weight(double x) const {
  if (!folded_) return weight_.density(x);
  if (x < 0.0) return 0.0;
  // x == 0 is a single point of the mirror; count it once.
  return x == 0.0 ? weight_.density(0.0) : weight_.density(x) + weight_.density(-x);
}

GaussLegendreRule gauss_legendre(std::size_t points) {
  if (points == 0) throw std::invalid_argument("gauss_legendre needs at least one point");
  GaussLegendreRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const double n = static_cast<double>(points);
  const std::size_t half = (points + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= points; ++j) {
        const double p2 = p1;
        p1 = p0;
        const double jd = static_cast<double>(j);
        p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[points - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[points - 1 - i] = w;
  }
  return rule;
}

const GaussLegendreRule& gauss_legendre16() {
  static const GaussLegendreRule rule = gauss_legendre(16);
  return rule;
}

namespace {
// Sub-panel width cap; keeps 16-point panels near machine precision even on coarse grids.
constexpr double kMaxPanelWidth = 0.25;
}  // namespace

QuadratureGrid build_grid(const ApproxTarget& target, std::size_t n) {
  if (n < 2) throw std::invalid_argument("grid needs n >= 2 panels");
  const double lo = target.lo();
  const double hi = target.hi();

  QuadratureGrid g;
  g.t.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    // (hi - lo) * i / n keeps nodes like 0 exact when they fall on the grid.
    g.t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
  }
  g.t[n] = hi;

  g.f2.assign(n + 1, 0.0);
  g.w.assign(n + 1, 0.0);
  g.fw.assign(n + 1, 0.0);
  const auto& breaks = target.breakpoints();
  for (std::size_t i = 0; i < n; ++i) {
    double pf2 = 0.0;
    double pw = 0.0;
    double pfw = 0.0;
    for_each_node(g.t[i], g.t[i + 1], breaks, kMaxPanelWidth, [&](double x, double qw) {
      const double d = target.derivative(x);
      const double w = target.weight(x);
      if (!std::isfinite(d) || !std::isfinite(w)) {
        throw std::domain_error("non-finite integrand at x = " + std::to_string(x));
      }
      pf2 += qw * d * d * w;
      pw += qw * w;
      pfw += qw * d * w;
    });
    g.f2[i + 1] = g.f2[i] + pf2;
    g.w[i + 1] = g.w[i] + pw;
    g.fw[i + 1] = g.fw[i] + pfw;
  }
  return g;
}

QuadratureGrid build_grid(const ActivationSpec& act, const WeightSpec& weight, std::size_t n) {
  return build_grid(ApproxTarget::full(act, weight), n);
}

SegmentStats segment_stats(const QuadratureGrid& grid, std::size_t j, std::size_t i) {
  if (!(j < i) || i > grid.n()) {
    throw std::out_of_range("segment_stats needs 0 <= j < i <= n");
  }
  return segment_from_prefix(grid.f2[i], grid.f2[j], grid.w[i], grid.w[j], grid.fw[i],
                             grid.fw[j]);
}

}  // namespace fewbit
