#include "fewbit/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fewbit {
namespace {

// Sub-panel cap for objective quadrature; fine enough that central
// differences with h = 1e-5 see a smooth function.
constexpr double kPanelWidth = 0.125;

void check_endpoints(const ApproxTarget& target, const BoundaryVector& s) {
  if (s[0] != target.lo() || s[s.segments()] != target.hi()) {
    throw std::invalid_argument("boundary endpoints must equal the target support [lo, hi]");
  }
}

struct SegmentMoments {
  double mass = 0.0;
  double first = 0.0;
};

SegmentMoments moments(const ApproxTarget& target, double a, double b) {
  SegmentMoments m;
  for_each_node(a, b, target.breakpoints(), kPanelWidth, [&](double x, double qw) {
    const double w = target.weight(x);
    m.mass += qw * w;
    m.first += qw * w * target.derivative(x);
  });
  return m;
}

double segment_error(const ApproxTarget& target, double a, double b, double level) {
  double sum = 0.0;
  for_each_node(a, b, target.breakpoints(), kPanelWidth, [&](double x, double qw) {
    const double d = target.derivative(x) - level;
    sum += qw * target.weight(x) * d * d;
  });
  return sum;
}

std::vector<double> project(const ApproxTarget& target, std::vector<double> s, double gap) {
  const std::size_t K = s.size() - 1;
  std::sort(s.begin() + 1, s.end() - 1);
  for (std::size_t i = 1; i < K; ++i) s[i] = std::clamp(s[i], target.lo() + gap, target.hi() - gap);
  for (std::size_t i = 1; i < K; ++i) s[i] = std::max(s[i], s[i - 1] + gap);
  for (std::size_t i = K - 1; i >= 1; --i) s[i] = std::min(s[i], s[i + 1] - gap);
  return s;
}

}  // namespace

BoundaryVector::BoundaryVector(std::vector<double> s) : s_(std::move(s)) {
  if (s_.size() < 2) throw std::invalid_argument("boundary vector needs at least two points");
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (!std::isfinite(s_[i])) throw std::invalid_argument("boundary vector has non-finite entry");
    if (i > 0 && !(s_[i] > s_[i - 1])) {
      throw std::invalid_argument("boundary vector must be strictly increasing");
    }
  }
}

std::vector<double> optimal_levels(const ApproxTarget& target, const BoundaryVector& s) {
  check_endpoints(target, s);
  std::vector<double> levels(s.segments());
  for (std::size_t k = 0; k < s.segments(); ++k) {
    const SegmentMoments m = moments(target, s[k], s[k + 1]);
    levels[k] = m.mass > 0.0 ? m.first / m.mass : 0.0;
  }
  return levels;
}

double objective_with_levels(const ApproxTarget& target, const BoundaryVector& s,
                             std::span<const double> levels) {
  check_endpoints(target, s);
  if (levels.size() != s.segments()) {
    throw std::invalid_argument("need exactly one level per segment");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < s.segments(); ++k) {
    total += segment_error(target, s[k], s[k + 1], levels[k]);
  }
  return total;
}

double objective(const ApproxTarget& target, const BoundaryVector& s) {
  const auto levels = optimal_levels(target, s);
  return objective_with_levels(target, s, levels);
}

std::vector<double> objective_gradient(const ApproxTarget& target, const BoundaryVector& s) {
  const auto y = optimal_levels(target, s);
  std::vector<double> g(s.segments() - 1);
  for (std::size_t i = 1; i < s.segments(); ++i) {
    const double x = s[i];
    g[i - 1] = (2.0 * target.derivative(x) - y[i] - y[i - 1]) * (y[i] - y[i - 1]) *
               target.weight(x);
  }
  return g;
}

RefineResult refine(const ApproxTarget& target, const BoundaryVector& s0,
                    const RefineOptions& options) {
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  check_endpoints(target, s0);

  const double start = objective(target, s0);
  RefineResult r{s0, start, start, 0};
  if (s0.segments() < 2) return r;

  std::vector<double> cur(s0.values().begin(), s0.values().end());
  double cur_obj = start;
  for (std::size_t step = 0; step < options.steps; ++step) {
    const auto g = objective_gradient(target, BoundaryVector(cur));
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) break;

    bool accepted = false;
    for (double lr = options.learning_rate; lr >= options.min_learning_rate; lr *= 0.5) {
      std::vector<double> cand = cur;
      for (std::size_t i = 1; i + 1 < cand.size(); ++i) cand[i] -= lr * g[i - 1];
      cand = project(target, std::move(cand), options.min_gap);
      const double c = objective(target, BoundaryVector(cand));
      if (c <= cur_obj) {
        cur = std::move(cand);
        cur_obj = c;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++r.accepted_steps;
  }
  r.boundaries = BoundaryVector(std::move(cur));
  r.final_objective = cur_obj;
  return r;
}

}  // namespace fewbit
