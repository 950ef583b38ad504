#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fewbit/quadrature.hpp"

namespace fewbit {

// Segment boundaries s_0 < s_1 < ... < s_K. The endpoints must coincide with
// the target's [lo, hi]; functions taking a target check that.
class BoundaryVector {
 public:
  // Throws std::invalid_argument unless there are >= 2 finite, strictly increasing values.
  explicit BoundaryVector(std::vector<double> s);

  std::span<const double> values() const { return s_; }
  std::span<const double> interior() const { return std::span(s_).subspan(1, s_.size() - 2); }
  std::size_t segments() const { return s_.size() - 1; }
  double operator[](std::size_t i) const { return s_[i]; }

  friend bool operator==(const BoundaryVector&, const BoundaryVector&) = default;

 private:
  std::vector<double> s_;
};

// Weighted mean of f' on every segment; zero-mass segments get 0.
std::vector<double> optimal_levels(const ApproxTarget& target, const BoundaryVector& s);

// Weighted squared error of the piecewise-constant fit with the given levels.
double objective_with_levels(const ApproxTarget& target, const BoundaryVector& s,
                             std::span<const double> levels);

// Objective at the optimal levels for s.
double objective(const ApproxTarget& target, const BoundaryVector& s);

// Analytic derivative of objective(s) with respect to each interior boundary.
std::vector<double> objective_gradient(const ApproxTarget& target, const BoundaryVector& s);

struct RefineOptions {
  std::size_t steps = 200;
  double learning_rate = 1e-3;
  double min_gap = 1e-6;
  double min_learning_rate = 1e-12;
};

struct RefineResult {
  BoundaryVector boundaries;
  double initial_objective;
  double final_objective;
  std::size_t accepted_steps;
};

// Projected gradient descent on the interior boundaries. A step that would
// increase the objective is retried with half the learning rate, down to
// min_learning_rate; if none is accepted the descent stops.
RefineResult refine(const ApproxTarget& target, const BoundaryVector& s0,
                    const RefineOptions& options = {});

}  // namespace fewbit
