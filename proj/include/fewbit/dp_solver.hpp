#pragma once

#include <cstddef>
#include <vector>

#include "fewbit/quadrature.hpp"

namespace fewbit {

// Optimal K-segment piecewise-constant fit with boundaries on grid nodes.
struct DPResult {
  std::vector<double> boundaries;     // K + 1 grid values, first = lo, last = hi
  std::vector<std::size_t> nodes;     // grid indices of the boundaries
  std::vector<double> levels;         // K segment levels
  double error = 0.0;                 // sum of segment costs
  std::size_t segments() const { return levels.size(); }
};

// Exact minimizer over grid-node boundaries in O(n^2 K) time. Ties in the
// inner minimum go to the smallest j. Throws std::invalid_argument unless
// 1 <= K <= n.
DPResult dp_solve(const QuadratureGrid& grid, std::size_t K);

// One DP sweep up to max_k, returning the optimum for every K in 1..max_k
// (index K - 1). Each entry is identical to dp_solve(grid, K).
std::vector<DPResult> dp_solve_all(const QuadratureGrid& grid, std::size_t max_k);

}  // namespace fewbit
