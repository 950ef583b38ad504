#include "fewbit/dp_solver.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "fewbit/simd.hpp"

namespace fewbit {
namespace {

struct Sweep {
  // parent[k][i]: start node of the last segment in the best k+1-segment fit of [t_0, t_i].
  std::vector<std::vector<std::uint32_t>> parent;
  // Best cost of the (k+1)-segment fit of the whole interval.
  std::vector<double> total;
};

Sweep sweep(const QuadratureGrid& grid, std::size_t max_k) {
  const std::size_t n = grid.n();
  if (max_k < 1 || max_k > n) {
    throw std::invalid_argument("segment count K = " + std::to_string(max_k) +
                                " infeasible for a grid with n = " + std::to_string(n) +
                                " panels (need 1 <= K <= n)");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const simd::PrefixView view{grid.f2, grid.w, grid.fw};

  Sweep s;
  s.parent.assign(max_k, std::vector<std::uint32_t>(n + 1, 0));
  s.total.assign(max_k, inf);

  std::vector<double> prev(n + 1, inf);
  std::vector<double> cur(n + 1, inf);
  for (std::size_t i = 1; i <= n; ++i) {
    prev[i] = segment_stats(grid, 0, i).cost;
  }
  s.total[0] = prev[n];

  for (std::size_t k = 1; k < max_k; ++k) {
    // k + 1 segments ending at node i need at least k + 1 panels.
    std::fill(cur.begin(), cur.end(), inf);
    const bool last = k + 1 == max_k;
    for (std::size_t i = last ? n : k + 1; i <= n; ++i) {
      const simd::RowMin m = simd::segment_row_min(prev, view, i, k, i);
      cur[i] = m.value;
      s.parent[k][i] = static_cast<std::uint32_t>(m.index);
    }
    s.total[k] = cur[n];
    std::swap(prev, cur);
  }
  return s;
}

DPResult backtrack(const QuadratureGrid& grid, const Sweep& s, std::size_t K) {
  DPResult r;
  r.nodes.assign(K + 1, 0);
  std::size_t i = grid.n();
  r.nodes[K] = i;
  for (std::size_t k = K - 1; k > 0; --k) {
    i = s.parent[k][i];
    r.nodes[k] = i;
  }
  r.nodes[0] = 0;

  r.boundaries.reserve(K + 1);
  for (std::size_t node : r.nodes) r.boundaries.push_back(grid.t[node]);
  r.levels.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const SegmentStats st = segment_stats(grid, r.nodes[k], r.nodes[k + 1]);
    r.levels.push_back(st.level);
    r.error += st.cost;
  }
  return r;
}

}  // namespace

DPResult dp_solve(const QuadratureGrid& grid, std::size_t K) {
  return backtrack(grid, sweep(grid, K), K);
}

std::vector<DPResult> dp_solve_all(const QuadratureGrid& grid, std::size_t max_k) {
  // The last layer of a single sweep only fills i = n, which is all backtracking needs.
  const Sweep s = sweep(grid, max_k);
  std::vector<DPResult> out;
  out.reserve(max_k);
  for (std::size_t K = 1; K <= max_k; ++K) out.push_back(backtrack(grid, s, K));
  return out;
}

}  // namespace fewbit
