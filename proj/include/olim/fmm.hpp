#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "olim/grid.hpp"
#include "olim/heap.hpp"
#include "olim/marcher.hpp"

namespace olim {

namespace detail {

/// Standard upwind quadratic update: with a_1 <= ... <= a_m the per-axis
/// upwind values, solve sum_k (U - a_k)^2 = (s h)^2 for the largest root,
/// dropping the largest a_k while the root falls below it.
inline double fmm_node_update(std::array<double, 3>& a, int m, double sh) {
  std::sort(a.begin(), a.begin() + m);
  for (; m >= 2; --m) {
    double sum = 0, sum2 = 0;
    for (int k = 0; k < m; ++k) {
      sum += a[static_cast<std::size_t>(k)];
      sum2 += a[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(k)];
    }
    double disc = sum * sum - m * (sum2 - sh * sh);
    if (disc >= 0) {
      double u = (sum + std::sqrt(disc)) / m;
      if (u >= a[static_cast<std::size_t>(m - 1)]) return u;
    }
  }
  return a[0] + sh;
}

}  // namespace detail

/// Classic fast marching method on the axis neighborhood, kept independent
/// of the line-integral updates so the two solvers can be compared.
inline Solution fmm_solve(const SlownessGrid& grid,
                          const std::vector<BoundaryNode>& boundary) {
  const GridSpec& spec = grid.spec;
  int dim = spec.dim;
  std::vector<NodeState> states(static_cast<std::size_t>(spec.size()), NodeState::far);
  std::vector<double> values(static_cast<std::size_t>(spec.size()), kInf);
  SolveStats stats;
  IndexedMinHeap heap(spec.size());

  if (boundary.empty()) throw std::invalid_argument("boundary must be nonempty");
  for (const auto& [lin, val] : boundary) {
    if (states[static_cast<std::size_t>(lin)] == NodeState::trial) {
      if (val < values[static_cast<std::size_t>(lin)]) {
        values[static_cast<std::size_t>(lin)] = val;
        heap.decrease(lin, val);
      }
      continue;
    }
    states[static_cast<std::size_t>(lin)] = NodeState::trial;
    values[static_cast<std::size_t>(lin)] = val;
    heap.push(lin, val);
    ++stats.heap_pushes;
  }

  auto recompute = [&](const std::array<int, 3>& idx, std::int64_t lin) {
    std::array<double, 3> a{};
    int m = 0;
    for (int k = 0; k < dim; ++k) {
      double best = kInf;
      for (int step : {-1, 1}) {
        std::array<int, 3> nb = idx;
        nb[k] += step;
        if (!spec.in_bounds(nb)) continue;
        std::int64_t nl = spec.linear(nb);
        if (states[static_cast<std::size_t>(nl)] == NodeState::valid)
          best = std::min(best, values[static_cast<std::size_t>(nl)]);
      }
      if (best < kInf) a[static_cast<std::size_t>(m++)] = best;
    }
    ++stats.attempted[0];
    return detail::fmm_node_update(a, m, grid.at(lin) * spec.h);
  };

  while (!heap.empty()) {
    std::int64_t new_lin = heap.pop_min();
    ++stats.heap_pops;
    states[static_cast<std::size_t>(new_lin)] = NodeState::valid;
    ++stats.accepted;
    std::array<int, 3> new_idx = spec.unlinear(new_lin);
    for (int k = 0; k < dim; ++k) {
      for (int step : {-1, 1}) {
        std::array<int, 3> hat = new_idx;
        hat[k] += step;
        if (!spec.in_bounds(hat)) continue;
        std::int64_t hat_lin = spec.linear(hat);
        NodeState st = states[static_cast<std::size_t>(hat_lin)];
        if (st == NodeState::valid) continue;
        double cand = recompute(hat, hat_lin);
        auto& u = values[static_cast<std::size_t>(hat_lin)];
        if (st == NodeState::far) {
          states[static_cast<std::size_t>(hat_lin)] = NodeState::trial;
          u = cand;
          heap.push(hat_lin, cand);
          ++stats.heap_pushes;
        } else if (cand < u) {
          u = cand;
          heap.decrease(hat_lin, cand);
          ++stats.heap_decreases;
        }
      }
    }
  }

  Solution sol;
  sol.values = std::move(values);
  sol.stats = stats;
  return sol;
}

}  // namespace olim
