#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "olim/factoring.hpp"
#include "olim/grid.hpp"
#include "olim/heap.hpp"
#include "olim/stencil.hpp"
#include "olim/update.hpp"
#include "olim/vec.hpp"

namespace olim {

enum class UpdateAlgorithm { top_down, bottom_up };

struct SolverConfig {
  StencilKind stencil = StencilKind::olim6;
  QuadRule rule = QuadRule::rhr();
  bool visibility_skipping = true;  // top-down
  bool kkt_skipping = true;         // bottom-up
  std::vector<PointSourceFactor> factors;
  SolveOptions solve_options;

  UpdateAlgorithm algorithm() const {
    return stencil == StencilKind::olim3d ? UpdateAlgorithm::bottom_up
                                          : UpdateAlgorithm::top_down;
  }
  std::string name() const {
    return std::string(to_string(stencil)) + "_" + rule.name();
  }
};

struct SolveStats {
  std::array<std::uint64_t, 3> attempted{};  // by base dimension
  std::array<std::uint64_t, 3> skipped{};
  std::uint64_t heap_pushes = 0;
  std::uint64_t heap_decreases = 0;
  std::uint64_t heap_pops = 0;
  std::uint64_t accepted = 0;
  double max_pop_decrease = 0;  // worst backstep in the accepted-value sequence

  std::uint64_t heap_ops() const { return heap_pushes + heap_decreases + heap_pops; }
  std::uint64_t total_attempted() const {
    return attempted[0] + attempted[1] + attempted[2];
  }
  std::uint64_t total_skipped() const {
    return skipped[0] + skipped[1] + skipped[2];
  }
};

struct Solution {
  std::vector<double> values;
  SolveStats stats;
  SolverConfig config;
};

using BoundaryNode = std::pair<std::int64_t, double>;

namespace detail {

struct SmallBitset {
  std::array<std::uint64_t, 4> w{};
  void set(int i) { w[static_cast<std::size_t>(i >> 6)] |= 1ull << (i & 63); }
  bool test(int i) const {
    return (w[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1;
  }
  void clear() { w = {}; }
};

template <int N>
class Marcher {
 public:
  Marcher(const SlownessGrid& grid, const SolverConfig& cfg)
      : grid_(grid),
        cfg_(cfg),
        stencil_(make()),
        states_(static_cast<std::size_t>(grid.spec.size()), NodeState::far),
        values_(static_cast<std::size_t>(grid.spec.size()), kInf) {
    if (stencil_dim(cfg.stencil) != N)
      throw std::invalid_argument("stencil does not match grid dimension");
    if (stencil_.max_list_size() > 256)
      throw std::invalid_argument("stencil too large for the update bookkeeping");
  }

  Solution run(const std::vector<BoundaryNode>& boundary) {
    if (boundary.empty()) throw std::invalid_argument("boundary must be nonempty");
    IndexedMinHeap heap(grid_.spec.size());
    for (const auto& [lin, val] : boundary) {
      if (lin < 0 || lin >= grid_.spec.size())
        throw std::invalid_argument("boundary node out of bounds");
      if (!(val >= 0) || !std::isfinite(val))
        throw std::invalid_argument("boundary values must be finite and nonnegative");
      auto& u = values_[static_cast<std::size_t>(lin)];
      if (states_[static_cast<std::size_t>(lin)] == NodeState::trial) {
        if (val < u) {
          u = val;
          heap.decrease(lin, val);
        }
        continue;
      }
      states_[static_cast<std::size_t>(lin)] = NodeState::trial;
      u = val;
      heap.push(lin, val);
      ++stats_.heap_pushes;
    }

    double prev_pop = -kInf;
    while (!heap.empty()) {
      std::int64_t new_lin = heap.pop_min();
      ++stats_.heap_pops;
      double popped = values_[static_cast<std::size_t>(new_lin)];
      if (popped < prev_pop)
        stats_.max_pop_decrease = std::max(stats_.max_pop_decrease, prev_pop - popped);
      prev_pop = popped;
      states_[static_cast<std::size_t>(new_lin)] = NodeState::valid;
      ++stats_.accepted;

      std::array<int, 3> new_idx = grid_.spec.unlinear(new_lin);
      for (const auto& o : stencil_.neighbors) {
        std::array<int, 3> hat = new_idx;
        for (int k = 0; k < N; ++k) hat[k] += o[k];
        if (!grid_.spec.in_bounds(hat)) continue;
        std::int64_t hat_lin = grid_.spec.linear(hat);
        NodeState st = states_[static_cast<std::size_t>(hat_lin)];
        if (st == NodeState::valid) continue;
        double cand = cfg_.algorithm() == UpdateAlgorithm::bottom_up
                          ? update_bottom_up(hat, hat_lin, -o)
                          : update_top_down(hat, hat_lin, -o);
        auto& u = values_[static_cast<std::size_t>(hat_lin)];
        if (st == NodeState::far) {
          states_[static_cast<std::size_t>(hat_lin)] = NodeState::trial;
          u = cand;
          heap.push(hat_lin, cand);
          ++stats_.heap_pushes;
        } else if (cand < u) {
          u = cand;
          heap.decrease(hat_lin, cand);
          ++stats_.heap_decreases;
        }
      }
    }

    Solution sol;
    sol.values = std::move(values_);
    sol.stats = stats_;
    sol.config = cfg_;
    return sol;
  }

  /// Admissible simplex lists for one update, exposed for the enumeration
  /// tests; mirrors the fast path in update_top_down.
  std::array<std::vector<Simplex<N>>, N> enumerate(const std::array<int, 3>& hat,
                                                   const IVec<N>& new_off) const {
    return enumerate_top_down_simplexes(stencil_, grid_.spec, hat, new_off, states_);
  }

 private:
  Stencil<N> make() const {
    if constexpr (N == 2)
      return make_stencil_2d(cfg_.stencil);
    else
      return make_stencil_3d(cfg_.stencil);
  }

  const PointSourceFactor* factor_for(const std::array<double, 3>& x) const {
    const PointSourceFactor* best = nullptr;
    double best_d = kInf;
    for (const auto& f : cfg_.factors) {
      double d2 = 0;
      for (int k = 0; k < N; ++k) d2 += (x[k] - f.x0[k]) * (x[k] - f.x0[k]);
      double d = std::sqrt(d2);
      if (d < best_d) {
        best_d = d;
        best = &f;
      }
    }
    return best && best_d <= best->r_fac ? best : nullptr;
  }

  bool gather(const std::array<int, 3>& hat, const Simplex<N>& sx, int d,
              std::array<std::int64_t, N>& lins) const {
    for (int j = 0; j <= d; ++j) {
      std::array<int, 3> idx = hat;
      for (int k = 0; k < N; ++k) idx[k] += sx.verts[j][k];
      if (!grid_.spec.in_bounds(idx)) return false;
      std::int64_t lin = grid_.spec.linear(idx);
      if (states_[static_cast<std::size_t>(lin)] != NodeState::valid) return false;
      lins[j] = lin;
    }
    return true;
  }

  template <int D>
  SimplexUpdate<N> build_update(const Simplex<N>& sx,
                                const std::array<std::int64_t, N>& lins,
                                std::int64_t hat_lin) const {
    SimplexUpdate<N> su;
    su.d = sx.d;
    su.h = grid_.spec.h;
    su.theta = cfg_.rule.theta;
    su.s_hat = grid_.at(hat_lin);
    for (int j = 0; j <= sx.d; ++j) {
      su.p[j] = sx.verts[j].to_vec();
      su.u[j] = values_[static_cast<std::size_t>(lins[j])];
      su.s[j] = grid_.at(lins[j]);
    }
    return su;
  }

  struct FactorFrame {
    const PointSourceFactor* f = nullptr;
    Vec<N> p_src{};  // source image in the shifted frame
  };

  FactorFrame factor_frame(const std::array<int, 3>& hat) const {
    FactorFrame fr;
    std::array<double, 3> x_hat = grid_.spec.node_coord(hat);
    fr.f = factor_for(x_hat);
    if (fr.f)
      for (int k = 0; k < N; ++k)
        fr.p_src[k] = (fr.f->x0[k] - x_hat[k]) / grid_.spec.h;
    return fr;
  }

  std::array<double, N> tau_values(const SimplexUpdate<N>& su,
                                   const FactorFrame& fr) const {
    std::array<double, N> tau{};
    for (int j = 0; j <= su.d; ++j)
      tau[j] = su.u[j] - fr.f->s0 * grid_.spec.h * norm(su.p[j] - fr.p_src);
    return tau;
  }

  double line_value(const SimplexUpdate<N>& su, const FactorFrame& fr) const {
    double w = (1 - su.theta) * su.s_hat + su.theta * su.s[0];
    double quad = w * su.h * norm(su.p[0]);
    if (!fr.f) return su.u[0] + quad;
    double t = fr.f->s0 * grid_.spec.h * norm(su.p[0] - fr.p_src);
    return (su.u[0] - t) + t + quad;
  }

  template <int D>
  UpdateOutcome run_unfactored(const SimplexUpdate<N>& su) const {
    if (cfg_.rule.family == CostFn::f1)
      return solve_constrained<N, D>(su, CostFn::f1, simplex_centroid<N, D>(),
                                     cfg_.solve_options);
    return cfg_.rule.hybrid ? mp0_update<N, D>(su) : solve_f0_exact<N, D>(su);
  }

  double update_top_down(const std::array<int, 3>& hat, std::int64_t hat_lin,
                         const IVec<N>& new_off) {
    int oi = stencil_.offset_index(new_off);
    std::array<SmallBitset, N> removed;
    FactorFrame fr = factor_frame(hat);
    double best = kInf;
    std::array<std::int64_t, N> lins{};
    for (int d = N - 1; d >= 0; --d) {
      for (int sid : stencil_.containing[d][static_cast<std::size_t>(oi)]) {
        const Simplex<N>& sx = stencil_.simplexes[d][static_cast<std::size_t>(sid)];
        if (!gather(hat, sx, d, lins)) continue;
        if (removed[d].test(sid)) {
          ++stats_.skipped[d];
          continue;
        }
        ++stats_.attempted[d];
        SimplexUpdate<N> su = build_update<0>(sx, lins, hat_lin);
        if (d == 0) {
          best = std::min(best, line_value(su, fr));
          continue;
        }
        double cand;
        UpdateOutcome out;
        bool removable = false;
        if (d == 1)
          cand = dim_update<1>(su, fr, out, removable);
        else if constexpr (N == 3)
          cand = dim_update<2>(su, fr, out, removable);
        best = std::min(best, cand);
        if (!cfg_.visibility_skipping || fr.f) continue;
        if (removable) {
          for (const auto& sub : stencil_.subs[d][static_cast<std::size_t>(sid)])
            removed[sub.d].set(sub.id);
        } else if (out.status == UpdateStatus::ok &&
                   cfg_.rule.family == CostFn::f0) {
          unsigned mask = skip_zones(out, d);
          const auto& fc = stencil_.faces[d][static_cast<std::size_t>(sid)];
          for (int i = 0; i <= d; ++i)
            if ((mask >> i) & 1 && fc[static_cast<std::size_t>(i)] >= 0)
              removed[d - 1].set(fc[static_cast<std::size_t>(i)]);
        }
      }
    }
    return best;
  }

  /// One d-dimensional update; returns the acceptable candidate value (+inf
  /// when the minimizer is not acceptable) and reports whether every
  /// incident lower-dimensional update may be removed.
  template <int D>
  double dim_update(const SimplexUpdate<N>& su, const FactorFrame& fr,
                    UpdateOutcome& out, bool& remove_all) {
    if (fr.f) {
      out = solve_factored<N, D>(su, tau_values(su, fr), fr.p_src, fr.f->s0,
                                 cfg_.rule, cfg_.solve_options);
      return out.value;  // constrained minimum, always acceptable
    }
    out = run_unfactored<D>(su);
    if (cfg_.rule.family == CostFn::f1) {
      remove_all = true;  // constrained optimum covers the closed simplex
      return out.value;
    }
    if (out.status != UpdateStatus::ok) return kInf;
    remove_all = out.interior;
    return out.interior ? out.value : kInf;
  }

  double update_bottom_up(const std::array<int, 3>& hat, std::int64_t hat_lin,
                          const IVec<N>& new_off) {
    static_assert(N == 3 || N == 2);
    if constexpr (N == 2) {
      throw std::logic_error("bottom-up search is a 3D algorithm");
    } else {
      FactorFrame fr = factor_frame(hat);
      int i0 = stencil_.offset_index(new_off);
      std::array<std::int64_t, 3> lins{};
      Simplex<3> sx;

      sx.d = 0;
      sx.verts[0] = new_off;
      if (!gather(hat, sx, 0, lins)) return kInf;  // cannot happen: p_new valid
      ++stats_.attempted[0];
      double best = line_value(build_update<0>(sx, lins, hat_lin), fr);

      // triangle search
      double tri_rank_best = kInf;
      int best_j = -1;
      double tri_t_best = 0;
      for (int j : stencil_.tri_cand[static_cast<std::size_t>(i0)]) {
        sx.d = 1;
        sx.verts[0] = new_off;
        sx.verts[1] = stencil_.neighbors[static_cast<std::size_t>(j)];
        if (!gather(hat, sx, 1, lins)) continue;
        SimplexUpdate<3> su = build_update<1>(sx, lins, hat_lin);
        double rank, t, acceptable;
        triangle_update(su, fr, rank, t, acceptable);
        best = std::min(best, acceptable);
        if (rank < tri_rank_best) {
          tri_rank_best = rank;
          best_j = j;
          tri_t_best = t;
        }
      }
      if (best_j < 0) return best;

      // tetrahedron search around the minimizing triangle
      for (int k : stencil_.tet_cand[static_cast<std::size_t>(i0)]
                                    [static_cast<std::size_t>(best_j)]) {
        sx.d = 2;
        sx.verts[0] = new_off;
        sx.verts[1] = stencil_.neighbors[static_cast<std::size_t>(best_j)];
        sx.verts[2] = stencil_.neighbors[static_cast<std::size_t>(k)];
        if (!gather(hat, sx, 2, lins)) continue;
        SimplexUpdate<3> su = build_update<2>(sx, lins, hat_lin);
        if (cfg_.kkt_skipping && !fr.f) {
          Vec<2> lam_face;
          lam_face[0] = tri_t_best;
          lam_face[1] = 0;
          bool skip = cfg_.rule.family == CostFn::f1
                          ? kkt_skippable_cost<2>(F1Cost<3, 2>(su), lam_face)
                          : kkt_skippable_cost<2>(F0Cost<3, 2>(su), lam_face);
          if (skip) {
            ++stats_.skipped[2];
            continue;
          }
        }
        ++stats_.attempted[2];
        if (fr.f) {
          UpdateOutcome out = solve_factored<3, 2>(su, tau_values(su, fr), fr.p_src,
                                                   fr.f->s0, cfg_.rule,
                                                   cfg_.solve_options);
          best = std::min(best, out.value);
        } else {
          UpdateOutcome out = run_unfactored<2>(su);
          if (cfg_.rule.family == CostFn::f1)
            best = std::min(best, out.value);
          else if (out.status == UpdateStatus::ok && out.interior)
            best = std::min(best, out.value);
        }
      }
      return best;
    }
  }

  /// Triangle update for the search: rank is the constrained value used to
  /// pick the search direction, t the constrained minimizer, acceptable the
  /// value allowed into the running minimum.
  void triangle_update(const SimplexUpdate<3>& su, const FactorFrame& fr,
                       double& rank, double& t, double& acceptable) {
    acceptable = kInf;
    if (fr.f) {
      ++stats_.attempted[1];
      UpdateOutcome out = solve_factored<3, 1>(su, tau_values(su, fr), fr.p_src,
                                               fr.f->s0, cfg_.rule,
                                               cfg_.solve_options);
      rank = out.value;
      t = out.lam[0];
      acceptable = out.value;
      return;
    }
    if (cfg_.rule.family == CostFn::f1) {
      ++stats_.attempted[1];
      UpdateOutcome out = solve_constrained<3, 1>(su, CostFn::f1,
                                                  simplex_centroid<3, 1>(),
                                                  cfg_.solve_options);
      rank = out.value;
      t = out.lam[0];
      acceptable = out.value;
      return;
    }
    F0Cost<3, 1> cost(su);
    Vec<1> zero;
    zero[0] = 0;
    if (cfg_.kkt_skipping && kkt_skippable_cost<1>(cost, zero)) {
      ++stats_.skipped[1];
      rank = cost.value(zero);
      t = 0;
      return;
    }
    ++stats_.attempted[1];
    UpdateOutcome out = solve_f0_exact<3, 1>(su);
    if (out.status == UpdateStatus::ok && out.interior) {
      t = out.lam[0];
      if (cfg_.rule.hybrid) {
        Vec<1> lam;
        lam[0] = t;
        acceptable = eval_f1<3, 1>(su, lam);
        rank = acceptable;
      } else {
        acceptable = out.value;
        rank = out.value;
      }
      return;
    }
    // constrained minimum sits at an endpoint
    Vec<1> one;
    one[0] = 1;
    if (out.status == UpdateStatus::ok) {
      t = out.lam[0] < 0 ? 0.0 : 1.0;
    } else {
      t = cost.value(zero) <= cost.value(one) ? 0.0 : 1.0;
    }
    Vec<1> lam;
    lam[0] = t;
    rank = cost.value(lam);
  }

  const SlownessGrid& grid_;
  SolverConfig cfg_;
  Stencil<N> stencil_;
  std::vector<NodeState> states_;
  std::vector<double> values_;
  SolveStats stats_;
};

}  // namespace detail

/// Dijkstra-like driver: boundary nodes seed the trial front, the smallest
/// trial value is accepted each round, and its trial neighbors are
/// recomputed from update simplexes that contain the newly accepted node.
inline Solution solve(const SlownessGrid& grid,
                      const std::vector<BoundaryNode>& boundary,
                      const SolverConfig& cfg) {
  if (grid.spec.dim == 2) return detail::Marcher<2>(grid, cfg).run(boundary);
  return detail::Marcher<3>(grid, cfg).run(boundary);
}

}  // namespace olim
