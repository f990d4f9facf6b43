#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "olim/grid.hpp"
#include "olim/update.hpp"
#include "olim/vec.hpp"

namespace olim {

/// Additive factoring data for one point source: near the source the solver
/// marches the remainder tau = U - T, where T(x) = s0 * |x - x0|.
struct PointSourceFactor {
  std::array<double, 3> x0{};  // physical source coordinate
  double s0 = 1;               // slowness at the source
  double r_fac = 0;            // factoring radius in length units

  PointSourceFactor() = default;
  PointSourceFactor(std::array<double, 3> x0_, double s0_, double r_fac_)
      : x0(x0_), s0(s0_), r_fac(r_fac_) {
    if (!(s0 > 0)) throw std::invalid_argument("source slowness must be positive");
    if (r_fac < 0) throw std::invalid_argument("factoring radius must be nonnegative");
  }
};

inline bool is_factored(const std::array<double, 3>& x_node,
                        const PointSourceFactor& f, int dim) {
  double r2 = 0;
  for (int k = 0; k < dim; ++k) r2 += (x_node[k] - f.x0[k]) * (x_node[k] - f.x0[k]);
  return std::sqrt(r2) <= f.r_fac;
}

/// Factored cost: tau_lambda + T_lambda + quadrature term, where the tau_i
/// are supplied by the caller and T is evaluated exactly. The distance term
/// has a kink at the source image; there we use the zero subgradient.
template <int N, int D>
struct GCost {
  detail::BaseGeom<N, D> geom;
  Vec<D> dtau;
  double tau0;
  Vec<N> p_src;  // source position in the shifted frame
  double s_src;
  double s0, s_hat, theta, h;
  bool interp;  // f1-family quadrature term

  GCost(const SimplexUpdate<N>& u, const std::array<double, N>& tau,
        const Vec<N>& p_src_, double s_src_, CostFn family)
      : geom(detail::BaseGeom<N, D>::from(u)),
        tau0(tau[0]),
        p_src(p_src_),
        s_src(s_src_),
        s0(u.s[0]),
        s_hat(u.s_hat),
        theta(u.theta),
        h(u.h),
        interp(family == CostFn::f1) {
    for (int j = 0; j < D; ++j) dtau[j] = tau[j + 1] - tau[0];
    double svm = 0;
    for (int i = 0; i <= u.d; ++i) svm += u.s[i];
    s_avg = svm / (u.d + 1);
  }

  double s_avg = 0;

  double weight(const Vec<D>& lam) const {
    double sl = interp ? s0 + dot(geom.ds, lam) : s_avg;
    return (1 - theta) * s_hat + theta * sl;
  }

  double value(const Vec<D>& lam) const {
    Vec<N> pl = geom.point(lam);
    return tau0 + dot(dtau, lam) + s_src * h * norm(pl - p_src) +
           weight(lam) * h * norm(pl);
  }

  void eval(const Vec<D>& lam, double* val, Vec<D>* grad, Mat<D, D>* hess) const {
    Vec<N> pl = geom.point(lam);
    double l = norm(pl);
    if (l == 0) throw std::domain_error("cost singular at the update node");
    Vec<N> r = pl - p_src;
    double lr = norm(r);
    double sw = weight(lam);
    if (val) *val = tau0 + dot(dtau, lam) + s_src * h * lr + sw * h * l;
    Vec<D> dptn;
    if (grad || hess) {
      Vec<N> nu = (1.0 / l) * pl;
      dptn = matvec_t(geom.dp, nu);
    }
    if (grad) {
      *grad = dtau + sw * h * dptn;
      if (interp) *grad += theta * h * l * geom.ds;
      if (lr > 1e-14) *grad += (s_src * h / lr) * matvec_t(geom.dp, r);
    }
    if (hess) {
      *hess = (sw * h / l) * detail::projected_gram(geom.dp, pl);
      if (interp) *hess = *hess + anticommutator(dptn, theta * h * geom.ds);
      if (lr > 1e-14)
        *hess = *hess + (s_src * h / lr) * detail::projected_gram(geom.dp, r);
    }
  }
};

/// value (+ optional derivatives) of the factored cost.
template <int N, int D>
inline double eval_g(const SimplexUpdate<N>& u, const std::array<double, N>& tau,
                     const Vec<N>& p_src, double s_src, CostFn family,
                     const Vec<D>& lam, Vec<D>* grad = nullptr,
                     Mat<D, D>* hess = nullptr) {
  double val;
  GCost<N, D>(u, tau, p_src, s_src, family).eval(lam, &val, grad, hess);
  return val;
}

/// Constrained factored update. The distance term rules out a closed form,
/// so this always runs the simplex minimizer; warm starts come from the
/// unfactored exact solve. The returned value is already the full arrival
/// value at the update node.
template <int N, int D>
inline UpdateOutcome solve_factored(const SimplexUpdate<N>& u,
                                    const std::array<double, N>& tau,
                                    const Vec<N>& p_src, double s_src,
                                    QuadRule rule, SolveOptions opt = {}) {
  Vec<D> init = simplex_centroid<N, D>();
  if (rule.family == CostFn::f0 || rule.hybrid) {
    UpdateOutcome warm = solve_f0_exact<N, D>(u);
    if (warm.status == UpdateStatus::ok) {
      Vec<D> w;
      for (int i = 0; i < D; ++i) w[i] = warm.lam[i];
      init = detail::project_to_simplex(w);
    }
  }
  GCost<N, D> g0(u, tau, p_src, s_src, CostFn::f0);
  GCost<N, D> g1(u, tau, p_src, s_src, CostFn::f1);
  if (rule.family == CostFn::f1)
    return minimize_over_simplex<D>(g1, init, opt);
  UpdateOutcome out = minimize_over_simplex<D>(g0, init, opt);
  if (rule.hybrid) {
    Vec<D> lam;
    for (int i = 0; i < D; ++i) lam[i] = out.lam[i];
    out.value = g1.value(lam);
  }
  return out;
}

}  // namespace olim
