#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "olim/vec.hpp"

namespace olim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Barycentric tolerance for classifying a minimizer as interior; grazing
/// minimizers count as interior (the value is the same by continuity).
inline constexpr double kTolDelta = 1e-12;

enum class CostFn { f0, f1 };

/// Quadrature rule: a theta-rule family plus theta. mp0 minimizes the f0
/// cost but reports the f1 cost at the minimizer (hybrid evaluation), which
/// keeps the scheme continuous across simplex boundaries.
struct QuadRule {
  CostFn family = CostFn::f0;
  double theta = 0;
  bool hybrid = false;

  static QuadRule rhr() { return {CostFn::f0, 0.0, false}; }
  static QuadRule mp0() { return {CostFn::f0, 0.5, true}; }
  static QuadRule mp1() { return {CostFn::f1, 0.5, false}; }

  const char* name() const {
    if (family == CostFn::f1) return "mp1";
    return hybrid ? "mp0" : (theta == 0 ? "rhr" : "f0");
  }
};

inline QuadRule quad_rule_from_name(const std::string& s) {
  if (s == "rhr") return QuadRule::rhr();
  if (s == "mp0") return QuadRule::mp0();
  if (s == "mp1") return QuadRule::mp1();
  throw std::invalid_argument("unknown quadrature rule: " + s);
}

/// One simplex update in shifted coordinates: the node being updated sits at
/// the origin, vertex offsets have unit sup-norm, and h scales lengths.
template <int N>
struct SimplexUpdate {
  int d = 0;
  std::array<Vec<N>, N> p{};  // vertex offsets p_0..p_d
  std::array<double, N> u{};  // upwind values
  std::array<double, N> s{};  // slowness at the vertices
  double s_hat = 1;
  double h = 1;
  double theta = 0;

  double s_vertex_mean() const {
    double m = 0;
    for (int i = 0; i <= d; ++i) m += s[i];
    return m / (d + 1);
  }
  /// Quadrature weight for the f0 family.
  double s_theta() const { return (1 - theta) * s_hat + theta * s_vertex_mean(); }
};

enum class UpdateStatus { ok, no_characteristic, iteration_cap };

struct UpdateOutcome {
  UpdateStatus status = UpdateStatus::ok;
  double value = kInf;
  std::array<double, 2> lam{};  // first d entries
  int d = 0;
  bool interior = false;
  unsigned active_mask = 0;  // constrained solves: barycentric indices at zero
  int iterations = 0;
};

namespace detail {

template <int N, int D>
struct BaseGeom {
  Vec<N> p0;
  Mat<N, D> dp;
  Vec<D> du;
  Vec<D> ds;

  static BaseGeom from(const SimplexUpdate<N>& u) {
    BaseGeom g;
    g.p0 = u.p[0];
    for (int j = 0; j < D; ++j) {
      for (int i = 0; i < N; ++i) g.dp(i, j) = u.p[j + 1][i] - u.p[0][i];
      g.du[j] = u.u[j + 1] - u.u[0];
      g.ds[j] = u.s[j + 1] - u.s[0];
    }
    return g;
  }

  Vec<N> point(const Vec<D>& lam) const { return p0 + matvec(dp, lam); }
};

/// dP^T Pperp_w dP scaled: the projector complement applied through dP.
template <int N, int D>
inline Mat<D, D> projected_gram(const Mat<N, D>& dp, const Vec<N>& w) {
  Vec<N> nu = (1.0 / norm(w)) * w;
  Vec<D> dptn = matvec_t(dp, nu);
  Mat<D, D> m;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      double g = 0;
      for (int i = 0; i < N; ++i) g += dp(i, a) * dp(i, b);
      m(a, b) = g - dptn[a] * dptn[b];
    }
  return m;
}

}  // namespace detail

/// Cost and derivatives for the f0 theta-rule: constant slowness weight over
/// the base.
template <int N, int D>
struct F0Cost {
  detail::BaseGeom<N, D> geom;
  double u0, s_w, h;

  F0Cost(const SimplexUpdate<N>& u)
      : geom(detail::BaseGeom<N, D>::from(u)), u0(u.u[0]), s_w(u.s_theta()), h(u.h) {}

  double value(const Vec<D>& lam) const {
    return u0 + dot(geom.du, lam) + s_w * h * norm(geom.point(lam));
  }
  void eval(const Vec<D>& lam, double* val, Vec<D>* grad, Mat<D, D>* hess) const {
    Vec<N> pl = geom.point(lam);
    double l = norm(pl);
    if (l == 0) throw std::domain_error("cost singular at the update node");
    if (val) *val = u0 + dot(geom.du, lam) + s_w * h * l;
    if (grad) {
      Vec<N> nu = (1.0 / l) * pl;
      *grad = geom.du + s_w * h * matvec_t(geom.dp, nu);
    }
    if (hess) *hess = (s_w * h / l) * detail::projected_gram(geom.dp, pl);
  }
};

/// Cost and derivatives for the f1 theta-rule: slowness interpolated
/// linearly over the base.
template <int N, int D>
struct F1Cost {
  detail::BaseGeom<N, D> geom;
  double u0, s0, s_hat, theta, h;

  F1Cost(const SimplexUpdate<N>& u)
      : geom(detail::BaseGeom<N, D>::from(u)),
        u0(u.u[0]),
        s0(u.s[0]),
        s_hat(u.s_hat),
        theta(u.theta),
        h(u.h) {}

  double weight(const Vec<D>& lam) const {
    return (1 - theta) * s_hat + theta * (s0 + dot(geom.ds, lam));
  }
  double value(const Vec<D>& lam) const {
    return u0 + dot(geom.du, lam) + weight(lam) * h * norm(geom.point(lam));
  }
  void eval(const Vec<D>& lam, double* val, Vec<D>* grad, Mat<D, D>* hess) const {
    Vec<N> pl = geom.point(lam);
    double l = norm(pl);
    if (l == 0) throw std::domain_error("cost singular at the update node");
    double sw = weight(lam);
    if (val) *val = u0 + dot(geom.du, lam) + sw * h * l;
    Vec<D> dptn;
    if (grad || hess) {
      Vec<N> nu = (1.0 / l) * pl;
      dptn = matvec_t(geom.dp, nu);
    }
    if (grad) *grad = geom.du + theta * h * l * geom.ds + sw * h * dptn;
    if (hess)
      *hess = anticommutator(dptn, theta * h * geom.ds) +
              (sw * h / l) * detail::projected_gram(geom.dp, pl);
  }
};

/// value (+ optional gradient/Hessian) of the f0 cost at lam.
template <int N, int D>
inline double eval_f0(const SimplexUpdate<N>& u, const Vec<D>& lam,
                      Vec<D>* grad = nullptr, Mat<D, D>* hess = nullptr) {
  double val;
  F0Cost<N, D>(u).eval(lam, &val, grad, hess);
  return val;
}

template <int N, int D>
inline double eval_f1(const SimplexUpdate<N>& u, const Vec<D>& lam,
                      Vec<D>* grad = nullptr, Mat<D, D>* hess = nullptr) {
  double val;
  F1Cost<N, D>(u).eval(lam, &val, grad, hess);
  return val;
}

inline bool lam_interior(const double* lam, int d, double tol = kTolDelta) {
  double sum = 0;
  for (int i = 0; i < d; ++i) {
    if (lam[i] < -tol) return false;
    sum += lam[i];
  }
  return sum <= 1 + tol;
}

/// Closed-form unconstrained minimizer of the f0 cost via the reduced QR
/// decomposition of dP. Exterior minimizers are reported but must not be
/// accepted; the boundary is covered by lower-dimensional updates.
template <int N, int D>
inline UpdateOutcome solve_f0_exact(const SimplexUpdate<N>& u) {
  auto geom = detail::BaseGeom<N, D>::from(u);
  UpdateOutcome out;
  out.d = D;
  double sw = u.s_theta();
  auto qr = qr_decompose(geom.dp);
  if (!qr.ok) throw std::invalid_argument("degenerate update simplex");
  Vec<D> y = (1.0 / (sw * u.h)) * geom.du;
  Vec<D> c = solve_lower_t(qr.r, y);
  double rad = 1 - norm2(c);
  if (rad <= 1e-14) {
    out.status = UpdateStatus::no_characteristic;
    return out;
  }
  Vec<D> q0 = matvec_t(qr.q, geom.p0);
  double pmin2 = norm2(geom.p0) - norm2(q0);
  double plen = std::sqrt(pmin2 / rad);
  Vec<D> lam = solve_upper(qr.r, -1.0 * (q0 + plen * c));
  Vec<N> pl = geom.point(lam);
  out.value = u.u[0] + sw * u.h * dot(geom.p0, pl) / plen;
  for (int i = 0; i < D; ++i) out.lam[i] = lam[i];
  out.interior = lam_interior(out.lam.data(), D);
  return out;
}

/// Upwind finite-difference solution on a full-dimensional simplex,
/// written around vertex i; equals the f0 minimum whenever it exists.
template <int N>
inline UpdateOutcome finite_diff_value(const SimplexUpdate<N>& u, int i = 0) {
  constexpr int D = N - 1;
  if (u.d != D) throw std::invalid_argument("finite-difference form needs a full simplex");
  auto geom = detail::BaseGeom<N, D>::from(u);
  UpdateOutcome out;
  out.d = D;
  double sw = u.s_theta();
  auto qr = qr_decompose(geom.dp);
  if (!qr.ok) throw std::invalid_argument("degenerate update simplex");
  Vec<D> w = solve_lower_t(qr.r, geom.du);
  double rad = sw * u.h * sw * u.h - norm2(w);
  if (rad < 0) {
    out.status = UpdateStatus::no_characteristic;
    return out;
  }
  Vec<N> pi = u.p[i];
  Vec<N> qw = matvec(qr.q, w);
  Vec<D> qtpi = matvec_t(qr.q, pi);
  double pmin2 = norm2(pi) - norm2(qtpi);
  out.value = u.u[i] - dot(pi, qw) + std::sqrt(pmin2) * std::sqrt(rad);
  return out;
}

/// Faces of the simplex base that a solved update proves unnecessary.
/// Bit i corresponds to the face where barycentric coordinate i vanishes; a
/// face is skippable when the minimizer does not lie beyond it.
inline unsigned skip_zones(const UpdateOutcome& out, int d) {
  double lam0 = 1;
  unsigned mask = 0;
  for (int i = 0; i < d; ++i) {
    lam0 -= out.lam[i];
    if (out.lam[i] >= 0) mask |= 1u << (i + 1);
  }
  if (lam0 >= 0) mask |= 1u;
  return mask;
}

inline int popcount(unsigned m) {
  int c = 0;
  while (m) {
    c += m & 1;
    m >>= 1;
  }
  return c;
}

namespace detail {

/// Euclidean projection onto the simplex {lam >= 0, sum(lam) <= 1}.
template <int D>
inline Vec<D> project_to_simplex(Vec<D> lam) {
  for (int i = 0; i < D; ++i) lam[i] = std::max(lam[i], 0.0);
  double sum = 0;
  for (int i = 0; i < D; ++i) sum += lam[i];
  if (sum <= 1) return lam;
  if constexpr (D == 1) {
    lam[0] = 1;
    return lam;
  } else {
    static_assert(D == 2);
    // project onto the line x + y = 1, then clamp to the segment
    double t = (lam[0] - lam[1] + 1) / 2;
    t = std::clamp(t, 0.0, 1.0);
    Vec<D> r;
    r[0] = t;
    r[1] = 1 - t;
    return r;
  }
}

/// Exact minimizer over the simplex of the local quadratic model
/// m(y) = g^T (y - lam) + (y - lam)^T H (y - lam) / 2 with H positive
/// definite; candidates are the unconstrained step, edge minimizers, and
/// vertices.
template <int D>
inline Vec<D> qp_step(const Vec<D>& lam, const Vec<D>& g, const Mat<D, D>& h) {
  auto model = [&](const Vec<D>& y) {
    Vec<D> q = y - lam;
    return dot(g, q) + 0.5 * dot(q, matvec(h, q));
  };
  Vec<D> yu;
  if (solve_spd(h, -1.0 * g, yu)) {
    yu = lam + yu;
    bool feas = true;
    double sum = 0;
    for (int i = 0; i < D; ++i) {
      feas = feas && yu[i] >= -1e-14;
      sum += yu[i];
    }
    if (feas && sum <= 1 + 1e-14) return project_to_simplex(yu);
  }
  if constexpr (D == 1) {
    Vec<D> a, b;
    a[0] = 0;
    b[0] = 1;
    return model(a) <= model(b) ? a : b;
  } else {
    static_assert(D == 2);
    // edges of the simplex: base point + t * direction, t in [0, 1]
    const double edges[3][4] = {
        {0, 0, 1, 0},  // lam2 = 0
        {0, 0, 0, 1},  // lam1 = 0
        {1, 0, -1, 1},  // lam1 + lam2 = 1
    };
    Vec<D> best{};
    double best_m = kInf;
    for (const auto& e : edges) {
      Vec<D> base, dir;
      base[0] = e[0];
      base[1] = e[1];
      dir[0] = e[2];
      dir[1] = e[3];
      double a = dot(dir, matvec(h, dir));
      double b = dot(g, dir) + dot(dir, matvec(h, base - lam));
      double t = a > 0 ? std::clamp(-b / a, 0.0, 1.0) : (b > 0 ? 0.0 : 1.0);
      Vec<D> y = base + t * dir;
      double m = model(y);
      if (m < best_m) {
        best_m = m;
        best = y;
      }
    }
    return best;
  }
}

/// Robust constrained minimization of a 1D restriction: bisection on the
/// directional derivative with endpoint comparison (handles the kink in the
/// factored cost).
template <int D, typename Cost>
inline void minimize_on_segment(const Cost& cost, const Vec<D>& base,
                                const Vec<D>& dir, double& best_val,
                                Vec<D>& best_lam) {
  auto deriv = [&](double t) {
    Vec<D> g;
    cost.eval(base + t * dir, nullptr, &g, nullptr);
    return dot(g, dir);
  };
  double lo = 0, hi = 1;
  double t = 0.5;
  double dlo = deriv(lo), dhi = deriv(hi);
  if (dlo >= 0)
    t = 0;
  else if (dhi <= 0)
    t = 1;
  else {
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
      t = 0.5 * (lo + hi);
      (deriv(t) > 0 ? hi : lo) = t;
    }
    t = 0.5 * (lo + hi);
  }
  for (double tc : {t, 0.0, 1.0}) {
    Vec<D> y = base + tc * dir;
    double v = cost.value(y);
    if (v < best_val) {
      best_val = v;
      best_lam = y;
    }
  }
}

template <int D, typename Cost>
inline void best_boundary_point(const Cost& cost, double& best_val, Vec<D>& best_lam) {
  if constexpr (D == 1) {
    for (double t : {0.0, 1.0}) {
      Vec<D> y;
      y[0] = t;
      double v = cost.value(y);
      if (v < best_val) {
        best_val = v;
        best_lam = y;
      }
    }
  } else {
    static_assert(D == 2);
    const double edges[3][4] = {{0, 0, 1, 0}, {0, 0, 0, 1}, {1, 0, -1, 1}};
    for (const auto& e : edges) {
      Vec<D> base, dir;
      base[0] = e[0];
      base[1] = e[1];
      dir[0] = e[2];
      dir[1] = e[3];
      minimize_on_segment(cost, base, dir, best_val, best_lam);
    }
  }
}

}  // namespace detail

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 20;
};

/// Constrained minimization over the simplex by sequential quadratic
/// programming with the exact Hessian. Each iteration minimizes the local
/// quadratic model over the feasible set; when the Hessian is indefinite a
/// projected-gradient step is taken instead. Hitting the iteration cap
/// returns the best of the iterate and the boundary minimizers.
template <int D, typename Cost>
inline UpdateOutcome minimize_over_simplex(const Cost& cost, Vec<D> lam,
                                           SolveOptions opt = {}) {
  UpdateOutcome out;
  out.d = D;
  lam = detail::project_to_simplex(lam);
  double val = cost.value(lam);
  int iter = 0;
  bool converged = false;
  for (; iter < opt.max_iter; ++iter) {
    Vec<D> g;
    Mat<D, D> h;
    cost.eval(lam, nullptr, &g, &h);
    Vec<D> next;
    if (smallest_eigenvalue(h) > 0) {
      next = detail::qp_step(lam, g, h);
    } else {
      double t = 1;
      next = detail::project_to_simplex(lam - t * g);
      for (int k = 0; k < 40 && cost.value(next) > val; ++k) {
        t /= 2;
        next = detail::project_to_simplex(lam - t * g);
      }
    }
    // keep the iteration monotone
    double next_val = cost.value(next);
    Vec<D> step = next - lam;
    for (int k = 0; k < 20 && next_val > val + 1e-14 * (1 + std::abs(val)); ++k) {
      step = 0.5 * step;
      next = detail::project_to_simplex(lam + step);
      next_val = cost.value(next);
    }
    double step_norm = norm(next - lam);
    lam = next;
    val = next_val;
    if (step_norm <= opt.tol * (1 + std::abs(val))) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged) {
    out.status = UpdateStatus::iteration_cap;
    Vec<D> best_lam = lam;
    double best_val = val;
    detail::best_boundary_point(cost, best_val, best_lam);
    lam = best_lam;
    val = best_val;
  }
  out.value = val;
  out.iterations = iter;
  double lam0 = 1;
  for (int i = 0; i < D; ++i) {
    out.lam[i] = lam[i];
    lam0 -= lam[i];
    if (lam[i] <= kTolDelta) out.active_mask |= 1u << (i + 1);
  }
  if (lam0 <= kTolDelta) out.active_mask |= 1u;
  out.interior = out.active_mask == 0;
  return out;
}

/// Constrained minimum of the chosen cost family over the simplex.
template <int N, int D>
inline UpdateOutcome solve_constrained(const SimplexUpdate<N>& u, CostFn family,
                                       Vec<D> lam_init, SolveOptions opt = {}) {
  if (family == CostFn::f0)
    return minimize_over_simplex<D>(F0Cost<N, D>(u), lam_init, opt);
  return minimize_over_simplex<D>(F1Cost<N, D>(u), lam_init, opt);
}

template <int N, int D>
inline Vec<D> simplex_centroid() {
  Vec<D> c;
  for (int i = 0; i < D; ++i) c[i] = 1.0 / (D + 1);
  return c;
}

/// Simplified-midpoint update: the minimizer comes from the closed-form f0
/// solve with the averaged weight, and the returned value is the f1 cost at
/// that point.
template <int N, int D>
inline UpdateOutcome mp0_update(const SimplexUpdate<N>& u) {
  UpdateOutcome out = solve_f0_exact<N, D>(u);
  if (out.status != UpdateStatus::ok) return out;
  Vec<D> lam;
  for (int i = 0; i < D; ++i) lam[i] = out.lam[i];
  out.value = eval_f1<N, D>(u, lam);
  return out;
}

/// Lagrange multipliers at a face minimizer: the update one dimension up can
/// be skipped iff the multipliers of the active constraints are nonnegative
/// and the point is stationary along the face. Active constraints are the
/// vanishing barycentric coordinates (index 0 is the sum constraint).
template <int D, typename Cost>
inline bool kkt_skippable_cost(const Cost& cost, const Vec<D>& lam_face,
                               double stat_tol = 1e-7) {
  Vec<D> g;
  cost.eval(lam_face, nullptr, &g, nullptr);
  double scale = 1;
  for (int i = 0; i < D; ++i) scale = std::max(scale, std::abs(g[i]));

  bool active[D + 1] = {};
  double lam0 = 1;
  for (int i = 0; i < D; ++i) {
    lam0 -= lam_face[i];
    active[i + 1] = lam_face[i] <= kTolDelta;
  }
  active[0] = lam0 <= kTolDelta;

  // grad F = sum_{i>=1 active} mu_i e_i - mu_0 * ones
  double mu0 = 0;
  if (active[0]) {
    // pick mu_0 from any inactive component (there the e_i columns vanish)
    bool found = false;
    for (int i = 0; i < D; ++i)
      if (!active[i + 1]) {
        mu0 = -g[i];
        found = true;
        break;
      }
    if (!found) return false;  // every constraint active: not a face point
    if (mu0 < -stat_tol * scale) return false;
  }
  for (int i = 0; i < D; ++i) {
    double resid_or_mu = g[i] + mu0;
    if (active[i + 1]) {
      if (resid_or_mu < -stat_tol * scale) return false;  // mu_i < 0
    } else {
      if (std::abs(resid_or_mu) > stat_tol * scale) return false;  // not stationary
    }
  }
  return true;
}

template <int N, int D>
inline bool kkt_skippable(const SimplexUpdate<N>& u, CostFn family,
                          const Vec<D>& lam_face, double stat_tol = 1e-7) {
  if (!lam_interior(lam_face.v.data(), D, 1e-9))
    throw std::invalid_argument("face minimizer must lie in the simplex");
  if (family == CostFn::f0)
    return kkt_skippable_cost<D>(F0Cost<N, D>(u), lam_face, stat_tol);
  return kkt_skippable_cost<D>(F1Cost<N, D>(u), lam_face, stat_tol);
}

/// Geometric update gap of a simplex: min over ordered vertex pairs i != j
/// of p_i^T p_j / |p_j|. The update is causal for the f0 family iff the gap
/// is nonnegative, and the gap times s^theta h bounds how far a new value
/// can sit above its upwind inputs.
template <int N>
inline double causal_gap(const Vec<N>* p, int count) {
  if (count == 1) return norm(p[0]);
  double gap = kInf;
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) {
      if (i == j) continue;
      gap = std::min(gap, dot(p[i], p[j]) / norm(p[j]));
    }
  return gap;
}

template <int N>
inline double causal_gap(const std::array<Vec<N>, N>& p, int count) {
  return causal_gap(p.data(), count);
}

}  // namespace olim
