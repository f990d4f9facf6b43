#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "olim/factoring.hpp"
#include "olim/grid.hpp"
#include "olim/marcher.hpp"
#include "olim/update.hpp"

namespace olim {

enum class ProblemTag { constant, s1, s2, s3, s4, linear_speed };

inline const char* to_string(ProblemTag t) {
  switch (t) {
    case ProblemTag::constant: return "const";
    case ProblemTag::s1: return "s1";
    case ProblemTag::s2: return "s2";
    case ProblemTag::s3: return "s3";
    case ProblemTag::s4: return "s4";
    case ProblemTag::linear_speed: return "linear";
  }
  return "?";
}

/// Slowness/solution pairs with closed-form solutions, used as ground truth
/// in the convergence studies. Gridded slowness is clamped away from zero
/// (several of the radial problems have s = 0 exactly at the source).
struct AnalyticProblem {
  ProblemTag tag = ProblemTag::constant;
  int dim = 3;
  double lo = -1, hi = 1;
  std::vector<std::array<double, 3>> sources;
  // linear_speed data: 1/s(x) = 1/s_i + v . (x - x_i)
  std::array<double, 3> v{};
  std::vector<double> source_slowness;

  static constexpr double kAlpha = 0.6283185307179586;  // pi / 5
  static constexpr double kSlownessFloor = 1e-12;
  static constexpr std::array<std::array<double, 3>, 3> kMatA{{
      {1.0, 0.25, 0.125},
      {0.25, 1.0, 0.25},
      {0.125, 0.25, 1.0},
  }};

  static AnalyticProblem make(ProblemTag tag, int dim) {
    AnalyticProblem p;
    p.tag = tag;
    p.dim = dim;
    std::array<double, 3> origin{};
    if (tag == ProblemTag::linear_speed) {
      p.lo = 0;
      p.hi = 1;
      p.sources = {origin, {0.8, 0, 0}};
      p.v = {0.5, 0, 0};
      p.source_slowness = {2.0, 0.0};
      // rewrite the slowness around each additional source
      for (std::size_t i = 1; i < p.sources.size(); ++i)
        p.source_slowness[i] = p.s(p.sources[i]);
    } else {
      p.lo = -1;
      p.hi = 1;
      p.sources = {origin};
    }
    return p;
  }

  static AnalyticProblem from_name(const std::string& name, int dim) {
    for (ProblemTag t : {ProblemTag::constant, ProblemTag::s1, ProblemTag::s2,
                         ProblemTag::s3, ProblemTag::s4, ProblemTag::linear_speed})
      if (name == to_string(t)) return make(t, dim);
    throw std::invalid_argument("unknown problem: " + name);
  }

  double r(const std::array<double, 3>& x) const {
    double r2 = 0;
    for (int k = 0; k < dim; ++k) r2 += x[k] * x[k];
    return std::sqrt(r2);
  }

  std::array<double, 3> mat_a_times(const std::array<double, 3>& x) const {
    std::array<double, 3> y{};
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) y[i] += kMatA[i][j] * x[j];
    return y;
  }

  double s(const std::array<double, 3>& x) const {
    switch (tag) {
      case ProblemTag::constant: return 1;
      case ProblemTag::s1: return 1 - std::sin(r(x));
      case ProblemTag::s2: return r(x);
      case ProblemTag::s3: {
        std::array<double, 3> sv{}, cv{};
        for (int k = 0; k < dim; ++k) {
          sv[k] = std::sin(kAlpha * x[k]);
          cv[k] = std::cos(kAlpha * x[k]);
        }
        std::array<double, 3> w = mat_a_times(sv);
        double n2 = 0;
        for (int k = 0; k < dim; ++k) {
          double g = cv[k] * 2 * w[k];  // diag(C) (A + A^T) S, A symmetric
          n2 += g * g;
        }
        return kAlpha * std::sqrt(n2);
      }
      case ProblemTag::s4: {
        std::array<double, 3> w = mat_a_times(x);
        double n2 = 0;
        for (int k = 0; k < dim; ++k) n2 += w[k] * w[k];
        return std::sqrt(n2);
      }
      case ProblemTag::linear_speed: {
        double inv = 1.0 / source_slowness[0];
        for (int k = 0; k < dim; ++k) inv += v[k] * (x[k] - sources[0][k]);
        if (!(inv > 0)) throw std::domain_error("nonpositive speed in domain");
        return 1.0 / inv;
      }
    }
    return 1;
  }

  double single_source_u(const std::array<double, 3>& x, std::size_t i) const {
    switch (tag) {
      case ProblemTag::constant: {
        double d2 = 0;
        for (int k = 0; k < dim; ++k) d2 += (x[k] - sources[i][k]) * (x[k] - sources[i][k]);
        return std::sqrt(d2);
      }
      case ProblemTag::s1: {
        double rr = r(x);
        return std::cos(rr) + rr - 1;
      }
      case ProblemTag::s2: {
        double rr = r(x);
        return rr * rr / 2;
      }
      case ProblemTag::s3: {
        std::array<double, 3> sv{};
        for (int k = 0; k < dim; ++k) sv[k] = std::sin(kAlpha * x[k]);
        std::array<double, 3> w = mat_a_times(sv);
        double u = 0;
        for (int k = 0; k < dim; ++k) u += sv[k] * w[k];
        return u;
      }
      case ProblemTag::s4: {
        std::array<double, 3> w = mat_a_times(x);
        double u = 0;
        for (int k = 0; k < dim; ++k) u += x[k] * w[k];
        return u / 2;
      }
      case ProblemTag::linear_speed: {
        double vn2 = 0, d2 = 0;
        for (int k = 0; k < dim; ++k) {
          vn2 += v[k] * v[k];
          d2 += (x[k] - sources[i][k]) * (x[k] - sources[i][k]);
        }
        double vn = std::sqrt(vn2);
        double arg = 1 + source_slowness[i] / 2 * s(x) * vn2 * d2;
        return std::acosh(arg) / vn;
      }
    }
    return 0;
  }

  /// Exact first arrival: the minimum over the per-source solutions.
  double u(const std::array<double, 3>& x) const {
    double best = kInf;
    for (std::size_t i = 0; i < sources.size(); ++i)
      best = std::min(best, single_source_u(x, i));
    return best;
  }

  SlownessGrid make_grid(int n) const {
    GridSpec spec = GridSpec::cube(dim, lo, hi, n);
    return SlownessGrid::sample(spec, [this](const std::array<double, 3>& x) {
      return std::max(s(x), kSlownessFloor);
    });
  }

  /// Sources snapped to the nearest node; boundary values from the analytic
  /// solution at the snapped coordinate.
  std::vector<BoundaryNode> boundary_nodes(const GridSpec& spec) const {
    std::vector<BoundaryNode> out;
    for (const auto& src : sources) {
      auto idx = spec.nearest_node(src);
      if (!spec.in_bounds(idx)) throw std::invalid_argument("source outside domain");
      out.push_back({spec.linear(idx), u(spec.node_coord(idx))});
    }
    return out;
  }

  double default_factor_radius() const {
    return 0.1 * (hi - lo) * std::sqrt(static_cast<double>(dim));
  }

  /// One factor per source, anchored at the snapped node so the factored
  /// remainder vanishes there.
  std::vector<PointSourceFactor> factors(const SlownessGrid& grid,
                                         double r_fac) const {
    if (r_fac <= 0) r_fac = default_factor_radius();
    std::vector<PointSourceFactor> out;
    for (const auto& src : sources) {
      auto idx = grid.spec.nearest_node(src);
      auto x0 = grid.spec.node_coord(idx);
      out.emplace_back(x0, grid.at(grid.spec.linear(idx)), r_fac);
    }
    return out;
  }
};

/// max|U - u| / max|u| over the included nodes.
inline double rel_linf_error(const std::vector<double>& u_num,
                             const std::vector<double>& u_exact,
                             const std::vector<std::int64_t>& exclude = {}) {
  if (u_num.size() != u_exact.size())
    throw std::invalid_argument("fields must have the same shape");
  std::vector<bool> skip(u_num.size(), false);
  for (auto i : exclude) skip[static_cast<std::size_t>(i)] = true;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < u_num.size(); ++i) {
    if (skip[i]) continue;
    num = std::max(num, std::abs(u_num[i] - u_exact[i]));
    den = std::max(den, std::abs(u_exact[i]));
  }
  if (den == 0) throw std::domain_error("exact field is identically zero");
  return num / den;
}

struct PowerFit {
  double c = 0;
  double exponent = 0;
};

/// Least-squares fit of y ~ c * x^e in log-log space.
inline PowerFit power_fit(const std::vector<double>& xs,
                          const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::domain_error("power fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0))
      throw std::domain_error("power fit needs positive data");
    double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(xs.size());
  PowerFit f;
  f.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.c = std::exp((sy - f.exponent * sx) / n);
  return f;
}

/// Dense regular sampling of the simplex; the reference minimum for the
/// closed-form and SQP solvers.
template <int N, int D>
inline double brute_force_simplex_min(const SimplexUpdate<N>& u, QuadRule rule,
                                      double resolution) {
  if (!(resolution > 0)) throw std::invalid_argument("resolution must be positive");
  int steps = static_cast<int>(std::ceil(1.0 / resolution));
  double best = kInf;
  if (rule.family == CostFn::f0) {
    F0Cost<N, D> cost(u);
    if constexpr (D == 1) {
      for (int i = 0; i <= steps; ++i) {
        Vec<1> lam;
        lam[0] = static_cast<double>(i) / steps;
        best = std::min(best, cost.value(lam));
      }
    } else {
      for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps - i; ++j) {
          Vec<2> lam;
          lam[0] = static_cast<double>(i) / steps;
          lam[1] = static_cast<double>(j) / steps;
          best = std::min(best, cost.value(lam));
        }
    }
  } else {
    F1Cost<N, D> cost(u);
    if constexpr (D == 1) {
      for (int i = 0; i <= steps; ++i) {
        Vec<1> lam;
        lam[0] = static_cast<double>(i) / steps;
        best = std::min(best, cost.value(lam));
      }
    } else {
      for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps - i; ++j) {
          Vec<2> lam;
          lam[0] = static_cast<double>(i) / steps;
          lam[1] = static_cast<double>(j) / steps;
          best = std::min(best, cost.value(lam));
        }
    }
  }
  return best;
}

struct ConvergenceRow {
  std::string config;
  int n = 0;
  double h = 0;
  double error = 0;
  double seconds = 0;
  SolveStats stats;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::map<std::string, PowerFit> time_fits;   // seconds ~ C_T * N^alpha
  std::map<std::string, PowerFit> error_fits;  // error ~ C_E * h^beta

  void fit() {
    std::map<std::string, std::array<std::vector<double>, 3>> series;
    for (const auto& row : rows) {
      auto& s = series[row.config];
      s[0].push_back(row.n);
      s[1].push_back(row.h);
      s[2].push_back(row.error);
    }
    for (auto& [cfg, s] : series) {
      std::vector<double> secs;
      for (const auto& row : rows)
        if (row.config == cfg) secs.push_back(std::max(row.seconds, 1e-9));
      time_fits[cfg] = power_fit(s[0], secs);
      error_fits[cfg] = power_fit(s[1], s[2]);
    }
  }
};

struct StudyOptions {
  bool factored = true;
  double r_fac = 0;  // <= 0: problem default
  int jobs = 1;
};

/// One timed solve of a problem instance; the timer wraps the marching call
/// only.
inline ConvergenceRow run_problem(const AnalyticProblem& p, SolverConfig cfg,
                                  int n, const StudyOptions& opt) {
  SlownessGrid grid = p.make_grid(n);
  auto boundary = p.boundary_nodes(grid.spec);
  if (opt.factored) cfg.factors = p.factors(grid, opt.r_fac);
  auto t0 = std::chrono::steady_clock::now();
  Solution sol = solve(grid, boundary, cfg);
  auto t1 = std::chrono::steady_clock::now();

  std::vector<double> exact(sol.values.size());
  std::array<int, 3> idx{};
  for (std::int64_t lin = 0; lin < grid.spec.size(); ++lin) {
    idx = grid.spec.unlinear(lin);
    exact[static_cast<std::size_t>(lin)] = p.u(grid.spec.node_coord(idx));
  }
  std::vector<std::int64_t> exclude;
  for (const auto& [lin, val] : boundary) exclude.push_back(lin);

  ConvergenceRow row;
  row.config = cfg.name();
  row.n = n;
  row.h = grid.spec.h;
  row.error = rel_linf_error(sol.values, exact, exclude);
  row.seconds = std::chrono::duration<double>(t1 - t0).count();
  row.stats = sol.stats;
  return row;
}

/// Grid-refinement study over a list of solver configurations. Rows are
/// ordered by configuration then by N regardless of the worker count.
inline ConvergenceReport convergence_study(const AnalyticProblem& p,
                                           const std::vector<SolverConfig>& configs,
                                           const std::vector<int>& ns,
                                           StudyOptions opt = {}) {
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (int n : ns) tasks.push_back({c, n});

  ConvergenceReport report;
  report.rows.resize(tasks.size());
  int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t)
      report.rows[t] = run_problem(p, configs[tasks[t].first], tasks[t].second, opt);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) return;
        report.rows[t] = run_problem(p, configs[tasks[t].first], tasks[t].second, opt);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.fit();
  return report;
}

}  // namespace olim
