#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace olim {

/// Fixed-size vector used for node offsets and barycentric coordinates.
template <int N>
struct Vec {
  std::array<double, N> v{};

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < N; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (int i = 0; i < N; ++i) v[i] *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double a, Vec b) { return b *= a; }
  friend Vec operator-(Vec a) {
    for (int i = 0; i < N; ++i) a.v[i] = -a.v[i];
    return a;
  }
};

template <int N>
inline double dot(const Vec<N>& a, const Vec<N>& b) {
  double r = 0;
  for (int i = 0; i < N; ++i) r += a.v[i] * b.v[i];
  return r;
}

template <int N>
inline double norm2(const Vec<N>& a) {
  return dot(a, a);
}

template <int N>
inline double norm(const Vec<N>& a) {
  return std::sqrt(norm2(a));
}

/// Integer lattice offset (entries in {-1, 0, 1} for stencil vertices).
template <int N>
struct IVec {
  std::array<int, N> v{};

  int& operator[](int i) { return v[i]; }
  int operator[](int i) const { return v[i]; }

  friend bool operator==(const IVec& a, const IVec& b) { return a.v == b.v; }
  friend bool operator!=(const IVec& a, const IVec& b) { return !(a == b); }
  friend bool operator<(const IVec& a, const IVec& b) { return a.v < b.v; }

  friend IVec operator-(const IVec& a) {
    IVec r;
    for (int i = 0; i < N; ++i) r.v[i] = -a.v[i];
    return r;
  }

  Vec<N> to_vec() const {
    Vec<N> r;
    for (int i = 0; i < N; ++i) r.v[i] = v[i];
    return r;
  }
};

template <int N>
inline int l1_dist(const IVec<N>& a, const IVec<N>& b) {
  int r = 0;
  for (int i = 0; i < N; ++i) r += std::abs(a.v[i] - b.v[i]);
  return r;
}

template <int N>
inline int linf_norm(const IVec<N>& a) {
  int r = 0;
  for (int i = 0; i < N; ++i) r = std::max(r, std::abs(a.v[i]));
  return r;
}

/// Dense row-major R x C matrix, sized for update simplexes (R,C <= 3).
template <int R, int C>
struct Mat {
  std::array<double, R * C> m{};

  double& operator()(int r, int c) { return m[r * C + c]; }
  double operator()(int r, int c) const { return m[r * C + c]; }

  Vec<R> col(int c) const {
    Vec<R> r;
    for (int i = 0; i < R; ++i) r[i] = (*this)(i, c);
    return r;
  }

  friend Mat operator+(Mat a, const Mat& b) {
    for (int i = 0; i < R * C; ++i) a.m[i] += b.m[i];
    return a;
  }
  friend Mat operator*(double a, Mat b) {
    for (int i = 0; i < R * C; ++i) b.m[i] *= a;
    return b;
  }
};

template <int R, int C>
inline Vec<R> matvec(const Mat<R, C>& a, const Vec<C>& x) {
  Vec<R> r;
  for (int i = 0; i < R; ++i) {
    double acc = 0;
    for (int j = 0; j < C; ++j) acc += a(i, j) * x[j];
    r[i] = acc;
  }
  return r;
}

template <int R, int C>
inline Vec<C> matvec_t(const Mat<R, C>& a, const Vec<R>& x) {
  Vec<C> r;
  for (int j = 0; j < C; ++j) {
    double acc = 0;
    for (int i = 0; i < R; ++i) acc += a(i, j) * x[i];
    r[j] = acc;
  }
  return r;
}

/// a b^T + b a^T
template <int N>
inline Mat<N, N> anticommutator(const Vec<N>& a, const Vec<N>& b) {
  Mat<N, N> r;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) r(i, j) = a[i] * b[j] + b[i] * a[j];
  return r;
}

/// Reduced QR of a tall N x D matrix by modified Gram-Schmidt.
template <int N, int D>
struct QR {
  Mat<N, D> q;
  Mat<D, D> r;
  bool ok = false;
};

template <int N, int D>
inline QR<N, D> qr_decompose(const Mat<N, D>& a, double tol = 1e-12) {
  static_assert(D <= N);
  QR<N, D> out;
  Mat<N, D> w = a;
  for (int j = 0; j < D; ++j) {
    Vec<N> wj = w.col(j);
    double nj = norm(wj);
    if (nj <= tol) return out;  // rank deficient
    out.r(j, j) = nj;
    for (int i = 0; i < N; ++i) out.q(i, j) = wj[i] / nj;
    for (int k = j + 1; k < D; ++k) {
      Vec<N> wk = w.col(k);
      Vec<N> qc = out.q.col(j);
      double rjk = dot(qc, wk);
      out.r(j, k) = rjk;
      for (int i = 0; i < N; ++i) w(i, k) -= rjk * qc[i];
    }
  }
  out.ok = true;
  return out;
}

/// Solve R^T x = y (forward substitution, R upper triangular).
template <int D>
inline Vec<D> solve_lower_t(const Mat<D, D>& r, const Vec<D>& y) {
  Vec<D> x;
  for (int i = 0; i < D; ++i) {
    double acc = y[i];
    for (int j = 0; j < i; ++j) acc -= r(j, i) * x[j];
    x[i] = acc / r(i, i);
  }
  return x;
}

/// Solve R x = y (back substitution).
template <int D>
inline Vec<D> solve_upper(const Mat<D, D>& r, const Vec<D>& y) {
  Vec<D> x;
  for (int i = D - 1; i >= 0; --i) {
    double acc = y[i];
    for (int j = i + 1; j < D; ++j) acc -= r(i, j) * x[j];
    x[i] = acc / r(i, i);
  }
  return x;
}

/// Solve a small symmetric system H x = y. Returns false if H is not
/// positive definite (used as the convexity check in the optimizer).
template <int D>
inline bool solve_spd(const Mat<D, D>& h, const Vec<D>& y, Vec<D>& x) {
  if constexpr (D == 1) {
    if (h(0, 0) <= 0) return false;
    x[0] = y[0] / h(0, 0);
    return true;
  } else {
    static_assert(D == 2);
    double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    if (h(0, 0) <= 0 || det <= 0) return false;
    x[0] = (h(1, 1) * y[0] - h(0, 1) * y[1]) / det;
    x[1] = (h(0, 0) * y[1] - h(1, 0) * y[0]) / det;
    return true;
  }
}

template <int D>
inline double smallest_eigenvalue(const Mat<D, D>& h) {
  if constexpr (D == 1) {
    return h(0, 0);
  } else {
    static_assert(D == 2);
    double tr = h(0, 0) + h(1, 1);
    double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    return tr / 2 - disc;
  }
}

}  // namespace olim
