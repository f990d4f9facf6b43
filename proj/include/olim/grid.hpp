#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "olim/vec.hpp"

namespace olim {

enum class NodeState : std::uint8_t { far = 0, trial = 1, valid = 2 };

/// Uniform rectilinear grid: per-axis node counts, one spacing h, and the
/// physical coordinate of node (0, ..., 0).
struct GridSpec {
  int dim = 0;
  std::array<int, 3> shape{};     // shape[k] for k < dim
  double h = 0;
  std::array<double, 3> origin{};

  GridSpec() = default;

  GridSpec(int dim_, std::array<int, 3> shape_, double h_,
           std::array<double, 3> origin_)
      : dim(dim_), shape(shape_), h(h_), origin(origin_) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3");
    if (h <= 0) throw std::invalid_argument("grid spacing must be positive");
    for (int k = 0; k < dim; ++k)
      if (shape[k] < 2) throw std::invalid_argument("each axis needs at least 2 nodes");
  }

  /// Cube [lo, hi]^dim with n nodes per axis.
  static GridSpec cube(int dim, double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("each axis needs at least 2 nodes");
    std::array<int, 3> shp{};
    std::array<double, 3> org{};
    for (int k = 0; k < dim; ++k) {
      shp[k] = n;
      org[k] = lo;
    }
    return GridSpec(dim, shp, (hi - lo) / (n - 1), org);
  }

  std::int64_t size() const {
    std::int64_t sz = 1;
    for (int k = 0; k < dim; ++k) sz *= shape[k];
    return sz;
  }

  bool in_bounds(const std::array<int, 3>& idx) const {
    for (int k = 0; k < dim; ++k)
      if (idx[k] < 0 || idx[k] >= shape[k]) return false;
    return true;
  }

  /// Row-major linear index, last axis fastest.
  std::int64_t linear(const std::array<int, 3>& idx) const {
    std::int64_t lin = idx[0];
    for (int k = 1; k < dim; ++k) lin = lin * shape[k] + idx[k];
    return lin;
  }

  std::array<int, 3> unlinear(std::int64_t lin) const {
    std::array<int, 3> idx{};
    for (int k = dim - 1; k >= 1; --k) {
      idx[k] = static_cast<int>(lin % shape[k]);
      lin /= shape[k];
    }
    idx[0] = static_cast<int>(lin);
    return idx;
  }

  std::array<double, 3> node_coord(const std::array<int, 3>& idx) const {
    if (!in_bounds(idx)) throw std::out_of_range("node index out of bounds");
    std::array<double, 3> x{};
    for (int k = 0; k < dim; ++k) x[k] = origin[k] + h * idx[k];
    return x;
  }

  /// Nearest grid node to a physical coordinate (no bounds clamping).
  std::array<int, 3> nearest_node(const std::array<double, 3>& x) const {
    std::array<int, 3> idx{};
    for (int k = 0; k < dim; ++k)
      idx[k] = static_cast<int>(std::llround((x[k] - origin[k]) / h));
    return idx;
  }

  double coord_dist(const std::array<double, 3>& a,
                    const std::array<double, 3>& b) const {
    double r = 0;
    for (int k = 0; k < dim; ++k) r += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(r);
  }
};

/// Grid plus cached per-node slowness. Values are sampled once and never
/// re-evaluated during a solve.
struct SlownessGrid {
  GridSpec spec;
  std::vector<double> s;

  SlownessGrid() = default;

  SlownessGrid(GridSpec spec_, std::vector<double> s_)
      : spec(spec_), s(std::move(s_)) {
    if (static_cast<std::int64_t>(s.size()) != spec.size())
      throw std::invalid_argument("slowness array size does not match grid");
    for (double v : s)
      if (!(v > 0))
        throw std::invalid_argument("slowness values must be positive");
  }

  template <typename F>
  static SlownessGrid sample(const GridSpec& spec, F&& slowness_at) {
    std::vector<double> vals(static_cast<std::size_t>(spec.size()));
    std::array<int, 3> idx{};
    for (std::int64_t lin = 0; lin < spec.size(); ++lin) {
      idx = spec.unlinear(lin);
      vals[static_cast<std::size_t>(lin)] = slowness_at(spec.node_coord(idx));
    }
    return SlownessGrid(spec, std::move(vals));
  }

  double at(std::int64_t lin) const { return s[static_cast<std::size_t>(lin)]; }
};

}  // namespace olim
