#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "olim/grid.hpp"
#include "olim/vec.hpp"

namespace olim {

enum class StencilKind { olim4, olim8, olim6, olim18, olim26, olim3d };

inline const char* to_string(StencilKind k) {
  switch (k) {
    case StencilKind::olim4: return "olim4";
    case StencilKind::olim8: return "olim8";
    case StencilKind::olim6: return "olim6";
    case StencilKind::olim18: return "olim18";
    case StencilKind::olim26: return "olim26";
    case StencilKind::olim3d: return "olim3d";
  }
  return "?";
}

inline int stencil_dim(StencilKind k) {
  return (k == StencilKind::olim4 || k == StencilKind::olim8) ? 2 : 3;
}

/// Tetrahedron groups for one octant. Nodes 0-5 walk the octant's hexagonal
/// ring (axis and edge offsets alternating), node 6 is the octant diagonal.
enum TetGroup : unsigned {
  group_I = 1u << 0,
  group_II = 1u << 1,
  group_III = 1u << 2,
  group_IVa = 1u << 3,
  group_IVb = 1u << 4,
  group_V = 1u << 5,
  group_VIa = 1u << 6,
  group_VIb = 1u << 7,
  group_VII = 1u << 8,
};

struct UpdateGroupTable {
  /// Canonical positive-octant coordinates of nodes 0-6.
  static constexpr std::array<std::array<int, 3>, 7> node_coords{{
      {1, 0, 0},
      {1, 1, 0},
      {0, 1, 0},
      {0, 1, 1},
      {0, 0, 1},
      {1, 0, 1},
      {1, 1, 1},
  }};

  /// Vertex-index triples per group, degenerate entries included; callers
  /// filter by linear independence.
  static std::vector<std::array<int, 3>> triples(unsigned groups) {
    std::vector<std::array<int, 3>> out;
    auto add = [&out](std::initializer_list<std::array<int, 3>> ts) {
      out.insert(out.end(), ts);
    };
    if (groups & group_I)
      add({{0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {3, 4, 5}, {0, 4, 5}, {0, 1, 5}});
    if (groups & group_II)
      add({{0, 1, 3}, {1, 2, 4}, {2, 3, 5}, {0, 3, 4}, {1, 4, 5}, {0, 2, 5}});
    if (groups & group_III)
      add({{0, 1, 4}, {1, 2, 5}, {0, 2, 3}, {1, 3, 4}, {2, 4, 5}, {0, 3, 5}});
    if (groups & group_IVa) add({{0, 2, 4}});
    if (groups & group_IVb) add({{1, 3, 5}});
    if (groups & group_V)
      add({{0, 1, 6}, {1, 2, 6}, {2, 3, 6}, {3, 4, 6}, {4, 5, 6}, {0, 5, 6}});
    if (groups & group_VIa) add({{0, 2, 6}, {2, 4, 6}, {0, 4, 6}});
    if (groups & group_VIb) add({{1, 3, 6}, {3, 5, 6}, {1, 5, 6}});
    if (groups & group_VII) add({{0, 3, 6}, {1, 4, 6}, {2, 5, 6}});
    return out;
  }
};

template <int N>
struct Simplex {
  int d = 0;                      // base dimension, vertices = d + 1
  std::array<IVec<N>, N> verts{};  // sorted lexicographically
};

template <int N>
inline bool simplex_nondegenerate(const std::array<IVec<N>, N>& verts, int d) {
  // rank of [p_0 ... p_d] must be d + 1
  Mat<N, N> a;
  for (int j = 0; j <= d; ++j)
    for (int i = 0; i < N; ++i) a(i, j) = verts[j][i];
  // Gram-Schmidt rank check
  double cols[N][N];
  for (int j = 0; j <= d; ++j)
    for (int i = 0; i < N; ++i) cols[j][i] = a(i, j);
  for (int j = 0; j <= d; ++j) {
    for (int k = 0; k < j; ++k) {
      double r = 0, nk = 0;
      for (int i = 0; i < N; ++i) {
        r += cols[k][i] * cols[j][i];
        nk += cols[k][i] * cols[k][i];
      }
      for (int i = 0; i < N; ++i) cols[j][i] -= r / nk * cols[k][i];
    }
    double nj = 0;
    for (int i = 0; i < N; ++i) nj += cols[j][i] * cols[j][i];
    if (nj < 1e-20) return false;
  }
  return true;
}

/// Everything an update algorithm needs to know about a neighborhood:
/// offsets, admissible simplexes by dimension, face links for skipping, and
/// (for the search-based 3D solver) next-vertex candidate tables.
template <int N>
struct Stencil {
  StencilKind kind{};
  unsigned groups = 0;  // 3D top-down only
  std::vector<IVec<N>> neighbors;
  std::array<std::vector<Simplex<N>>, N> simplexes;  // by base dimension d

  /// faces[d][sid][i]: id (dim d-1) of the face opposite vertex i, or -1.
  std::array<std::vector<std::array<int, N + 1>>, N> faces;
  /// subs[d][sid]: all strict sub-simplexes as (dim, id) pairs.
  struct SubRef {
    int d;
    int id;
  };
  std::array<std::vector<std::vector<SubRef>>, N> subs;
  /// containing[d][offset_idx]: ids of dim-d simplexes containing the offset.
  std::array<std::vector<std::vector<int>>, N> containing;

  /// Bottom-up candidate tables (olim3d): tri_cand[i] lists offsets j forming
  /// triangle updates with offset i; tet_cand[i][j] lists third vertices.
  std::vector<std::vector<int>> tri_cand;
  std::vector<std::vector<std::vector<int>>> tet_cand;

  std::array<int, 1 << (2 * N)> offset_lut{};  // 3^N entries used

  int offset_index(const IVec<N>& o) const {
    int key = 0, pow = 1;
    for (int k = 0; k < N; ++k) {
      key += (o[k] + 1) * pow;
      pow *= 3;
    }
    return offset_lut[key];
  }

  int max_list_size() const {
    std::size_t m = 0;
    for (int d = 0; d < N; ++d) m = std::max(m, simplexes[d].size());
    return static_cast<int>(m);
  }
};

namespace detail {

template <int N>
inline void index_stencil(Stencil<N>& st) {
  // offset LUT
  st.offset_lut.fill(-1);
  for (std::size_t i = 0; i < st.neighbors.size(); ++i) {
    int key = 0, pow = 1;
    for (int k = 0; k < N; ++k) {
      key += (st.neighbors[i][k] + 1) * pow;
      pow *= 3;
    }
    st.offset_lut[key] = static_cast<int>(i);
  }

  // id lookup per dimension by sorted vertex set
  std::array<std::map<std::vector<std::array<int, N>>, int>, N> ids;
  for (int d = 0; d < N; ++d) {
    for (std::size_t sid = 0; sid < st.simplexes[d].size(); ++sid) {
      std::vector<std::array<int, N>> key;
      for (int j = 0; j <= d; ++j) key.push_back(st.simplexes[d][sid].verts[j].v);
      ids[d][key] = static_cast<int>(sid);
    }
  }

  // face links and sub-simplex closures
  for (int d = 0; d < N; ++d) {
    st.faces[d].assign(st.simplexes[d].size(), {});
    st.subs[d].assign(st.simplexes[d].size(), {});
    for (std::size_t sid = 0; sid < st.simplexes[d].size(); ++sid) {
      auto& fc = st.faces[d][sid];
      fc.fill(-1);
      if (d == 0) continue;
      const auto& sx = st.simplexes[d][sid];
      for (int omit = 0; omit <= d; ++omit) {
        std::vector<std::array<int, N>> key;
        for (int j = 0; j <= d; ++j)
          if (j != omit) key.push_back(sx.verts[j].v);
        auto it = ids[d - 1].find(key);
        if (it != ids[d - 1].end()) fc[omit] = it->second;
      }
      // strict sub-closure: faces plus their subs, deduplicated
      std::set<std::pair<int, int>> clo;
      std::vector<std::pair<int, int>> stack;
      for (int omit = 0; omit <= d; ++omit)
        if (fc[omit] >= 0) stack.push_back({d - 1, fc[omit]});
      while (!stack.empty()) {
        auto [fd, fid] = stack.back();
        stack.pop_back();
        if (!clo.insert({fd, fid}).second) continue;
        if (fd > 0)
          for (int f : st.faces[fd][fid])
            if (f >= 0) stack.push_back({fd - 1, f});
      }
      for (auto [fd, fid] : clo) st.subs[d][sid].push_back({fd, fid});
    }
  }

  // per-offset containment lists
  for (int d = 0; d < N; ++d) {
    st.containing[d].assign(st.neighbors.size(), {});
    for (std::size_t sid = 0; sid < st.simplexes[d].size(); ++sid) {
      const auto& sx = st.simplexes[d][sid];
      for (int j = 0; j <= d; ++j) {
        int oi = st.offset_index(sx.verts[j]);
        st.containing[d][oi].push_back(static_cast<int>(sid));
      }
    }
  }
}

/// Instantiate top-dimension simplexes in all 2^N octants, add their faces
/// at every lower dimension, deduplicate, and sort for determinism.
template <int N>
inline void build_from_octant(
    Stencil<N>& st, const std::vector<std::array<IVec<N>, N>>& canonical) {
  std::array<std::set<std::vector<std::array<int, N>>>, N> seen;
  for (int oct = 0; oct < (1 << N); ++oct) {
    std::array<int, N> sign;
    for (int k = 0; k < N; ++k) sign[k] = (oct >> k) & 1 ? -1 : 1;
    for (const auto& tpl : canonical) {
      std::array<IVec<N>, N> verts;
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) verts[j][k] = sign[k] * tpl[j][k];
      std::sort(verts.begin(), verts.end());
      std::vector<std::array<int, N>> key;
      for (int j = 0; j < N; ++j) key.push_back(verts[j].v);
      seen[N - 1].insert(key);
    }
  }
  // close under taking faces
  for (int d = N - 1; d >= 1; --d) {
    for (const auto& key : seen[d]) {
      for (int omit = 0; omit <= d; ++omit) {
        std::vector<std::array<int, N>> sub;
        for (int j = 0; j <= d; ++j)
          if (j != omit) sub.push_back(key[j]);
        seen[d - 1].insert(sub);
      }
    }
  }
  std::set<std::array<int, N>> nb;
  for (int d = 0; d < N; ++d) {
    for (const auto& key : seen[d]) {
      Simplex<N> sx;
      sx.d = d;
      for (int j = 0; j <= d; ++j) sx.verts[j].v = key[static_cast<std::size_t>(j)];
      if (!simplex_nondegenerate<N>(sx.verts, d))
        throw std::logic_error("degenerate simplex in stencil table");
      st.simplexes[d].push_back(sx);
      for (int j = 0; j <= d; ++j) nb.insert(key[static_cast<std::size_t>(j)]);
    }
  }
  for (const auto& o : nb) {
    IVec<N> v;
    v.v = o;
    st.neighbors.push_back(v);
  }
}

}  // namespace detail

inline Stencil<2> make_stencil_2d(StencilKind kind) {
  Stencil<2> st;
  st.kind = kind;
  std::vector<std::array<IVec<2>, 2>> canonical;
  auto iv = [](int a, int b) {
    IVec<2> v;
    v[0] = a;
    v[1] = b;
    return v;
  };
  if (kind == StencilKind::olim4) {
    canonical.push_back({iv(1, 0), iv(0, 1)});
  } else if (kind == StencilKind::olim8) {
    canonical.push_back({iv(1, 0), iv(1, 1)});
    canonical.push_back({iv(0, 1), iv(1, 1)});
  } else {
    throw std::invalid_argument("not a 2D stencil");
  }
  detail::build_from_octant(st, canonical);
  detail::index_stencil(st);
  return st;
}

/// 3D top-down stencil from an arbitrary combination of update groups.
/// Degenerate table entries are dropped.
inline Stencil<3> make_stencil_3d_groups(unsigned groups) {
  Stencil<3> st;
  st.kind = StencilKind::olim26;
  st.groups = groups;
  std::vector<std::array<IVec<3>, 3>> canonical;
  for (const auto& t : UpdateGroupTable::triples(groups)) {
    std::array<IVec<3>, 3> verts;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        verts[j][k] = UpdateGroupTable::node_coords[t[j]][k];
    if (simplex_nondegenerate<3>(verts, 2)) canonical.push_back(verts);
  }
  if (canonical.empty()) throw std::invalid_argument("no nondegenerate tetrahedra");
  detail::build_from_octant(st, canonical);
  detail::index_stencil(st);
  return st;
}

/// All offsets p with |p0 - p|_1 <= 1 (triangle search) or within l1 distance
/// 2 of both chosen vertices (tetrahedron search). Tables are derived from
/// this predicate once per stencil.
inline std::vector<IVec<3>> bottom_up_candidates(
    int d, const std::vector<IVec<3>>& chosen) {
  if (d != 1 && d != 2) throw std::invalid_argument("bottom-up search needs d in {1,2}");
  if (static_cast<int>(chosen.size()) != d)
    throw std::invalid_argument("need exactly d chosen vertices");
  std::vector<IVec<3>> out;
  IVec<3> p;
  for (p[0] = -1; p[0] <= 1; ++p[0])
    for (p[1] = -1; p[1] <= 1; ++p[1])
      for (p[2] = -1; p[2] <= 1; ++p[2]) {
        if (linf_norm(p) != 1) continue;
        bool taken = false;
        for (const auto& c : chosen) taken = taken || p == c;
        if (taken) continue;
        if (d == 1) {
          if (l1_dist(p, chosen[0]) <= 1) out.push_back(p);
        } else {
          if (l1_dist(p, chosen[0]) <= 2 && l1_dist(p, chosen[1]) <= 2)
            out.push_back(p);
        }
      }
  return out;
}

inline Stencil<3> make_stencil_3d(StencilKind kind) {
  switch (kind) {
    case StencilKind::olim6: {
      auto st = make_stencil_3d_groups(group_IVa);
      st.kind = kind;
      return st;
    }
    case StencilKind::olim18: {
      auto st = make_stencil_3d_groups(group_I | group_IVa | group_IVb);
      st.kind = kind;
      return st;
    }
    case StencilKind::olim26: {
      auto st = make_stencil_3d_groups(group_V);
      st.kind = kind;
      return st;
    }
    case StencilKind::olim3d: {
      // Search-based stencil: full 26-point neighborhood, updates discovered
      // at run time, so only the candidate tables are precomputed.
      Stencil<3> st;
      st.kind = kind;
      IVec<3> p;
      for (p[0] = -1; p[0] <= 1; ++p[0])
        for (p[1] = -1; p[1] <= 1; ++p[1])
          for (p[2] = -1; p[2] <= 1; ++p[2])
            if (linf_norm(p) == 1) st.neighbors.push_back(p);
      std::sort(st.neighbors.begin(), st.neighbors.end());
      for (std::size_t i = 0; i < st.neighbors.size(); ++i) {
        Simplex<3> sx;
        sx.d = 0;
        sx.verts[0] = st.neighbors[i];
        st.simplexes[0].push_back(sx);
      }
      detail::index_stencil(st);
      int n = static_cast<int>(st.neighbors.size());
      st.tri_cand.assign(n, {});
      st.tet_cand.assign(n, std::vector<std::vector<int>>(n));
      for (int i = 0; i < n; ++i) {
        for (const auto& c : bottom_up_candidates(1, {st.neighbors[i]}))
          st.tri_cand[i].push_back(st.offset_index(c));
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          for (const auto& c :
               bottom_up_candidates(2, {st.neighbors[i], st.neighbors[j]})) {
            std::array<IVec<3>, 3> verts{st.neighbors[i], st.neighbors[j], c};
            if (simplex_nondegenerate<3>(verts, 2))
              st.tet_cand[i][j].push_back(st.offset_index(c));
          }
        }
      }
      return st;
    }
    default:
      throw std::invalid_argument("not a 3D stencil");
  }
}

/// Admissible update simplexes around hat_idx once p_new became valid:
/// every vertex valid and in bounds, the tuple is in the stencil tables, and
/// p_new is one of the vertices. Lists are indexed by base dimension.
template <int N>
inline std::array<std::vector<Simplex<N>>, N> enumerate_top_down_simplexes(
    const Stencil<N>& st, const GridSpec& spec, const std::array<int, 3>& hat,
    const IVec<N>& new_offset, const std::vector<NodeState>& states) {
  std::array<std::vector<Simplex<N>>, N> out;
  int oi = st.offset_index(new_offset);
  if (oi < 0) return out;
  for (int d = 0; d < N; ++d) {
    for (int sid : st.containing[d][oi]) {
      const auto& sx = st.simplexes[d][sid];
      bool ok = true;
      for (int j = 0; j <= d && ok; ++j) {
        std::array<int, 3> idx{};
        for (int k = 0; k < N; ++k) idx[k] = hat[k] + sx.verts[j][k];
        ok = spec.in_bounds(idx) &&
             states[static_cast<std::size_t>(spec.linear(idx))] == NodeState::valid;
      }
      if (ok) out[d].push_back(sx);
    }
  }
  return out;
}

}  // namespace olim
