#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wlab/error.hpp"

namespace wlab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

template <class T>
using VertexField = std::vector<T>;

enum class Piece : std::uint8_t { None, U, W, V };

inline char piece_char(Piece p) {
  switch (p) {
    case Piece::U: return 'U';
    case Piece::W: return 'W';
    case Piece::V: return 'V';
    default: return '-';
  }
}

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Piece> pieces;
  // Open meshes come from graph patches and are only used for composition.
  bool closed = true;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

inline std::string edge_str(int a, int b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

inline void validate(const TriangleMesh& m, bool require_closed) {
  const int nv = m.num_vertices();
  std::vector<int> valence(nv, 0);
  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& t = m.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv)
        throw Error(ErrorKind::BadIndex, "face " + std::to_string(f) + " references vertex " +
                                             std::to_string(t[k]));
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw Error(ErrorKind::DegenerateFace, "face " + std::to_string(f) + " repeats a vertex");
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    const double twice_area = (b - a).cross(c - a).norm();
    const double longest =
        std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    if (!std::isfinite(twice_area) || !(twice_area > 1e-13 * longest))
      throw Error(ErrorKind::DegenerateFace, "face " + std::to_string(f) + " has zero area");
    for (int k = 0; k < 3; ++k) ++valence[t[k]];
  }
  for (int v = 0; v < nv; ++v)
    if (valence[v] == 0)
      throw Error(ErrorKind::BadIndex, "vertex " + std::to_string(v) + " is not used by any face");

  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(3 * m.faces.size());
  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& t = m.faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (!directed.emplace(edge_key(a, b), f).second)
        throw Error(ErrorKind::NonManifold,
                    "edge " + edge_str(a, b) + " appears twice with the same orientation");
    }
  }
  for (const auto& [key, f] : directed) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    if (require_closed && !directed.count(edge_key(b, a)))
      throw Error(ErrorKind::OpenBoundary, "edge " + edge_str(a, b) + " has a single face");
  }

  // The faces around each vertex must form one fan.
  std::vector<int> start(nv + 1, 0);
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) ++start[t[k] + 1];
  for (int v = 0; v < nv; ++v) start[v + 1] += start[v];
  std::vector<std::pair<int, int>> corner(start[nv]);
  std::vector<int> fill(start.begin(), start.end() - 1);
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) corner[fill[t[k]]++] = {t[(k + 1) % 3], t[(k + 2) % 3]};
  for (int v = 0; v < nv; ++v) {
    const int lo = start[v], hi = start[v + 1], n = hi - lo;
    std::unordered_map<int, int> next;
    std::unordered_map<int, int> prev;
    for (int i = lo; i < hi; ++i) {
      next[corner[i].first] = corner[i].second;
      prev[corner[i].second] = corner[i].first;
    }
    int first = corner[lo].first;
    // On a boundary vertex the fan starts at the ring vertex without a predecessor.
    for (int i = lo; i < hi; ++i)
      if (!prev.count(corner[i].first)) first = corner[i].first;
    int cur = first, steps = 0;
    while (steps < n) {
      auto it = next.find(cur);
      if (it == next.end()) break;
      cur = it->second;
      ++steps;
      if (cur == first) break;
    }
    if (steps != n)
      throw Error(ErrorKind::NonManifold,
                  "vertex " + std::to_string(v) + " does not have a disk neighborhood");
  }
}

}  // namespace detail

inline TriangleMesh build_mesh(std::vector<Vec3> vertices, std::vector<Face> faces) {
  TriangleMesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  m.pieces.assign(m.faces.size(), Piece::None);
  detail::validate(m, true);
  return m;
}

inline TriangleMesh build_open_mesh(std::vector<Vec3> vertices, std::vector<Face> faces) {
  TriangleMesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  m.pieces.assign(m.faces.size(), Piece::None);
  m.closed = false;
  detail::validate(m, false);
  return m;
}

inline void validate_mesh(const TriangleMesh& m) { detail::validate(m, m.closed); }

inline int edge_count(const TriangleMesh& m) {
  std::unordered_map<std::uint64_t, int> undirected;
  undirected.reserve(3 * m.faces.size());
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = std::min(t[k], t[(k + 1) % 3]);
      const int b = std::max(t[k], t[(k + 1) % 3]);
      undirected.emplace(detail::edge_key(a, b), 0);
    }
  return static_cast<int>(undirected.size());
}

inline int euler_characteristic(const TriangleMesh& m) {
  return m.num_vertices() - edge_count(m) + m.num_faces();
}

inline std::vector<std::vector<int>> vertex_neighbors(const TriangleMesh& m) {
  std::vector<std::vector<int>> nb(m.vertices.size());
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) {
      nb[t[k]].push_back(t[(k + 1) % 3]);
      nb[t[k]].push_back(t[(k + 2) % 3]);
    }
  for (auto& n : nb) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nb;
}

inline std::vector<std::vector<int>> vertex_faces(const TriangleMesh& m) {
  std::vector<std::vector<int>> vf(m.vertices.size());
  for (int f = 0; f < m.num_faces(); ++f)
    for (int k = 0; k < 3; ++k) vf[m.faces[f][k]].push_back(f);
  return vf;
}

inline int connected_components(const TriangleMesh& m) {
  const auto nb = vertex_neighbors(m);
  std::vector<int> seen(m.vertices.size(), 0);
  int count = 0;
  std::vector<int> stack;
  for (int s = 0; s < m.num_vertices(); ++s) {
    if (seen[s]) continue;
    ++count;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : nb[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
  }
  return count;
}

inline int genus_of(const TriangleMesh& m) {
  return (2 * connected_components(m) - euler_characteristic(m)) / 2;
}

// Boundary loops of an open mesh, each ordered along the boundary orientation.
inline std::vector<std::vector<int>> boundary_loops(const TriangleMesh& m) {
  std::unordered_map<std::uint64_t, int> directed;
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) directed.emplace(detail::edge_key(t[k], t[(k + 1) % 3]), 0);
  std::unordered_map<int, int> next;
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (!directed.count(detail::edge_key(b, a))) next[a] = b;
    }
  std::vector<int> starts;
  for (const auto& [a, b] : next) starts.push_back(a);
  std::sort(starts.begin(), starts.end());
  std::vector<std::vector<int>> loops;
  std::unordered_map<int, int> used;
  for (int s : starts) {
    if (used.count(s)) continue;
    std::vector<int> loop;
    int cur = s;
    do {
      loop.push_back(cur);
      used[cur] = 1;
      cur = next.at(cur);
    } while (cur != s && !used.count(cur));
    loops.push_back(std::move(loop));
  }
  return loops;
}

// Removes faces for which drop(face) is true and compacts the vertex array.
template <class Pred>
TriangleMesh remove_faces(const TriangleMesh& m, Pred drop, std::vector<int>* old_to_new = nullptr) {
  std::vector<int> remap(m.vertices.size(), -1);
  TriangleMesh out;
  out.closed = false;
  for (int f = 0; f < m.num_faces(); ++f) {
    if (drop(f)) continue;
    Face t = m.faces[f];
    for (int& v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(m.vertices[v]);
      }
      v = remap[v];
    }
    out.faces.push_back(t);
    out.pieces.push_back(m.pieces.empty() ? Piece::None : m.pieces[f]);
  }
  if (old_to_new) *old_to_new = std::move(remap);
  return out;
}

inline void flip_orientation(TriangleMesh& m) {
  for (Face& t : m.faces) std::swap(t[1], t[2]);
}

inline double mean_edge_length(const TriangleMesh& m) {
  double sum = 0.0;
  for (const Face& t : m.faces)
    for (int k = 0; k < 3; ++k) sum += (m.vertices[t[k]] - m.vertices[t[(k + 1) % 3]]).norm();
  return sum / (3.0 * m.faces.size());
}

inline double bounding_diameter(const TriangleMesh& m) {
  Vec3 lo = m.vertices.front(), hi = m.vertices.front();
  for (const Vec3& p : m.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace wlab
