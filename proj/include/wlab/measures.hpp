#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>

#include "wlab/mesh.hpp"

namespace wlab {

struct SurfaceMeasures {
  double area = 0.0;
  double volume = 0.0;
  double willmore = 0.0;
  std::optional<double> iso;  // absent when the signed volume is not positive
  int euler_char = 0;
  int genus = 0;

  double require_iso() const {
    if (!iso) throw Error(ErrorKind::NonPositiveVolume, "signed volume " + std::to_string(volume));
    return *iso;
  }
};

inline double iso_ratio(double area, double volume) { return area / std::cbrt(volume * volume); }

inline double face_area(const TriangleMesh& m, int f) {
  const Face& t = m.faces[f];
  return 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).norm();
}

inline Vec3 face_normal(const TriangleMesh& m, int f) {
  const Face& t = m.faces[f];
  return (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).normalized();
}

inline double total_area(const TriangleMesh& m) {
  double a = 0.0;
  for (int f = 0; f < m.num_faces(); ++f) a += face_area(m, f);
  return a;
}

// Signed sum of tetrahedra with apex at origin.
inline double signed_volume(const TriangleMesh& m, const Vec3& origin) {
  double v = 0.0;
  for (const Face& t : m.faces) {
    const Vec3 a = m.vertices[t[0]] - origin, b = m.vertices[t[1]] - origin, c = m.vertices[t[2]] - origin;
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

// Enclosed volume for closed meshes (apex at the vertex centroid, which is
// exact and avoids cancellation far from the origin); flux through the
// origin for open ones.
inline double signed_volume(const TriangleMesh& m) {
  if (!m.closed) return signed_volume(m, Vec3::Zero());
  Vec3 c = Vec3::Zero();
  for (const Vec3& x : m.vertices) c += x;
  return signed_volume(m, c / static_cast<double>(m.vertices.size()));
}

// Exact gradient of total area with respect to each vertex position.
inline VertexField<Vec3> area_gradient(const TriangleMesh& m) {
  VertexField<Vec3> g(m.vertices.size(), Vec3::Zero());
  for (const Face& t : m.faces) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    const Vec3 n = (b - a).cross(c - a).normalized();
    g[t[0]] += 0.5 * n.cross(c - b);
    g[t[1]] += 0.5 * n.cross(a - c);
    g[t[2]] += 0.5 * n.cross(b - a);
  }
  return g;
}

inline VertexField<Vec3> volume_gradient(const TriangleMesh& m) {
  VertexField<Vec3> g(m.vertices.size(), Vec3::Zero());
  for (const Face& t : m.faces) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    g[t[0]] += b.cross(c) / 6.0;
    g[t[1]] += c.cross(a) / 6.0;
    g[t[2]] += a.cross(b) / 6.0;
  }
  return g;
}

inline VertexField<bool> boundary_vertices(const TriangleMesh& m) {
  VertexField<bool> on(m.vertices.size(), false);
  if (m.closed) return on;
  for (const auto& loop : boundary_loops(m))
    for (int v : loop) on[v] = true;
  return on;
}

struct CurvatureData {
  VertexField<double> H;
  VertexField<double> mixed_area;
  VertexField<Vec3> normal;   // angle-weighted, unit
  VertexField<bool> interior; // false on boundary vertices of open meshes
};

inline CurvatureData curvature_data(const TriangleMesh& m) {
  const int nv = m.num_vertices();
  CurvatureData d;
  d.H.assign(nv, 0.0);
  d.mixed_area.assign(nv, 0.0);
  d.normal.assign(nv, Vec3::Zero());
  VertexField<Vec3> hn(nv, Vec3::Zero());
  for (const Face& t : m.faces) {
    const Vec3 p[3] = {m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]};
    const Vec3 cr = (p[1] - p[0]).cross(p[2] - p[0]);
    const double area = 0.5 * cr.norm();
    const Vec3 fn = cr / (2.0 * area);
    double angle[3], cot[3];
    for (int k = 0; k < 3; ++k) {
      const Vec3 u = p[(k + 1) % 3] - p[k];
      const Vec3 v = p[(k + 2) % 3] - p[k];
      const double c = u.dot(v);
      const double s = u.cross(v).norm();
      angle[k] = std::atan2(s, c);
      cot[k] = c / s;
    }
    for (int k = 0; k < 3; ++k) {
      const int i = t[k];
      // Edge to the next corner is opposite the previous one and vice versa.
      hn[i] += 0.5 * (cot[(k + 2) % 3] * (p[k] - p[(k + 1) % 3]) +
                      cot[(k + 1) % 3] * (p[k] - p[(k + 2) % 3]));
      d.normal[i] += angle[k] * fn;
    }
    const bool obtuse = angle[0] > 0.5 * std::numbers::pi || angle[1] > 0.5 * std::numbers::pi ||
                        angle[2] > 0.5 * std::numbers::pi;
    for (int k = 0; k < 3; ++k) {
      double a;
      if (!obtuse) {
        a = 0.125 * ((p[k] - p[(k + 1) % 3]).squaredNorm() * cot[(k + 2) % 3] +
                     (p[k] - p[(k + 2) % 3]).squaredNorm() * cot[(k + 1) % 3]);
      } else {
        a = angle[k] > 0.5 * std::numbers::pi ? 0.5 * area : 0.25 * area;
      }
      d.mixed_area[t[k]] += a;
    }
  }
  const VertexField<bool> bnd = boundary_vertices(m);
  d.interior.assign(nv, true);
  for (int v = 0; v < nv; ++v) {
    d.normal[v].normalize();
    d.interior[v] = !bnd[v];
    if (!d.interior[v]) continue;
    const double mag = hn[v].norm() / d.mixed_area[v];
    d.H[v] = hn[v].dot(d.normal[v]) >= 0.0 ? mag : -mag;
  }
  return d;
}

inline VertexField<double> vertex_mean_curvature(const TriangleMesh& m) { return curvature_data(m).H; }

inline VertexField<Vec3> vertex_normals(const TriangleMesh& m) { return curvature_data(m).normal; }

inline double willmore_energy(const TriangleMesh& m) {
  const CurvatureData d = curvature_data(m);
  double w = 0.0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (d.interior[v]) w += d.H[v] * d.H[v] * d.mixed_area[v];
  return 0.25 * w;
}

inline SurfaceMeasures measure(const TriangleMesh& m) {
  SurfaceMeasures s;
  s.area = total_area(m);
  s.volume = signed_volume(m);
  s.willmore = willmore_energy(m);
  if (s.volume > 0.0) s.iso = iso_ratio(s.area, s.volume);
  s.euler_char = euler_characteristic(m);
  s.genus = (2 * connected_components(m) - s.euler_char) / 2;
  return s;
}

struct SecondFundamentalForm2D {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  static SecondFundamentalForm2D from_matrix(const Mat2& a) {
    return {a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1)};
  }
  Mat2 matrix() const {
    Mat2 a;
    a << a11, a12, a12, a22;
    return a;
  }
  double trace() const { return a11 + a22; }
  SecondFundamentalForm2D trace_free() const {
    const double h = 0.5 * (a11 - a22);
    return {h, a12, -h};
  }
  double pairing(const SecondFundamentalForm2D& b) const {
    return a11 * b.a11 + 2.0 * a12 * b.a12 + a22 * b.a22;
  }
  double norm() const { return std::sqrt(pairing(*this)); }
  // Conjugation by the rotation of angle theta about the normal.
  SecondFundamentalForm2D rotated(double theta) const {
    const Eigen::Rotation2Dd r(theta);
    return from_matrix(r.toRotationMatrix() * matrix() * r.toRotationMatrix().transpose());
  }
  SecondFundamentalForm2D scaled(double s) const { return {s * a11, s * a12, s * a22}; }
};

// Columns e1, e2, n with n the outward unit normal; right handed.
inline Mat3 frame_from_normal(const Vec3& n) {
  Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = (helper - helper.dot(n) * n).normalized();
  Vec3 e2 = n.cross(e1);
  Mat3 f;
  f.col(0) = e1;
  f.col(1) = e2;
  f.col(2) = n;
  return f;
}

inline std::vector<int> k_ring(const std::vector<std::vector<int>>& nb, int v, int k) {
  std::vector<int> ring{v};
  std::unordered_map<int, int> seen{{v, 0}};
  std::size_t lo = 0;
  for (int d = 0; d < k; ++d) {
    const std::size_t hi = ring.size();
    for (std::size_t i = lo; i < hi; ++i)
      for (int w : nb[ring[i]])
        if (seen.emplace(w, d + 1).second) ring.push_back(w);
    lo = hi;
  }
  return ring;
}

struct FormFit {
  SecondFundamentalForm2D form;  // Hessian of the height toward the interior
  Mat3 frame;                    // e1, e2, outward normal
};

// Quadric least squares over the 2-ring; the frame normal is refined from the fitted slope.
inline FormFit fit_second_fundamental_form(const TriangleMesh& m, int v, const Vec3& normal,
                                           const std::vector<int>& ring) {
  if (ring.size() < 6)
    throw Error(ErrorKind::RankDeficientFit, "vertex " + std::to_string(v) + " has fewer than 6 ring points");
  double scale = 0.0;
  for (int w : ring) scale = std::max(scale, (m.vertices[w] - m.vertices[v]).norm());
  Mat3 frame = frame_from_normal(normal);
  Eigen::Matrix<double, 6, 1> coef;
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::MatrixXd A(ring.size(), 6);
    Eigen::VectorXd b(ring.size());
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec3 d = frame.transpose() * (m.vertices[ring[i]] - m.vertices[v]) / scale;
      A.row(i) << d.x() * d.x(), d.x() * d.y(), d.y() * d.y(), d.x(), d.y(), 1.0;
      b(i) = -d.z();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(5) > 1e-10 * sv(0)))
      throw Error(ErrorKind::RankDeficientFit, "vertex " + std::to_string(v) + " neighborhood is degenerate");
    coef = svd.solve(b);
    if (pass == 2) break;
    // Slope of the inward height; tilt the normal against it.
    const Vec3 n = (frame.col(2) + coef(3) * frame.col(0) + coef(4) * frame.col(1)).normalized();
    const Mat3 next = frame_from_normal(n);
    frame = next;
  }
  FormFit out;
  out.form = {2.0 * coef(0) / scale, coef(1) / scale, 2.0 * coef(2) / scale};
  out.frame = frame;
  return out;
}

inline FormFit second_fundamental_form_at(const TriangleMesh& m, int v) {
  const auto nb = vertex_neighbors(m);
  const auto normals = vertex_normals(m);
  return fit_second_fundamental_form(m, v, normals[v], k_ring(nb, v, 2));
}

inline double relative_std(const VertexField<double>& x) {
  double mean = 0.0;
  for (double a : x) mean += a;
  mean /= x.size();
  double var = 0.0;
  for (double a : x) var += (a - mean) * (a - mean);
  var /= x.size();
  return std::sqrt(var) / std::abs(mean);
}

inline bool is_round_sphere(const TriangleMesh& m, double tol = 0.05) {
  if (genus_of(m) != 0) return false;
  return relative_std(vertex_mean_curvature(m)) < tol;
}

// Intrinsic graph distance along mesh edges from a source vertex.
inline VertexField<double> edge_distance(const TriangleMesh& m, const std::vector<std::vector<int>>& nb,
                                         int source, double cutoff) {
  VertexField<double> dist(m.vertices.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v] || d > cutoff) continue;
    for (int w : nb[v]) {
      const double nd = d + (m.vertices[w] - m.vertices[v]).norm();
      if (nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    }
  }
  return dist;
}

}  // namespace wlab
