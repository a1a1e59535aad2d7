#pragma once

#include "wlab/measures.hpp"
#include "wlab/surfaces.hpp"

namespace wlab {

struct VariationSpec {
  TriangleMesh mesh;
  int p = -1;
  int q = -1;  // forbidden vertex, -1 when there is none
  double radius = 0.0;
  VertexField<double> phi;
  VertexField<double> H;
  VertexField<Vec3> normal;
  double h = 0.0;
  VertexField<Vec3> xi;
  double volume_residual = 0.0;  // |dVol| relative to sum |grad vol . xi|
};

// Quintic bump of the intrinsic distance: 1 at 0, C2 to zero at the radius.
inline double bump(double d, double radius) { return 1.0 - smoothstep5(d / radius); }

inline int select_variation_point(const TriangleMesh& m, int q = -1) {
  const VertexField<double> H = vertex_mean_curvature(m);
  const auto [lo, hi] = std::minmax_element(H.begin(), H.end());
  const double spread = *hi - *lo;
  const double scale = std::max(std::abs(*hi), std::abs(*lo));
  if (is_round_sphere(m, 0.05) || !(spread > 1e-6 * scale))
    throw Error(ErrorKind::ConstantCurvature, "mean curvature is constant to the discrete tolerance");
  const double level = *hi - 0.05 * spread;
  const auto nb = vertex_neighbors(m);
  int best = -1;
  double best_d = -1.0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (v == q || H[v] < level) continue;
    bool edge = false;
    for (int w : nb[v])
      if (H[w] < level) edge = true;
    if (!edge) continue;
    const double d = q >= 0 ? (m.vertices[v] - m.vertices[q]).norm() : H[v];
    if (d > best_d) {
      best_d = d;
      best = v;
    }
  }
  if (best < 0) throw Error(ErrorKind::ConstantCurvature, "near-maximal mean curvature set has no boundary");
  return best;
}

inline VariationSpec build_variation(const TriangleMesh& m, int p, double radius, int q = -1) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "support radius must be positive");
  VariationSpec s;
  s.mesh = m;
  s.p = p;
  s.q = q;
  s.radius = radius;
  const auto nb = vertex_neighbors(m);
  const auto dist = edge_distance(m, nb, p, radius);
  if (q >= 0 && dist[q] < radius)
    throw Error(ErrorKind::SupportTouchesForbidden,
                "support of radius " + std::to_string(radius) + " reaches vertex " + std::to_string(q));
  const CurvatureData cd = curvature_data(m);
  s.H = cd.H;
  s.normal = cd.normal;
  s.phi.assign(m.vertices.size(), 0.0);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (dist[v] < radius) s.phi[v] = bump(dist[v], radius);
  const VertexField<Vec3> gv = volume_gradient(m);
  double num = 0.0, den = 0.0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (s.phi[v] == 0.0) continue;
    const double g = gv[v].dot(s.normal[v]);
    num += s.phi[v] * s.H[v] * g;
    den += s.phi[v] * g;
  }
  s.h = num / den;
  s.xi.assign(m.vertices.size(), Vec3::Zero());
  double amp = 0.0, dvol = 0.0, dvol_abs = 0.0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (s.phi[v] == 0.0) continue;
    // Against the outward normal: the area decreases, the volume is held.
    s.xi[v] = -s.phi[v] * (s.H[v] - s.h) * s.normal[v];
    amp = std::max(amp, s.xi[v].norm());
    const double c = gv[v].dot(s.xi[v]);
    dvol += c;
    dvol_abs += std::abs(c);
  }
  if (!(amp > 0.0)) throw Error(ErrorKind::ZeroField, "phi (H - h) vanishes on the support");
  s.volume_residual = std::abs(dvol) / dvol_abs;
  return s;
}

struct VariationRates {
  double dArea = 0.0;
  double dVol = 0.0;
  double dIso = 0.0;
  double dW_bound = 0.0;
  double fd_dArea = 0.0;
  double fd_dVol = 0.0;
  double fd_dIso = 0.0;
  double volume_residual = 0.0;
  double max_relative_mismatch = 0.0;  // exact against central differences
};

inline TriangleMesh displaced(const TriangleMesh& m, const VertexField<Vec3>& xi, double t) {
  TriangleMesh out = m;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) out.vertices[v] += t * xi[v];
  return out;
}

namespace detail {

inline void check_step(const TriangleMesh& m, const TriangleMesh& moved, double t) {
  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& tr = m.faces[f];
    const Vec3 n0 = (m.vertices[tr[1]] - m.vertices[tr[0]]).cross(m.vertices[tr[2]] - m.vertices[tr[0]]);
    const Vec3 n1 =
        (moved.vertices[tr[1]] - moved.vertices[tr[0]]).cross(moved.vertices[tr[2]] - moved.vertices[tr[0]]);
    if (!(n0.dot(n1) > 0.0))
      throw Error(ErrorKind::DegenerateStep, "step " + std::to_string(t) + " flips face " + std::to_string(f));
  }
}

}  // namespace detail

// Rates d/dt at t = 0 of f + t xi. steps are in units where t * max|xi| is a length.
inline VariationRates first_variation_rates(const VariationSpec& s, const std::vector<double>& steps) {
  const TriangleMesh& m = s.mesh;
  VariationRates r;
  const VertexField<Vec3> ga = area_gradient(m), gv = volume_gradient(m);
  double dvol_abs = 0.0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    r.dArea += ga[v].dot(s.xi[v]);
    r.dVol += gv[v].dot(s.xi[v]);
    dvol_abs += std::abs(gv[v].dot(s.xi[v]));
  }
  r.volume_residual = dvol_abs > 0.0 ? std::abs(r.dVol) / dvol_abs : 0.0;
  const double A = total_area(m), V = signed_volume(m);
  const double iso = iso_ratio(A, V);
  r.dIso = iso * (r.dArea / A - (2.0 / 3.0) * r.dVol / V);
  if (steps.empty()) return r;
  for (double t : steps) {
    detail::check_step(m, displaced(m, s.xi, t), t);
    detail::check_step(m, displaced(m, s.xi, -t), -t);
  }
  const double t = *std::min_element(steps.begin(), steps.end());
  const TriangleMesh plus = displaced(m, s.xi, t), minus = displaced(m, s.xi, -t);
  r.fd_dArea = (total_area(plus) - total_area(minus)) / (2.0 * t);
  r.fd_dVol = (signed_volume(plus) - signed_volume(minus)) / (2.0 * t);
  r.fd_dIso = (iso_ratio(total_area(plus), signed_volume(plus)) - iso_ratio(total_area(minus), signed_volume(minus))) /
              (2.0 * t);
  r.dW_bound = std::abs(willmore_energy(plus) - willmore_energy(m)) / t;
  auto rel = [](double a, double b, double scale) { return std::abs(a - b) / scale; };
  r.max_relative_mismatch = std::max({rel(r.dArea, r.fd_dArea, std::abs(r.dArea) + 1e-300),
                                      rel(r.dVol, r.fd_dVol, dvol_abs + 1e-300),
                                      rel(r.dIso, r.fd_dIso, std::abs(r.dIso) + 1e-300)});
  if (r.dArea == 0.0 && r.fd_dArea == 0.0 && r.dIso == 0.0) r.max_relative_mismatch = 0.0;
  return r;
}

// Step of length 1e-5 * diameter along the largest displacement.
inline double default_step(const VariationSpec& s) {
  double amp = 0.0;
  for (const Vec3& x : s.xi) amp = std::max(amp, x.norm());
  return amp > 0.0 ? 1e-5 * bounding_diameter(s.mesh) / amp : 1e-5;
}

}  // namespace wlab
