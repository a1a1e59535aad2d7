#pragma once

#include <sstream>

#include "wlab/biharmonic.hpp"
#include "wlab/surfaces.hpp"

namespace wlab {

inline Vec3 invert_point(const Vec3& x, const Vec3& a) {
  const Vec3 d = x - a;
  return d / d.squaredNorm();
}

// x -> (x - a)/|x - a|^2 on every vertex. Closed results are oriented outward.
inline TriangleMesh invert(const TriangleMesh& m, const Vec3& a) {
  const double tol = 1e-9 * bounding_diameter(m);
  double dmin = std::numeric_limits<double>::infinity();
  for (const Vec3& x : m.vertices) dmin = std::min(dmin, (x - a).norm());
  if (!(dmin > tol))
    throw Error(ErrorKind::CenterOnSurface, "inversion center within " + std::to_string(dmin) + " of a vertex");
  TriangleMesh out = m;
  for (Vec3& x : out.vertices) x = invert_point(x, a);
  flip_orientation(out);
  if (out.closed && signed_volume(out) < 0.0) flip_orientation(out);
  return out;
}

inline constexpr double kUmbilicRatio = 0.05;

// Hessian D^2u of the graph x3 = u(x1, x2) through a vertex sitting at the origin.
inline SecondFundamentalForm2D graph_form(const FormFit& fit) {
  Mat2 E;
  E << fit.frame(0, 0), fit.frame(0, 1), fit.frame(1, 0), fit.frame(1, 1);
  const double s = -fit.frame.col(2).z();
  return SecondFundamentalForm2D::from_matrix(s * E * fit.form.matrix() * E.transpose());
}

inline void require_normalized(const TriangleMesh& m, int p, const FormFit& fit) {
  const double diam = bounding_diameter(m);
  if (m.vertices[p].norm() > 1e-9 * diam || std::abs(std::abs(fit.frame.col(2).z()) - 1.0) > 1e-6)
    throw Error(ErrorKind::NotNormalized,
                "vertex " + std::to_string(p) + " is not at the origin with a horizontal tangent plane");
}

inline void require_nonumbilic(const SecondFundamentalForm2D& P, int p) {
  if (!(P.trace_free().norm() > kUmbilicRatio * P.norm()))
    throw Error(ErrorKind::UmbilicPoint, "vertex " + std::to_string(p) + " has |P°| = " +
                                             std::to_string(P.trace_free().norm()) + " against |P| = " +
                                             std::to_string(P.norm()));
}

// u°(rho, theta) = sum_{n <= 4} (a_n + b_n / rho + c_n / rho^2) (cos n theta, sin n theta).
struct FittedEnd {
  static constexpr int kModes = 4;
  std::vector<std::array<double, 3>> cos_coef;  // n = 0..4
  std::vector<std::array<double, 3>> sin_coef;  // n = 0..4, n = 0 unused

  static int parameter_count() { return 3 * (2 * kModes + 1); }

  Jet2 operator()(double x, double y) const {
    const double rho = std::hypot(x, y), th = std::atan2(y, x);
    double w = 0, wr = 0, wt = 0, wrr = 0, wrt = 0, wtt = 0;
    const double i1 = 1.0 / rho, i2 = i1 * i1, i3 = i2 * i1, i4 = i2 * i2;
    for (int n = 0; n <= kModes; ++n)
      for (int part = 0; part < 2; ++part) {
        if (part == 1 && n == 0) continue;
        const auto& c = part == 0 ? cos_coef[n] : sin_coef[n];
        const double f = c[0] + c[1] * i1 + c[2] * i2;
        const double fr = -c[1] * i2 - 2.0 * c[2] * i3;
        const double frr = 2.0 * c[1] * i3 + 6.0 * c[2] * i4;
        const double a = part == 0 ? std::cos(n * th) : std::sin(n * th);
        const double da = part == 0 ? -n * std::sin(n * th) : n * std::cos(n * th);
        w += f * a;
        wr += fr * a;
        wrr += frr * a;
        wt += f * da;
        wrt += fr * da;
        wtt -= n * n * f * a;
      }
    return polar_to_cartesian(rho, th, w, wr, wt, wrr, wrt, wtt);
  }
};

inline FittedEnd fit_end(const std::vector<Vec3>& pts) {
  const int k = FittedEnd::parameter_count();
  if (static_cast<int>(pts.size()) < 2 * k)
    throw Error(ErrorKind::RankDeficientFit, "too few points to fit the graph at infinity");
  Eigen::MatrixXd A(pts.size(), k);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double rho = std::hypot(pts[i].x(), pts[i].y()), th = std::atan2(pts[i].y(), pts[i].x());
    int c = 0;
    for (int n = 0; n <= FittedEnd::kModes; ++n)
      for (int part = 0; part < 2; ++part) {
        if (part == 1 && n == 0) continue;
        const double a = part == 0 ? std::cos(n * th) : std::sin(n * th);
        A(i, c++) = a;
        A(i, c++) = a / rho;
        A(i, c++) = a / (rho * rho);
      }
    b(i) = pts[i].z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (!(svd.singularValues()(k - 1) > 1e-12 * svd.singularValues()(0)))
    throw Error(ErrorKind::RankDeficientFit, "graph at infinity fit is degenerate");
  const Eigen::VectorXd x = svd.solve(b);
  FittedEnd e;
  e.cos_coef.assign(FittedEnd::kModes + 1, {0, 0, 0});
  e.sin_coef.assign(FittedEnd::kModes + 1, {0, 0, 0});
  int c = 0;
  for (int n = 0; n <= FittedEnd::kModes; ++n)
    for (int part = 0; part < 2; ++part) {
      if (part == 1 && n == 0) continue;
      auto& dst = part == 0 ? e.cos_coef[n] : e.sin_coef[n];
      for (int j = 0; j < 3; ++j) dst[j] = x(c++);
    }
  return e;
}

struct InvertedSurface {
  TriangleMesh mesh;  // open: the neighborhood of p is excised before inverting
  Vec3 center = Vec3::Zero();
  SecondFundamentalForm2D P;
  double lift = 0.0;  // tr P / 4, subtracted along e3
  bool lifted = true;
  FittedEnd end;      // u° outside radius
  double radius = 0.0;
  double loop_radius = 0.0;
  double decay_constant = 0.0;  // sup of |z||phi°| + |z|^2 |D phi°| over [radius, loop_radius]

  Jet2 p_circ(double x, double y) const;
};

// p°(z) = P°(z/|z|, z/|z|)/2
inline Jet2 p_circ(const SecondFundamentalForm2D& P, double x, double y) {
  const auto Pc = P.trace_free();
  const Jet2 X = Jet2::variable(x, 0), Y = Jet2::variable(y, 1);
  const Jet2 num = 0.5 * (Pc.a11 * X * X + 2.0 * Pc.a12 * X * Y + Pc.a22 * Y * Y);
  return num / (X * X + Y * Y);
}

inline Jet2 InvertedSurface::p_circ(double x, double y) const { return wlab::p_circ(P, x, y); }

// Removes the faces around p that touch vertices closer than `ring` edges.
inline TriangleMesh excise_ring(const TriangleMesh& m, int p, int ring) {
  const auto nb = vertex_neighbors(m);
  const auto near = k_ring(nb, p, ring - 1);
  std::vector<char> drop_v(m.vertices.size(), 0);
  for (int v : near) drop_v[v] = 1;
  return remove_faces(m, [&](int f) {
    for (int v : m.faces[f])
      if (drop_v[v]) return true;
    return false;
  });
}

inline InvertedSurface normalized_inversion(const TriangleMesh& m, int p) {
  const auto nb = vertex_neighbors(m);
  const FormFit fit = fit_second_fundamental_form(m, p, vertex_normals(m)[p], k_ring(nb, p, 2));
  require_normalized(m, p, fit);
  InvertedSurface s;
  s.P = graph_form(fit);
  require_nonumbilic(s.P, p);
  s.lift = 0.25 * s.P.trace();

  TriangleMesh cut = excise_ring(m, p, 2);
  for (Vec3& x : cut.vertices) x = invert_point(x, Vec3::Zero()) - s.lift * Vec3::UnitZ();
  flip_orientation(cut);
  const auto loops = boundary_loops(cut);
  if (loops.size() != 1) throw Error(ErrorKind::OriginNotUnique, "excision around p did not open a single hole");
  s.loop_radius = std::numeric_limits<double>::infinity();
  for (int v : loops[0]) s.loop_radius = std::min(s.loop_radius, std::hypot(cut.vertices[v].x(), cut.vertices[v].y()));
  s.radius = s.loop_radius / 3.0;

  std::vector<Vec3> pts;
  for (const Vec3& y : cut.vertices) {
    const double rho = std::hypot(y.x(), y.y());
    if (rho >= s.radius && rho <= s.loop_radius) pts.push_back(y);
  }
  s.end = fit_end(pts);
  for (int i = 0; i <= 16; ++i) {
    const double rho = s.radius * std::pow(3.0, i / 16.0);
    for (int j = 0; j < 64; ++j) {
      const double th = 2.0 * kPi * j / 64;
      const double x = rho * std::cos(th), y = rho * std::sin(th);
      const Jet2 phi = s.end(x, y) - s.p_circ(x, y);
      s.decay_constant = std::max(s.decay_constant, rho * std::abs(phi.v) + rho * rho * phi.g.norm());
    }
  }
  s.mesh = std::move(cut);
  return s;
}

struct IsoSample {
  double distance;
  double iso;
};

struct IsoMatch {
  Vec3 center;
  TriangleMesh mesh;
  double iso;
  int vertex;
  std::vector<IsoSample> samples;
};

namespace detail {

inline bool ray_hits_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = o - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  return e2.dot(qv) * inv > 0.0;
}

inline bool ray_is_free(const TriangleMesh& m, int v, const Vec3& dir) {
  for (const Face& t : m.faces) {
    if (t[0] == v || t[1] == v || t[2] == v) continue;
    if (ray_hits_triangle(m.vertices[v], dir, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]])) return false;
  }
  return true;
}

}  // namespace detail

// Walks the inversion center in from infinity along an outward normal ray until iso crosses sigma.
inline IsoMatch match_iso_by_inversion(const TriangleMesh& m, double sigma) {
  const double iso_sphere = std::cbrt(36.0 * kPi);
  const double iso_m = measure(m).require_iso();
  if (!(sigma > iso_sphere) || sigma > iso_m * (1.0 + 1e-3))
    throw Error(ErrorKind::TargetOutOfRange, "target " + std::to_string(sigma) + " outside (" +
                                                 std::to_string(iso_sphere) + ", " + std::to_string(iso_m) + "]");
  const CurvatureData cd = curvature_data(m);
  std::vector<int> order;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (cd.H[v] > 0.0) order.push_back(v);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cd.H[a] > cd.H[b]; });
  int vertex = -1;
  for (int v : order)
    if (detail::ray_is_free(m, v, cd.normal[v])) {
      vertex = v;
      break;
    }
  if (vertex < 0) throw Error(ErrorKind::NoBracket, "no vertex with an unobstructed outward ray");

  const double diam = bounding_diameter(m);
  const Vec3 x0 = m.vertices[vertex], n = cd.normal[vertex];
  auto iso_at = [&](double t) { return measure(invert(m, x0 + t * n)).require_iso(); };
  IsoMatch out;
  out.vertex = vertex;
  const int samples = 49;
  for (int k = 0; k < samples; ++k) {
    const double t = diam * std::pow(10.0, 3.0 - 6.0 * k / (samples - 1));
    out.samples.push_back({t, iso_at(t)});
  }
  auto finish = [&](double t) {
    out.center = x0 + t * n;
    out.mesh = invert(m, out.center);
    out.iso = measure(out.mesh).require_iso();
    return out;
  };
  const double tol = 1e-3 * sigma;
  if (std::abs(out.samples[0].iso - sigma) <= tol) return finish(out.samples[0].distance);
  const double s0 = out.samples[0].iso - sigma;
  for (int k = 1; k < samples; ++k) {
    if ((out.samples[k].iso - sigma) * s0 > 0.0) continue;
    double lo = std::log(out.samples[k - 1].distance), hi = std::log(out.samples[k].distance);
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double d = iso_at(std::exp(mid)) - sigma;
      if (std::abs(d) <= 0.1 * tol) return finish(std::exp(mid));
      (d * s0 > 0.0 ? lo : hi) = mid;
    }
    return finish(std::exp(0.5 * (lo + hi)));
  }
  std::ostringstream msg;
  msg << "iso never crossed " << sigma << " along the ray from vertex " << vertex << "; samples (t, iso):";
  for (const auto& s : out.samples) msg << " (" << s.distance << ", " << s.iso << ")";
  throw Error(ErrorKind::NoBracket, msg.str());
}

}  // namespace wlab
