#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <future>
#include <map>
#include <sstream>

#include "wlab/mobius.hpp"
#include "wlab/variation.hpp"

namespace wlab {

namespace detail {

// Half the shortest edge at p: closer vertices make the normalization ambiguous.
inline double origin_tolerance(const TriangleMesh& m, int p) {
  double e = std::numeric_limits<double>::infinity();
  const auto nb = vertex_neighbors(m);
  for (int w : nb[p]) e = std::min(e, (m.vertices[w] - m.vertices[p]).norm());
  return 0.5 * e;
}

}  // namespace detail

struct NormalizedSurface {
  TriangleMesh mesh;
  SecondFundamentalForm2D form;  // D^2u of the local graph x3 = u(x1, x2)
  Similarity motion;             // normalized = motion.to_normalized(original)
  int vertex = -1;
};

// Rigid motion taking vertex p to the origin with outward normal sign * e3.
inline NormalizedSurface normalize_at_point(const TriangleMesh& m, int p, int sign = -1) {
  if (p < 0 || p >= m.num_vertices()) throw Error(ErrorKind::BadIndex, "vertex " + std::to_string(p));
  const auto nb = vertex_neighbors(m);
  const FormFit fit = fit_second_fundamental_form(m, p, vertex_normals(m)[p], k_ring(nb, p, 2));
  const Vec3 e1 = fit.frame.col(0), e2 = fit.frame.col(1), n = fit.frame.col(2);
  Mat3 M;
  if (sign < 0)
    M << e1.transpose(), -e2.transpose(), -n.transpose();
  else
    M << e1.transpose(), e2.transpose(), n.transpose();
  NormalizedSurface out;
  out.vertex = p;
  out.motion.origin = m.vertices[p];
  out.motion.rot = M.transpose();
  out.mesh = m;
  for (Vec3& x : out.mesh.vertices) x = out.motion.to_normalized(x);
  out.mesh.vertices[p] = Vec3::Zero();
  const double tol = detail::origin_tolerance(m, p);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (v != p && out.mesh.vertices[v].norm() < tol)
      throw Error(ErrorKind::OriginNotUnique, "vertex " + std::to_string(v) + " also lies near the origin");
  // Quadric fit in the new frame: inward height is sign-adjusted x3.
  const Mat2 D = sign < 0 ? Vec2(1.0, -1.0).asDiagonal().toDenseMatrix() : Mat2::Identity();
  const double s = sign < 0 ? 1.0 : -1.0;
  out.form = SecondFundamentalForm2D::from_matrix(s * D * fit.form.matrix() * D);
  require_nonumbilic(out.form, p);
  return out;
}

// Rotation angle about e3 maximizing <P°, Q°(theta)>, Q°(theta) = R Q° R^T.
inline double align_orientation(const SecondFundamentalForm2D& P, const SecondFundamentalForm2D& Q) {
  const auto Pc = P.trace_free(), Qc = Q.trace_free();
  const double A = Pc.pairing(Qc);
  const double B = Pc.pairing(Qc.rotated(kPi / 4.0));
  if (std::hypot(A, B) <= 1e-14 * (Pc.norm() * Qc.norm() + 1e-300))
    throw Error(ErrorKind::DegeneratePair, "trace-free parts are orthogonal in every rotation");
  return 0.5 * std::atan2(B, A);
}

// omega_g = min over partitions g = g_1 + ... + g_k with 1 <= g_i < g of 4 pi + sum (beta_{g_i} - 4 pi).
inline double omega_g(int g, const std::map<int, double>& beta) {
  if (g < 1) throw Error(ErrorKind::InvalidArgument, "genus must be positive");
  if (g == 1) return std::numeric_limits<double>::infinity();
  for (int k = 1; k < g; ++k)
    if (!beta.count(k)) throw Error(ErrorKind::MissingBeta, "no beta for genus " + std::to_string(k));
  // best[n]: minimum of sum (beta_{g_i} - 4 pi) over partitions of n into parts < g
  std::vector<double> best(g + 1, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (int n = 1; n <= g; ++n)
    for (int part = 1; part < g && part <= n; ++part)
      best[n] = std::min(best[n], best[n - part] + beta.at(part) - 4.0 * kPi);
  return 4.0 * kPi + best[g];
}

// ---------------------------------------------------------------------------
// Connected sum

struct GluingParams {
  double alpha = 0.02;
  double t = 0.0;  // 0 selects 2 |P°|^2 / <P°, Q°>
  double gamma = 0.1;
  double m = 2.25;
  double kappa = 0.01;       // |P°| of f1 after rescaling
  double hole_edges = 3.0;   // radius of the disks cut at p1, p2 in mean edge lengths
  int n_theta = 64;          // angular resolution of the polar grid
  int quad_r = 32;           // Gauss-Legendre nodes per radial interval
  int quad_theta = 64;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in (0, 1)");
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be positive (or 0 for the design rule)");
    if (!(m > 2.0 && m < 2.5)) throw Error(ErrorKind::InvalidArgument, "m must lie in (2, 2.5)");
    if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
    if (!(hole_edges >= 1.0)) throw Error(ErrorKind::InvalidArgument, "hole must span at least one edge");
    if (n_theta < 8 || quad_r < 4 || quad_theta < 8)
      throw Error(ErrorKind::InvalidArgument, "grid and quadrature orders are too small");
  }
};

// A surface moved to its gluing point, with an exact local chart in the same coordinates.
struct GluingSide {
  NormalizedSurface norm;
  GraphChart chart;
};

namespace detail {

inline Mat3 rotation_z(double th) {
  Mat3 r = Mat3::Identity();
  r(0, 0) = r(1, 1) = std::cos(th);
  r(1, 0) = std::sin(th);
  r(0, 1) = -r(1, 0);
  return r;
}

// z = sum c_ij x^i y^j over 2 <= i + j <= 4, least squares over the patch around the origin.
inline std::shared_ptr<const ImplicitShape> fit_polynomial_chart(const TriangleMesh& local, int p) {
  const double radius = 6.0 * mean_edge_length(local);
  const auto dist = edge_distance(local, vertex_neighbors(local), p, radius);
  std::vector<Vec3> pts;
  for (int v = 0; v < local.num_vertices(); ++v)
    if (dist[v] <= radius) pts.push_back(local.vertices[v]);
  const int deg = 4;
  std::vector<std::pair<int, int>> mono;
  for (int d = 2; d <= deg; ++d)
    for (int i = d; i >= 0; --i) mono.emplace_back(i, d - i);
  if (pts.size() < 2 * mono.size())
    throw Error(ErrorKind::RankDeficientFit, "too few vertices around the gluing point for a local chart");
  Eigen::MatrixXd A(pts.size(), mono.size());
  Eigen::VectorXd b(pts.size());
  for (std::size_t r = 0; r < pts.size(); ++r) {
    const double x = pts[r].x() / radius, y = pts[r].y() / radius;
    for (std::size_t c = 0; c < mono.size(); ++c) A(r, c) = std::pow(x, mono[c].first) * std::pow(y, mono[c].second);
    b(r) = pts[r].z();
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  std::vector<double> coef(PolynomialGraphShape::coefficient_count(deg), 0.0);
  for (std::size_t k = 0; k < mono.size(); ++k)
    coef[3 + k] = c(k) / std::pow(radius, mono[k].first + mono[k].second);
  return std::make_shared<PolynomialGraphShape>(deg, std::move(coef));
}

}  // namespace detail

// Normalizes s at p (outward normal -e3), then rotates by theta about e3 and enlarges by scale.
// The frame comes from the implicit shape when there is one, else from the mesh.
inline GluingSide prepare_side(const Surface& s, int p, double scale = 1.0, double theta = 0.0) {
  const TriangleMesh& m = s.mesh;
  if (p < 0 || p >= m.num_vertices()) throw Error(ErrorKind::BadIndex, "vertex " + std::to_string(p));
  const Mat3 frame = s.shape ? frame_from_normal(s.shape->gradient(m.vertices[p]).normalized())
                             : second_fundamental_form_at(m, p).frame;
  Mat3 M;
  M << frame.col(0).transpose(), -frame.col(1).transpose(), -frame.col(2).transpose();
  const Mat3 R = detail::rotation_z(theta);
  GluingSide side;
  NormalizedSurface& n = side.norm;
  n.vertex = p;
  n.motion = {m.vertices[p], (R * M).transpose(), scale};
  n.mesh = m;
  for (Vec3& x : n.mesh.vertices) x = n.motion.to_normalized(x);
  n.mesh.vertices[p] = Vec3::Zero();
  const double tol = detail::origin_tolerance(n.mesh, p);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (v != p && n.mesh.vertices[v].norm() < tol)
      throw Error(ErrorKind::OriginNotUnique, "vertex " + std::to_string(v) + " also lies near the origin");
  if (s.shape) {
    side.chart = {s.shape, n.motion};
  } else {
    TriangleMesh local = m;
    const Similarity unrotated{m.vertices[p], M.transpose(), 1.0};
    for (Vec3& x : local.vertices) x = unrotated.to_normalized(x);
    local.vertices[p] = Vec3::Zero();
    side.chart = {detail::fit_polynomial_chart(local, p), Similarity{Vec3::Zero(), R.transpose(), scale}};
  }
  n.form = SecondFundamentalForm2D::from_matrix(side.chart.height(0.0, 0.0, 0.0).h);
  require_nonumbilic(n.form, p);
  return side;
}

// |P°| at every vertex, from the shape when known; ties go to the lowest index.
inline int choose_gluing_vertex(const Surface& s) {
  const TriangleMesh& m = s.mesh;
  std::vector<double> score(m.vertices.size(), 0.0);
  if (s.shape) {
    for (int v = 0; v < m.num_vertices(); ++v) {
      const Vec3& x = m.vertices[v];
      const Jet3 j = s.shape->eval({Jet3::variable(x.x(), 0), Jet3::variable(x.y(), 1), Jet3::variable(x.z(), 2)});
      const Mat3 f = frame_from_normal(j.g.normalized());
      const Eigen::Matrix<double, 3, 2> T = f.leftCols<2>();
      const Mat2 S = T.transpose() * j.h * T / j.g.norm();
      score[v] = SecondFundamentalForm2D::from_matrix(S).trace_free().norm();
    }
  } else {
    const auto nb = vertex_neighbors(m);
    const auto normals = vertex_normals(m);
    for (int v = 0; v < m.num_vertices(); ++v)
      score[v] = fit_second_fundamental_form(m, v, normals[v], k_ring(nb, v, 2)).form.trace_free().norm();
  }
  const double best = *std::max_element(score.begin(), score.end());
  for (int v = 0; v < m.num_vertices(); ++v)
    if (score[v] >= best * (1.0 - 1e-9)) return v;
  return 0;
}

struct GluedSurface {
  TriangleMesh mesh;  // construction coordinates: the bridge spans gamma <= |z| <= 1
  GluingParams params;
  double alpha = 0.0, beta = 0.0, t = 0.0, gamma = 0.0;
  double band_inner = 0.0, band_outer = 0.0;  // cutoff band widths
  double rho_u = 0.0, rho_v = 0.0;            // W zone is rho_u <= |z| <= rho_v
  double r0 = 0.0, r_v = 0.0;                 // radial extent of the polar grid
  double lambda1 = 1.0;                       // enlargement of f1 before inversion
  double theta = 0.0;                         // rotation of f2 about e3
  double lift = 0.0;
  int p1 = -1, p2 = -1;
  SecondFundamentalForm2D P, Q;  // after rescaling and alignment
  FourierBiharmonicSolution bridge;
  GraphHandle u, v, w;  // u_alpha°, v_{1/beta} and the patched height
  std::vector<double> breaks;
  double cap_area = 0.0;         // U faces over |z| < r0
  double cap_volume_flux = 0.0;  // (1/3) flux of the position through them
  int euler1 = 0, euler2 = 0;

  double predicted_coefficient() const {
    const auto Pc = P.trace_free(), Qc = Q.trace_free();
    return kPi * (Pc.pairing(Pc) - t * Pc.pairing(Qc));
  }
};

namespace detail {

// f_s(z) = s f(z / s)
inline Jet2 rescaled(const Jet2& j, double s) { return {s * j.v, j.g, j.h / s}; }

// g(|z|) as a jet in z.
inline Jet2 radial_jet(double x, double y, double g, double dg, double d2g) {
  const double r = std::hypot(x, y);
  const Vec2 e(x / r, y / r);
  const Mat2 ee = e * e.transpose();
  return {g, dg * e, d2g * ee + (dg / r) * (Mat2::Identity() - ee)};
}

// eta(s) = 0 below b/4, 1 above 3b/4, quintic in between; returned as a jet of eta(sign * (|z| - c)).
inline Jet2 cutoff_jet(double x, double y, double c, double sign, double b) {
  const double r = std::hypot(x, y);
  const double s = (sign * (r - c) - 0.25 * b) / (0.5 * b);
  const double k = sign / (0.5 * b);
  return radial_jet(x, y, smoothstep5(s), k * smoothstep5_d1(s), k * k * smoothstep5_d2(s));
}

inline std::vector<int> punch_hole(const TriangleMesh& m, double radius, TriangleMesh& out) {
  std::vector<char> near(m.vertices.size(), 0);
  for (int v = 0; v < m.num_vertices(); ++v) near[v] = m.vertices[v].norm() < radius;
  out = remove_faces(m, [&](int f) { return near[m.faces[f][0]] || near[m.faces[f][1]] || near[m.faces[f][2]]; });
  auto loops = boundary_loops(out);
  if (loops.size() != 1)
    throw Error(ErrorKind::OriginNotUnique,
                "cutting a disk of radius " + std::to_string(radius) + " opened " + std::to_string(loops.size()) +
                    " holes");
  return loops[0];
}

inline std::pair<double, double> loop_radii(const TriangleMesh& m, const std::vector<int>& loop) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int v : loop) {
    const double r = std::hypot(m.vertices[v].x(), m.vertices[v].y());
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

}  // namespace detail

inline GluedSurface connected_sum(const Surface& f1, int p1, const Surface& f2, int p2, const GluingParams& params) {
  params.validate();
  GluedSurface g;
  g.params = params;
  g.p1 = p1;
  g.p2 = p2;
  g.alpha = params.alpha;
  g.gamma = params.gamma;

  const GluingSide raw1 = prepare_side(f1, p1);
  g.lambda1 = raw1.norm.form.trace_free().norm() / params.kappa;
  const GluingSide s1 = prepare_side(f1, p1, g.lambda1);
  g.P = s1.norm.form;
  const GluingSide raw2 = prepare_side(f2, p2);
  g.theta = align_orientation(g.P, raw2.norm.form);
  const GluingSide s2 = prepare_side(f2, p2, 1.0, g.theta);
  g.Q = s2.norm.form;
  const auto Pc = g.P.trace_free(), Qc = g.Q.trace_free();
  g.t = params.t > 0.0 ? params.t : 2.0 * Pc.pairing(Pc) / Pc.pairing(Qc);
  g.beta = g.t * g.alpha;
  if (g.alpha / g.lambda1 > 0.1 * g.gamma * g.gamma)
    throw Error(ErrorKind::InvalidArgument, "alpha / lambda1 = " + std::to_string(g.alpha / g.lambda1) +
                                                " violates alpha << gamma^2 for the unscaled f1");

  const double a = g.alpha, b = g.beta, gam = g.gamma;
  g.band_inner = gam * std::sqrt(a);
  g.band_outer = std::sqrt(a);
  g.rho_u = gam - g.band_inner;
  g.rho_v = 1.0 + g.band_outer;
  g.breaks = {gam - 0.75 * g.band_inner, gam - 0.25 * g.band_inner, gam,
              1.0, 1.0 + 0.25 * g.band_outer, 1.0 + 0.75 * g.band_outer};
  g.lift = 0.25 * g.P.trace();

  // Handles. Copies of the charts keep them valid after the inputs go away.
  GraphChart inv = s1.chart;
  inv.inverted = true;
  inv.lift = g.lift;
  const SecondFundamentalForm2D P = g.P, Q = g.Q;
  g.u = [inv, P, a](double x, double y) {
    const double zx = x / a, zy = y / a;
    return detail::rescaled(inv.height(zx, zy, p_circ(P, zx, zy).v), a);
  };
  const GraphChart ch2 = s2.chart;
  g.v = [ch2, Q, b](double x, double y) {
    const double zx = b * x, zy = b * y;
    const double guess = 0.5 * (Q.a11 * zx * zx + 2.0 * Q.a12 * zx * zy + Q.a22 * zy * zy);
    return detail::rescaled(ch2.height(zx, zy, guess), 1.0 / b);
  };
  auto q_beta = [Q, b](double x, double y) {
    const Mat2 H = b * Q.matrix();
    const Vec2 z(x, y);
    return Jet2(0.5 * z.dot(H * z), H * z, H);
  };

  FourierBoundaryData data;
  data.gamma = gam;
  data.cos_modes.assign(3, ModeData{});
  data.sin_modes.assign(3, ModeData{});
  data.cos_modes[0] = {0.0, 0.0, 0.25 * b * Q.trace(), 0.5 * b * Q.trace()};
  data.cos_modes[2] = {0.5 * a * Pc.a11, 0.0, 0.5 * b * Qc.a11, b * Qc.a11};
  data.sin_modes[2] = {0.5 * a * Pc.a12, 0.0, 0.5 * b * Qc.a12, b * Qc.a12};
  g.bridge = solve_annulus_biharmonic(data);

  const GraphHandle u = g.u, v = g.v;
  const FourierBiharmonicSolution bridge = g.bridge;
  const double bin = g.band_inner, bout = g.band_outer;
  g.w = [=](double x, double y) -> Jet2 {
    const double r = std::hypot(x, y);
    if (r <= gam) {
      if (r <= gam - 0.75 * bin) return u(x, y);
      const Jet2 pa = a * p_circ(P, x, y);
      if (r >= gam - 0.25 * bin) return pa;
      return pa + detail::cutoff_jet(x, y, gam, -1.0, bin) * (u(x, y) - pa);
    }
    if (r < 1.0) return evaluate_bridge(bridge, r, std::atan2(y, x));
    if (r >= 1.0 + 0.75 * bout) return v(x, y);
    const Jet2 q = q_beta(x, y);
    if (r <= 1.0 + 0.25 * bout) return q;
    return q + detail::cutoff_jet(x, y, 1.0, 1.0, bout) * (v(x, y) - q);
  };
  // The bridge must meet alpha p° at gamma and q_{1/beta} at 1 to first order.
  for (const bool inner : {true, false}) {
    const double r = inner ? gam * (1.0 + 1e-12) : 1.0 - 1e-12;
    for (int j = 0; j < 8; ++j) {
      const double th = 2.0 * kPi * (j + 0.25) / 8;
      const double x = r * std::cos(th), y = r * std::sin(th);
      const Jet2 mid = g.w(x, y);
      const Jet2 side = inner ? a * p_circ(P, x, y) : q_beta(x, y);
      const double scale = 1.0 + std::abs(side.v) + side.g.norm();
      if (std::abs(mid.v - side.v) > 1e-8 * scale || (mid.g - side.g).norm() > 1e-8 * scale)
        throw Error(ErrorKind::StitchMismatch, "patched height disagrees with its neighbor at r = " + std::to_string(r));
    }
  }

  // U: f1 with a disk cut at p1, inverted, lifted and scaled by alpha.
  TriangleMesh cap;
  std::vector<int> loop1 =
      detail::punch_hole(s1.norm.mesh, params.hole_edges * mean_edge_length(s1.norm.mesh), cap);
  for (Vec3& x : cap.vertices) x = a * (invert_point(x, Vec3::Zero()) - g.lift * Vec3::UnitZ());
  flip_orientation(cap);
  g.r0 = 1.5 * detail::loop_radii(cap, loop1).second;
  if (g.r0 >= g.rho_u)
    throw Error(ErrorKind::BandTooWide, "inverted cap reaches r = " + std::to_string(g.r0) +
                                            ", inside the band starting at " + std::to_string(g.rho_u));

  // V: f2 with a disk cut at p2, scaled by 1/beta.
  TriangleMesh rest;
  std::vector<int> loop2 =
      detail::punch_hole(s2.norm.mesh, params.hole_edges * mean_edge_length(s2.norm.mesh), rest);
  for (Vec3& x : rest.vertices) x /= b;
  g.r_v = 0.75 * detail::loop_radii(rest, loop2).first;
  if (g.r_v <= 1.5 * g.rho_v)
    throw Error(ErrorKind::BandTooWide, "the disk cut from f2 spans only r = " + std::to_string(g.r_v));

  // W and the graph collars: a polar grid from r0 to r_v, log spaced, with rings on every break.
  std::vector<double> marks{g.r0, g.rho_u, g.rho_v, g.r_v};
  marks.insert(marks.end(), g.breaks.begin(), g.breaks.end());
  std::sort(marks.begin(), marks.end());
  const double step = 2.0 * kPi / params.n_theta;
  std::vector<double> radii;
  for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
    const double span = std::log(marks[k + 1] / marks[k]);
    const int n = std::max(1, static_cast<int>(std::ceil(span / step)));
    for (int i = 0; i < n; ++i) radii.push_back(marks[k] * std::exp(span * i / n));
  }
  radii.push_back(g.r_v);
  const double rho_u = g.rho_u, rho_v = g.rho_v;
  const GraphHandle w = g.w;
  PolarGridMesh grid = polar_grid_mesh(radii, params.n_theta, false, [&](int i, double x, double y) {
    if (radii[i] < rho_u) return u(x, y);
    if (radii[i] > rho_v) return v(x, y);
    return w(x, y);
  });
  flip_orientation(grid.mesh);

  std::vector<Vec3> pos;
  std::vector<Face> faces;
  std::vector<Piece> pieces;
  pos.insert(pos.end(), cap.vertices.begin(), cap.vertices.end());
  const int off_grid = static_cast<int>(pos.size());
  pos.insert(pos.end(), grid.mesh.vertices.begin(), grid.mesh.vertices.end());
  const int off_rest = static_cast<int>(pos.size());
  pos.insert(pos.end(), rest.vertices.begin(), rest.vertices.end());
  auto shifted = [](std::vector<int> ids, int off) {
    for (int& i : ids) i += off;
    return ids;
  };
  Mat3 down = Mat3::Identity();
  down(1, 1) = down(2, 2) = -1.0;
  for (const Face& f : cap.faces) faces.push_back(f);
  for (const Face& f : zipper(pos, loop1, shifted(grid.rings.front(), off_grid), down)) faces.push_back(f);
  pieces.assign(faces.size(), Piece::U);
  double area = 0.0, flux = 0.0;
  for (const Face& f : faces) {
    const Vec3 &A = pos[f[0]], &B = pos[f[1]], &C = pos[f[2]];
    area += 0.5 * (B - A).cross(C - A).norm();
    flux += A.dot(B.cross(C)) / 6.0;
  }
  g.cap_area = area;
  g.cap_volume_flux = flux;
  const int per_band = 2 * params.n_theta;
  for (int f = 0; f < grid.mesh.num_faces(); ++f) {
    Face t = grid.mesh.faces[f];
    for (int& i : t) i += off_grid;
    faces.push_back(t);
    const std::size_t band = static_cast<std::size_t>(f / per_band);
    pieces.push_back(radii[band + 1] <= rho_u ? Piece::U : radii[band] >= rho_v ? Piece::V : Piece::W);
  }
  for (const Face& f : zipper(pos, shifted(grid.rings.back(), off_grid), shifted(loop2, off_rest), down)) {
    faces.push_back(f);
    pieces.push_back(Piece::V);
  }
  for (Face f : rest.faces) {
    for (int& i : f) i += off_rest;
    faces.push_back(f);
    pieces.push_back(Piece::V);
  }
  g.mesh = build_mesh(std::move(pos), std::move(faces));
  g.mesh.pieces = std::move(pieces);
  g.euler1 = euler_characteristic(f1.mesh);
  g.euler2 = euler_characteristic(f2.mesh);
  if (euler_characteristic(g.mesh) != g.euler1 + g.euler2 - 2)
    throw Error(ErrorKind::StitchMismatch, "Euler characteristic of the glued mesh is off");
  return g;
}

inline GluedSurface connected_sum(const Surface& f1, const Surface& f2, const GluingParams& params) {
  return connected_sum(f1, choose_gluing_vertex(f1), f2, choose_gluing_vertex(f2), params);
}

// ---------------------------------------------------------------------------
// Energetics

struct ExcessReport {
  double dW_excess = 0.0;  // W(f) - (W(f1) + W(f2) - 4 pi)
  double dIso = 0.0;       // iso(f) - iso(f2)
  double predicted = 0.0;  // pi alpha^2 (|P°|^2 - t <P°, Q°>)
  double willmore = 0.0;   // W(f1) + W(f2) - 4 pi + dW_excess
  double iso = 0.0;
  double delta_area = 0.0;    // area(f) - area(f2) / beta^2
  double delta_volume = 0.0;  // vol(f) - vol(f2) / beta^3
  double quadrature_error = 0.0;
  double w_patch = 0.0, w_u = 0.0, w_v = 0.0;
  bool diverged = false;
};

// iso of a surface whose area and volume are A (1 + a) and V (1 + v), relative to iso(A, V).
inline double iso_shift(double iso, double a, double v) {
  return iso * std::expm1(std::log1p(a) - (2.0 / 3.0) * std::log1p(v));
}

inline ExcessReport energy_iso_excess(const GluedSurface& g, const SurfaceMeasures& m1, const SurfaceMeasures& m2) {
  const int nr = g.params.quad_r, nt = g.params.quad_theta;
  std::vector<double> all = g.breaks;
  all.push_back(g.rho_u);
  all.push_back(g.rho_v);
  // u is steep just outside the cap: octaves between r0 and rho_u.
  std::vector<double> near = all;
  for (double r = 2.0 * g.r0; r < g.rho_u; r *= 2.0) near.push_back(r);
  const GraphEnergetics eu_near = graph_energetics(g.u, {g.r0, g.rho_u, near}, nr, nt);
  const GraphEnergetics eu = graph_energetics(g.u, {g.rho_u, std::numeric_limits<double>::infinity(), all}, nr, nt);
  const GraphEnergetics ew = graph_energetics(g.w, {g.rho_u, g.rho_v, all}, nr, nt);
  const GraphEnergetics ev = graph_energetics(g.v, {0.0, g.rho_v, all}, nr, nt);
  ExcessReport r;
  r.w_patch = ew.willmore;
  r.w_u = eu.willmore;
  r.w_v = ev.willmore;
  r.dW_excess = ew.willmore - eu.willmore - ev.willmore;
  r.quadrature_error = std::abs(ew.willmore) * ew.max_relative_change +
                       std::abs(eu.willmore) * eu.max_relative_change + std::abs(ev.willmore) * ev.max_relative_change;
  r.diverged = eu_near.diverged || eu.diverged || ew.diverged || ev.diverged;
  r.predicted = g.alpha * g.alpha * g.predicted_coefficient();
  r.willmore = m1.willmore + m2.willmore - 4.0 * kPi + r.dW_excess;
  r.delta_area = g.cap_area - kPi * g.r0 * g.r0 + eu_near.area_excess + ew.area_excess - ev.area_excess;
  r.delta_volume = g.cap_volume_flux - eu_near.volume_flux - ew.volume_flux + ev.volume_flux;
  const double b = g.beta;
  r.dIso = iso_shift(m2.require_iso(), b * b * r.delta_area / m2.area, b * b * b * r.delta_volume / m2.volume);
  r.iso = *m2.iso + r.dIso;
  return r;
}

// ---------------------------------------------------------------------------
// Asymptotic sweeps

struct SweepRow {
  double alpha;
  double dW_excess;
  double predicted;
  double dIso;
};

struct SlopeFit {
  double slope = 0.0;
  double half_width = 0.0;  // 95% confidence
};

// Least squares slope of log|y| against log x.
inline SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "a slope with confidence needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(std::abs(y[i])) / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += square(std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(std::abs(y[i])) - my);
  }
  SlopeFit f;
  f.slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sse += square(std::log(std::abs(y[i])) - my - f.slope * (std::log(x[i]) - mx));
  const boost::math::students_t dist(static_cast<double>(n - 2));
  f.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(sse / (n - 2) / sxx);
  return f;
}

struct AsymptoticsReport {
  std::vector<SweepRow> rows;  // alpha decreasing
  SlopeFit dW_slope;
  SlopeFit dIso_slope;
  double t = 0.0;
  double gamma = 0.0;
  double predicted_coefficient = 0.0;
  SecondFundamentalForm2D P, Q;
};

inline AsymptoticsReport sweep_alpha(const Surface& f1, int p1, const Surface& f2, int p2, double t, double gamma,
                                     const std::vector<double>& alphas, GluingParams base = {}) {
  if (alphas.size() < 4) throw Error(ErrorKind::InvalidArgument, "a sweep needs at least 4 alpha values");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] < alphas[i - 1])) throw Error(ErrorKind::InvalidArgument, "alpha values must decrease");
  base.t = t;
  base.gamma = gamma;
  const SurfaceMeasures m1 = measure(f1.mesh), m2 = measure(f2.mesh);
  std::vector<std::future<std::pair<GluedSurface, ExcessReport>>> jobs;
  for (double a : alphas) {
    GluingParams p = base;
    p.alpha = a;
    jobs.push_back(std::async(std::launch::async, [&, p] {
      GluedSurface g = connected_sum(f1, p1, f2, p2, p);
      ExcessReport e = energy_iso_excess(g, m1, m2);
      g.mesh = {};
      return std::make_pair(std::move(g), e);
    }));
  }
  AsymptoticsReport rep;
  rep.gamma = gamma;
  std::vector<double> xs, dw, di;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto [g, e] = jobs[i].get();
    rep.rows.push_back({alphas[i], e.dW_excess, e.predicted, e.dIso});
    rep.t = g.t;
    rep.P = g.P;
    rep.Q = g.Q;
    rep.predicted_coefficient = g.predicted_coefficient();
    xs.push_back(alphas[i]);
    dw.push_back(e.dW_excess);
    di.push_back(e.dIso);
  }
  rep.dW_slope = loglog_slope(xs, dw);
  rep.dIso_slope = loglog_slope(xs, di);
  return rep;
}

// ---------------------------------------------------------------------------
// Strict inequality at matched isoperimetric ratio

struct HarnessOptions {
  std::vector<double> alphas{0.08, 0.04, 0.02, 0.01};
  double alpha_floor = 0.005;
  double iso_tol = 1e-3;        // relative to iso(f2)
  double margin_factor = 10.0;  // -dW_excess must beat the quadrature error by this much
  double support_edges = 5.0;   // radius of the variation support in mean edge lengths
  int p1 = -1, p2 = -1;         // -1 picks the vertex of largest |P°|
  GluingParams params;          // alpha is overwritten by the trials
};

struct AlphaTrial {
  double alpha;
  double dW_excess;
  double quadrature_error;
  std::string note;
};

struct BisectionStep {
  double s;
  double iso_gap;  // iso(f_{s, alpha}) - iso(f2)
};

struct CertifiedResult {
  GluedSurface glued;
  double alpha_star = 0.0;
  double s_star = 0.0;
  double iso_f2 = 0.0;
  double iso_glued = 0.0;       // hybrid
  double iso_glued_mesh = 0.0;  // measured on the emitted mesh
  double dW_excess = 0.0;
  double willmore_shift = 0.0;  // W(f2 + s xi) - W(f2)
  double w_bound = 0.0;         // W(f1) + W(f2) - 4 pi
  double w_glued = 0.0;         // hybrid
  double w_margin = 0.0;        // w_bound - w_glued
  double quadrature_error = 0.0;
  SurfaceMeasures measured;     // of the emitted mesh
  std::vector<AlphaTrial> trials;
  std::vector<BisectionStep> steps;
  int variation_vertex = -1;
};

namespace detail {

// Area and volume change of a closed mesh under a displacement supported on few vertices.
inline std::pair<double, double> local_change(const TriangleMesh& m, const VertexField<Vec3>& xi, double s) {
  double da = 0.0, dv = 0.0;
  for (int f = 0; f < m.num_faces(); ++f) {
    const Face& t = m.faces[f];
    if (xi[t[0]].isZero() && xi[t[1]].isZero() && xi[t[2]].isZero()) continue;
    const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
    const Vec3 A = a + s * xi[t[0]], B = b + s * xi[t[1]], C = c + s * xi[t[2]];
    da += 0.5 * ((B - A).cross(C - A).norm() - (b - a).cross(c - a).norm());
    dv += (A.dot(B.cross(C)) - a.dot(b.cross(c))) / 6.0;
  }
  return {da, dv};
}

}  // namespace detail

// Fills res as it goes, so trials and bisection samples survive a failure.
inline void run_theorem_harness(const Surface& f1, const Surface& f2, const HarnessOptions& opt, CertifiedResult& res) {
  const int p1 = opt.p1 >= 0 ? opt.p1 : choose_gluing_vertex(f1);
  const int p2 = opt.p2 >= 0 ? opt.p2 : choose_gluing_vertex(f2);
  // Hypotheses first: both gluing points must be nonumbilic.
  prepare_side(f1, p1);
  prepare_side(f2, p2);
  const SurfaceMeasures m1 = measure(f1.mesh), m2 = measure(f2.mesh);
  res = {};
  res.iso_f2 = m2.require_iso();
  res.w_bound = m1.willmore + m2.willmore - 4.0 * kPi;

  std::vector<double> alphas = opt.alphas;
  while (alphas.back() * 0.5 >= opt.alpha_floor) alphas.push_back(alphas.back() * 0.5);
  ExcessReport ex;
  GluingParams params = opt.params;
  bool accepted = false;
  for (double a : alphas) {
    params.alpha = a;
    try {
      const GluedSurface g = connected_sum(f1, p1, f2, p2, params);
      ex = energy_iso_excess(g, m1, m2);
      const bool ok = ex.dW_excess < 0.0 && -ex.dW_excess > opt.margin_factor * ex.quadrature_error;
      res.trials.push_back({a, ex.dW_excess, ex.quadrature_error, ok ? "accepted" : "no margin"});
      if (ok) {
        res.glued = g;
        accepted = true;
        break;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BandTooWide) throw;
      res.trials.push_back({a, std::nan(""), std::nan(""), e.what()});
    }
  }
  if (!accepted) {
    std::ostringstream msg;
    msg << "no trial alpha down to " << alphas.back() << " gave a negative energy excess:";
    for (const auto& t : res.trials) msg << " (" << t.alpha << ", " << t.dW_excess << ", " << t.note << ")";
    throw Error(ErrorKind::NoNegativeExcess, msg.str());
  }
  res.alpha_star = params.alpha;
  res.dW_excess = ex.dW_excess;
  res.quadrature_error = ex.quadrature_error;

  // Volume preserving variation of f2 away from p2.
  const int pv = select_variation_point(f2.mesh, p2);
  res.variation_vertex = pv;
  const VariationSpec var = build_variation(f2.mesh, pv, opt.support_edges * mean_edge_length(f2.mesh), p2);
  const double b = res.glued.beta;
  auto gap = [&](double s) {
    const auto [da, dv] = detail::local_change(f2.mesh, var.xi, s);
    const double d = iso_shift(res.iso_f2, (da + b * b * ex.delta_area) / m2.area,
                               (dv + b * b * b * ex.delta_volume) / m2.volume);
    res.steps.push_back({s, d});
    return d;
  };
  const double smax = std::pow(res.alpha_star, params.m);
  detail::check_step(f2.mesh, displaced(f2.mesh, var.xi, smax), smax);
  detail::check_step(f2.mesh, displaced(f2.mesh, var.xi, -smax), -smax);
  double lo = -smax, hi = smax;
  const double dlo = gap(lo), dhi = gap(hi);
  if (!(dlo * dhi < 0.0)) {
    std::ostringstream msg;
    msg << "iso(f_s) - iso(f2) is " << dlo << " at s = " << lo << " and " << dhi << " at s = " << hi;
    throw Error(ErrorKind::BisectionNoBracket, msg.str());
  }
  const double tol = opt.iso_tol * res.iso_f2;
  double s = 0.0, d = 0.0;
  for (int it = 0; it < 200; ++it) {
    s = 0.5 * (lo + hi);
    d = gap(s);
    if (std::abs(d) <= tol) break;
    ((d > 0.0) == (dlo > 0.0) ? lo : hi) = s;
  }
  if (!(std::abs(d) <= tol)) throw Error(ErrorKind::BisectionNoBracket, "bisection stalled at s = " + std::to_string(s));
  res.s_star = s;
  res.iso_glued = res.iso_f2 + d;

  const Surface f2s{displaced(f2.mesh, var.xi, s), f2.shape, f2.name};
  res.willmore_shift = willmore_energy(f2s.mesh) - m2.willmore;
  res.w_glued = res.w_bound + res.dW_excess + res.willmore_shift;
  res.w_margin = res.w_bound - res.w_glued;
  if (!(res.w_margin > 0.0)) {
    std::ostringstream msg;
    msg << "energy margin " << res.w_margin << " is not positive at alpha = " << res.alpha_star << ", s = " << s;
    throw Error(ErrorKind::NoNegativeExcess, msg.str());
  }
  if (s != 0.0) res.glued = connected_sum(f1, p1, f2s, p2, params);
  res.measured = measure(res.glued.mesh);
  res.iso_glued_mesh = res.measured.require_iso();
}

inline CertifiedResult theorem_harness(const Surface& f1, const Surface& f2, const HarnessOptions& opt = {}) {
  CertifiedResult res;
  run_theorem_harness(f1, f2, opt, res);
  return res;
}

}  // namespace wlab
