#pragma once

#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>

#include "wlab/implicit.hpp"
#include "wlab/measures.hpp"

namespace wlab {

inline constexpr double kPi = std::numbers::pi;

// Quintic smoothstep: 0 for s <= 0, 1 for s >= 1, C2 across both ends.
inline double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}
inline double smoothstep5_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}
inline double smoothstep5_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
}

struct Surface {
  TriangleMesh mesh;
  std::shared_ptr<const ImplicitShape> shape;  // exact zero set of the vertices, when known
  std::string name;
};

inline TriangleMesh gen_icosphere(double radius, int subdiv) {
  if (!(radius > 0.0) || subdiv < 0 || subdiv > 7)
    throw Error(ErrorKind::InvalidArgument, "icosphere needs radius > 0 and 0 <= subdiv <= 7");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& p : v) p.normalize();
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(4 * f.size());
    for (const Face& tri : f) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return build_mesh(std::move(v), std::move(f));
}

struct TorusSpec {
  double R = 1.0;
  double r = 0.5;
  int nu = 128;  // around the tube
  int nv = 128;  // around the axis
};

inline TriangleMesh gen_torus(const TorusSpec& s) {
  if (!(s.r > 0.0 && s.r < s.R) || s.nu < 8 || s.nv < 8)
    throw Error(ErrorKind::InvalidArgument, "torus needs 0 < r < R and nu, nv >= 8");
  std::vector<Vec3> v;
  v.reserve(static_cast<std::size_t>(s.nu) * s.nv);
  for (int i = 0; i < s.nu; ++i) {
    const double u = 2.0 * kPi * i / s.nu;
    for (int j = 0; j < s.nv; ++j) {
      const double w = 2.0 * kPi * j / s.nv;
      const double rho = s.R + s.r * std::cos(u);
      v.emplace_back(rho * std::cos(w), rho * std::sin(w), s.r * std::sin(u));
    }
  }
  auto id = [&](int i, int j) { return ((i + s.nu) % s.nu) * s.nv + (j + s.nv) % s.nv; };
  std::vector<Face> f;
  f.reserve(2 * v.size());
  for (int i = 0; i < s.nu; ++i)
    for (int j = 0; j < s.nv; ++j) {
      f.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  return build_mesh(std::move(v), std::move(f));
}

inline TriangleMesh gen_ellipsoid(double a, double b, double c, int subdiv) {
  TriangleMesh m = gen_icosphere(1.0, subdiv);
  for (Vec3& p : m.vertices) p = Vec3(a * p.x(), b * p.y(), c * p.z());
  return m;
}

inline Surface torus_surface(const TorusSpec& s) {
  return {gen_torus(s), std::make_shared<TorusShape>(s.R, s.r), "torus"};
}
inline Surface icosphere_surface(double radius, int subdiv) {
  return {gen_icosphere(radius, subdiv), std::make_shared<SphereShape>(Vec3::Zero(), radius), "icosphere"};
}
inline Surface ellipsoid_surface(double a, double b, double c, int subdiv) {
  return {gen_ellipsoid(a, b, c, subdiv), std::make_shared<EllipsoidShape>(a, b, c), "ellipsoid"};
}

struct TorusClosedForms {
  double willmore;
  double iso;
};

inline TorusClosedForms torus_closed_forms(double c) {
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorKind::DomainError, "c must lie in (0, 1)");
  return {kPi * kPi / (c * std::sqrt(1.0 - c * c)), std::cbrt(16.0 * kPi * kPi / c)};
}

struct SolutionIntervalConstants {
  double iso_sphere;
  double c1;
  double iso_Tc1;
  double iso_clifford;
  double eight_pi;
  double two_pi_sq;
};

inline SolutionIntervalConstants solution_interval_constants() {
  SolutionIntervalConstants k;
  k.iso_sphere = std::cbrt(36.0 * kPi);
  k.c1 = std::sqrt(0.5 - std::sqrt(16.0 - kPi * kPi) / 8.0);
  k.iso_Tc1 = std::cbrt(16.0 * kPi * kPi / k.c1);
  k.iso_clifford = std::cbrt(16.0 * std::sqrt(2.0) * kPi * kPi);
  k.eight_pi = 8.0 * kPi;
  k.two_pi_sq = 2.0 * kPi * kPi;
  return k;
}

// Structured polar triangulation of a height field; faces have upward normals.
struct PolarGridMesh {
  TriangleMesh mesh;
  std::vector<std::vector<int>> rings;
  int center = -1;
  VertexField<Jet2> jets;
};

using RingHeight = std::function<Jet2(int ring, double x, double y)>;

inline PolarGridMesh polar_grid_mesh(const std::vector<double>& radii, int n_theta, bool with_center,
                                     const RingHeight& height) {
  PolarGridMesh g;
  TriangleMesh& m = g.mesh;
  m.closed = false;
  if (with_center) {
    const Jet2 h = height(-1, 0.0, 0.0);
    g.center = 0;
    m.vertices.emplace_back(0.0, 0.0, h.v);
    g.jets.push_back(h);
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::vector<int> ring(n_theta);
    for (int j = 0; j < n_theta; ++j) {
      const double th = 2.0 * kPi * j / n_theta;
      const double x = radii[i] * std::cos(th), y = radii[i] * std::sin(th);
      const Jet2 h = height(static_cast<int>(i), x, y);
      ring[j] = m.num_vertices();
      m.vertices.emplace_back(x, y, h.v);
      g.jets.push_back(h);
    }
    g.rings.push_back(std::move(ring));
  }
  if (with_center)
    for (int j = 0; j < n_theta; ++j)
      m.faces.push_back({g.center, g.rings[0][j], g.rings[0][(j + 1) % n_theta]});
  for (std::size_t i = 0; i + 1 < g.rings.size(); ++i)
    for (int j = 0; j < n_theta; ++j) {
      const int a = g.rings[i][j], b = g.rings[i + 1][j];
      const int c = g.rings[i + 1][(j + 1) % n_theta], d = g.rings[i][(j + 1) % n_theta];
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  m.pieces.assign(m.faces.size(), Piece::None);
  return g;
}

struct GraphPatch {
  double inner = 0.0;  // 0 means a disk with a center vertex
  double outer = 1.0;
  std::function<Jet2(double, double)> height;
  int n_r = 32;
  int n_theta = 64;
};

inline PolarGridMesh gen_graph_mesh(const GraphPatch& p) {
  if (!(p.inner >= 0.0 && p.inner < p.outer) || p.n_r < 1 || p.n_theta < 3)
    throw Error(ErrorKind::InvalidArgument, "graph patch needs 0 <= inner < outer");
  std::vector<double> radii;
  const bool disk = p.inner == 0.0;
  for (int i = disk ? 1 : 0; i <= p.n_r; ++i) radii.push_back(p.inner + (p.outer - p.inner) * i / p.n_r);
  return polar_grid_mesh(radii, p.n_theta, disk, [&](int, double x, double y) { return p.height(x, y); });
}

// Triangulates the band between two loops that wind once around the origin of
// the plane spanned by e1, e2 of frame; inner lies inside outer. Faces are
// oriented so that their normals agree with frame.col(2).
inline std::vector<Face> zipper(const std::vector<Vec3>& pos, std::vector<int> inner, std::vector<int> outer,
                                const Mat3& frame = Mat3::Identity(), const Vec3& center = Vec3::Zero()) {
  auto angle = [&](int v) {
    const Vec3 d = frame.transpose() * (pos[v] - center);
    return std::atan2(d.y(), d.x());
  };
  auto prepare = [&](std::vector<int>& loop, std::vector<double>& ang) {
    double turn = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      double d = angle(loop[(i + 1) % loop.size()]) - angle(loop[i]);
      if (d > kPi) d -= 2.0 * kPi;
      if (d < -kPi) d += 2.0 * kPi;
      turn += d;
    }
    if (turn < 0.0) std::reverse(loop.begin(), loop.end());
    std::size_t start = 0;
    double best = 10.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      double a = angle(loop[i]);
      if (a < 0.0) a += 2.0 * kPi;
      if (a < best) {
        best = a;
        start = i;
      }
    }
    std::rotate(loop.begin(), loop.begin() + start, loop.end());
    ang.resize(loop.size() + 1);
    for (std::size_t i = 0; i < loop.size(); ++i) {
      double a = angle(loop[i]);
      if (a < 0.0) a += 2.0 * kPi;
      if (i > 0 && a < ang[i - 1] - kPi) a += 2.0 * kPi;
      ang[i] = a;
    }
    ang[loop.size()] = ang[0] + 2.0 * kPi;
    loop.push_back(loop.front());
  };
  std::vector<double> ai, ao;
  prepare(inner, ai);
  prepare(outer, ao);
  const std::size_t ni = inner.size() - 1, no = outer.size() - 1;
  std::vector<Face> faces;
  std::size_t i = 0, j = 0;
  while (i < ni || j < no) {
    const bool advance_inner = (j == no) || (i < ni && ai[i + 1] < ao[j + 1]);
    if (advance_inner) {
      faces.push_back({inner[i], outer[j], inner[i + 1]});
      ++i;
    } else {
      faces.push_back({inner[i], outer[j], outer[j + 1]});
      ++j;
    }
  }
  for (const Face& f : faces) {
    const Vec3 n = (pos[f[1]] - pos[f[0]]).cross(pos[f[2]] - pos[f[0]]);
    if (!(n.dot(frame.col(2)) > 0.0))
      throw Error(ErrorKind::StitchMismatch, "zipper produced a folded triangle");
  }
  return faces;
}

// Sites spread over the unit sphere; antipodal for two necks.
inline std::vector<Vec3> spread_sites(int n) {
  std::vector<Vec3> s;
  if (n == 2) return {Vec3::UnitZ(), -Vec3::UnitZ()};
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double rho = std::sqrt(1.0 - z * z);
    s.emplace_back(rho * std::cos(golden * k), rho * std::sin(golden * k), z);
  }
  return s;
}

struct NeckOptions {
  int sphere_subdiv = 5;
  int n_theta = 64;
  double collar_outer = 0.2;  // tangential radius where the sheet rejoins the sphere
  double collar_inner = 1.0;  // blend start, in units of the gap eps
};

// Two concentric spheres of radii 1 and 1 + eps joined by g + 1 catenoidal necks of waist delta.
inline TriangleMesh gen_necked_spheres(int g, double eps, double delta, const NeckOptions& opt = {}) {
  if (g < 1 || !(eps > 0.0) || !(delta > 0.0) || !(delta < eps) || !(eps < 0.5))
    throw Error(ErrorKind::InvalidArgument, "necked spheres need g >= 1 and 0 < delta < eps < 0.5");
  const double Rm = 1.0 + 0.5 * eps;
  const double rho2 = opt.collar_outer, rho1 = std::min(opt.collar_inner * eps, 0.5 * rho2);
  if (!(delta < 0.5 * rho1))
    throw Error(ErrorKind::GeometryClash, "neck waist does not fit inside the collar");
  const std::vector<Vec3> sites = spread_sites(g + 1);
  double min_sep = kPi;
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = a + 1; b < sites.size(); ++b)
      min_sep = std::min(min_sep, std::acos(std::clamp(sites[a].dot(sites[b]), -1.0, 1.0)));
  const double psi2 = rho2 / Rm;
  const TriangleMesh base = gen_icosphere(1.0, opt.sphere_subdiv);
  const double edge = mean_edge_length(base);
  const double hole = psi2 + 0.5 * edge;
  if (min_sep < 2.0 * hole + 2.0 * edge)
    throw Error(ErrorKind::GeometryClash, "necks overlap for g = " + std::to_string(g));

  std::vector<Vec3> pos;
  std::vector<Face> faces;
  // Each sphere with holes; the inner one faces the center.
  std::vector<std::vector<int>> inner_loops, outer_loops;
  for (int sheet = 0; sheet < 2; ++sheet) {
    const double radius = sheet == 0 ? 1.0 : 1.0 + eps;
    auto near_site = [&](int v) {
      for (const Vec3& s : sites)
        if (std::acos(std::clamp(base.vertices[v].dot(s), -1.0, 1.0)) < hole) return true;
      return false;
    };
    std::vector<int> remap;
    TriangleMesh part = remove_faces(
        base,
        [&](int f) {
          for (int v : base.faces[f])
            if (near_site(v)) return true;
          return false;
        },
        &remap);
    const int offset = static_cast<int>(pos.size());
    for (const Vec3& p : part.vertices) pos.push_back(radius * p);
    for (Face t : part.faces) {
      for (int& v : t) v += offset;
      if (sheet == 0) std::swap(t[1], t[2]);
      faces.push_back(t);
    }
    auto loops = boundary_loops(part);
    for (auto& loop : loops)
      for (int& v : loop) v += offset;
    // Match each loop to the site it surrounds.
    std::vector<std::vector<int>> ordered(sites.size());
    for (auto& loop : loops) {
      Vec3 c = Vec3::Zero();
      for (int v : loop) c += pos[v];
      std::size_t best = 0;
      for (std::size_t k = 1; k < sites.size(); ++k)
        if (c.dot(sites[k]) > c.dot(sites[best])) best = k;
      ordered[best] = std::move(loop);
    }
    for (const auto& loop : ordered)
      if (loop.empty()) throw Error(ErrorKind::GeometryClash, "hole did not open around a site");
    (sheet == 0 ? inner_loops : outer_loops) = std::move(ordered);
  }

  const int nt = opt.n_theta;
  const double T = std::acosh(rho2 / delta);
  const int half = std::max(4, static_cast<int>(std::ceil(T / (2.0 * kPi / nt))));
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const Mat3 frame = frame_from_normal(sites[k]);
    auto point = [&](double tau, double th) {
      const double rho = delta * std::cosh(tau);
      const double b = smoothstep5((rho - rho1) / (rho2 - rho1));
      const double h = (1.0 - b) * delta * tau + b * std::copysign(0.5 * eps, tau);
      const double psi = rho / Rm;
      const Vec3 dir = std::cos(psi) * frame.col(2) +
                       std::sin(psi) * (std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1));
      return Vec3((Rm + h) * dir);
    };
    std::vector<std::vector<int>> rings;
    for (int i = -half; i <= half; ++i) {
      const double tau = T * i / half;
      std::vector<int> ring(nt);
      for (int j = 0; j < nt; ++j) {
        ring[j] = static_cast<int>(pos.size());
        pos.push_back(point(tau, 2.0 * kPi * j / nt));
      }
      rings.push_back(std::move(ring));
    }
    for (std::size_t i = 0; i + 1 < rings.size(); ++i)
      for (int j = 0; j < nt; ++j) {
        const int a = rings[i][j], b = rings[i + 1][j];
        const int c = rings[i + 1][(j + 1) % nt], d = rings[i][(j + 1) % nt];
        faces.push_back({a, b, c});
        faces.push_back({a, c, d});
      }
    // Outer end joins the outer sphere with outward normals; inner end faces the center.
    for (const Face& t : zipper(pos, rings.back(), outer_loops[k], frame, Vec3::Zero()))
      faces.push_back(t);
    Mat3 down = frame;
    down.col(1) = -frame.col(1);
    down.col(2) = -frame.col(2);
    for (const Face& t : zipper(pos, rings.front(), inner_loops[k], down, Vec3::Zero()))
      faces.push_back(t);
  }
  return build_mesh(std::move(pos), std::move(faces));
}

}  // namespace wlab
