#include <gtest/gtest.h>

#include "wlab/measures.hpp"
#include "wlab/surfaces.hpp"

using namespace wlab;

namespace {

TriangleMesh tetrahedron() {
  return build_mesh({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}, {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}});
}

TriangleMesh unit_cube() {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  std::vector<Face> f = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                         {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return build_mesh(v, f);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

TriangleMesh transformed(TriangleMesh m, double s, const Mat3& R, const Vec3& t) {
  for (Vec3& x : m.vertices) x = s * (R * x) + t;
  return m;
}

}  // namespace

TEST(BuildMesh, TetrahedronIsClosed) {
  const auto m = tetrahedron();
  EXPECT_EQ(euler_characteristic(m), 2);
  EXPECT_EQ(measure(m).genus, 0);
}

TEST(BuildMesh, RejectsInvalidInput) {
  EXPECT_EQ(kind_of([] { build_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}); }), ErrorKind::OpenBoundary);
  EXPECT_EQ(kind_of([] {
              build_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}, {0, 1, 3}});
            }),
            ErrorKind::NonManifold);
  EXPECT_EQ(kind_of([] { build_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 7}}); }), ErrorKind::BadIndex);
  EXPECT_EQ(kind_of([] { build_mesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}); }), ErrorKind::DegenerateFace);
  auto isolated = [] {
    auto t = tetrahedron();
    t.vertices.emplace_back(5, 5, 5);
    build_mesh(t.vertices, t.faces);
  };
  EXPECT_EQ(kind_of(isolated), ErrorKind::BadIndex);
}

TEST(BuildMesh, ErrorNamesTheSimplex) {
  try {
    build_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("edge"), std::string::npos);
  }
}

TEST(Measure, UnitCube) {
  const auto s = measure(unit_cube());
  EXPECT_NEAR(s.area, 6.0, 1e-14);
  EXPECT_NEAR(s.volume, 1.0, 1e-14);
  EXPECT_NEAR(*s.iso, 6.0, 1e-13);
  EXPECT_EQ(s.euler_char, 2);
}

TEST(Measure, InwardOrientationHasNoIso) {
  auto m = unit_cube();
  flip_orientation(m);
  const auto s = measure(m);
  EXPECT_FALSE(s.iso.has_value());
  EXPECT_EQ(kind_of([&] { s.require_iso(); }), ErrorKind::NonPositiveVolume);
}

TEST(Measure, IcosphereClosedForms) {
  const double iso_sphere = std::cbrt(36.0 * kPi);
  const auto s = measure(gen_icosphere(1.0, 4));
  EXPECT_NEAR(s.area / (4 * kPi), 1.0, 5e-3);
  EXPECT_NEAR(s.volume / (4 * kPi / 3), 1.0, 5e-3);
  EXPECT_NEAR(*s.iso / iso_sphere, 1.0, 5e-3);
  EXPECT_NEAR(s.willmore / (4 * kPi), 1.0, 1e-2);
  // One more subdivision at least halves every error.
  const auto f = measure(gen_icosphere(1.0, 5));
  EXPECT_LE(std::abs(f.area - 4 * kPi), 0.5 * std::abs(s.area - 4 * kPi));
  EXPECT_LE(std::abs(f.volume - 4 * kPi / 3), 0.5 * std::abs(s.volume - 4 * kPi / 3));
  EXPECT_LE(std::abs(f.willmore - 4 * kPi), 0.5 * std::abs(s.willmore - 4 * kPi));
}

TEST(Measure, CliffordTorus) {
  const double c = 1.0 / std::sqrt(2.0);
  const auto s = measure(gen_torus({1.0, c, 256, 256}));
  EXPECT_NEAR(s.willmore / (2 * kPi * kPi), 1.0, 1e-2);
  EXPECT_NEAR(*s.iso / std::cbrt(16 * std::sqrt(2.0) * kPi * kPi), 1.0, 5e-3);
}

TEST(Measure, RefinementConvergesMonotonically) {
  std::vector<double> ew, ea, ev;
  for (int s : {2, 3, 4}) {
    const auto m = measure(gen_icosphere(1.0, s));
    ew.push_back(std::abs(m.willmore - 4 * kPi));
    ea.push_back(std::abs(m.area - 4 * kPi));
    ev.push_back(std::abs(m.volume - 4 * kPi / 3));
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(ew[i + 1], ew[i]);
    EXPECT_LT(ea[i + 1], ea[i]);
    EXPECT_LT(ev[i + 1], ev[i]);
  }
  const double c = 0.5, R = 1.0;
  const double W = kPi * kPi / (c * std::sqrt(1 - c * c));
  const double A = 4 * kPi * kPi * R * c, V = 2 * kPi * kPi * R * c * c;
  std::vector<double> tw, ta, tv;
  for (int n : {32, 64, 128}) {
    const auto m = measure(gen_torus({R, c, n, n}));
    tw.push_back(std::abs(m.willmore - W));
    ta.push_back(std::abs(m.area - A));
    tv.push_back(std::abs(m.volume - V));
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(tw[i + 1], tw[i]);
    EXPECT_LT(ta[i + 1], ta[i]);
    EXPECT_LT(tv[i + 1], tv[i]);
  }
}

TEST(MeanCurvature, SphereOfRadiusTwo) {
  auto m = gen_icosphere(2.0, 4);
  for (double H : vertex_mean_curvature(m)) EXPECT_NEAR(H, 1.0, 2e-2);
  flip_orientation(m);
  for (double H : vertex_mean_curvature(m)) EXPECT_NEAR(H, -1.0, 2e-2);
}

TEST(MeanCurvature, TorusOuterCircle) {
  const double R = 1.0, r = 0.5;
  const auto m = gen_torus({R, r, 128, 128});
  const auto H = vertex_mean_curvature(m);
  const double expect = 1.0 / r + 1.0 / (R + r);
  int checked = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    const Vec3& x = m.vertices[v];
    if (std::abs(std::hypot(x.x(), x.y()) - (R + r)) < 1e-12) {
      EXPECT_NEAR(H[v] / expect, 1.0, 3e-2);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 128);
}

TEST(SecondFundamentalForm, Icosphere) {
  const auto m = gen_icosphere(1.0, 4);
  for (int v : {0, 17, 500}) {
    const auto fit = second_fundamental_form_at(m, v);
    EXPECT_NEAR(fit.form.a11, 1.0, 3e-2);
    EXPECT_NEAR(fit.form.a22, 1.0, 3e-2);
    EXPECT_NEAR(fit.form.a12, 0.0, 3e-2);
    EXPECT_LT(fit.form.trace_free().norm(), 0.05);
  }
}

TEST(SecondFundamentalForm, SaddleGraph) {
  auto g = gen_graph_mesh({0.0, 0.05, [](double x, double y) {
                             return Jet2(0.5 * (x * x - y * y), Vec2(x, -y), Vec2(1.0, -1.0).asDiagonal());
                           }, 8, 24});
  // Close nothing: the fit only needs the 2-ring of the center, oriented with the graph.
  const auto& m = g.mesh;
  const auto nb = vertex_neighbors(m);
  const auto fit = fit_second_fundamental_form(m, g.center, Vec3(0, 0, -1), k_ring(nb, g.center, 2));
  // Outward normal -e3: inward height is +z, so the form is D^2 of the graph in the frame axes.
  const Mat2 a = fit.form.matrix();
  Mat2 E;
  E << fit.frame(0, 0), fit.frame(0, 1), fit.frame(1, 0), fit.frame(1, 1);
  const Mat2 world = E * a * E.transpose();
  EXPECT_NEAR(world(0, 0), 1.0, 3e-2);
  EXPECT_NEAR(world(1, 1), -1.0, 3e-2);
  EXPECT_NEAR(world(0, 1), 0.0, 3e-2);
}

TEST(SecondFundamentalForm, TorusIsUmbilicFree) {
  const auto m = gen_torus({1.0, 0.5, 64, 64});
  const double R = 1.0, r = 0.5;
  for (int v = 0; v < m.num_vertices(); v += 97) {
    const Vec3& x = m.vertices[v];
    const double rho = std::hypot(x.x(), x.y());
    // Principal curvatures 1/r and cos(u)/rho differ everywhere on the torus.
    const double cosu = (rho - R) / r;
    const double gap = std::abs(1.0 / r - cosu / rho);
    EXPECT_GT(gap, 0.0);
    const auto fit = second_fundamental_form_at(m, v);
    EXPECT_GT(fit.form.trace_free().pairing(fit.form.trace_free()), 0.0);
    EXPECT_NEAR(fit.form.trace_free().norm(), gap / std::sqrt(2.0), 0.05 * gap);
  }
}

TEST(SecondFundamentalForm, PairingAlgebra) {
  const SecondFundamentalForm2D A{0.3, -0.7, 1.1}, B{-0.2, 0.4, 0.9}, C{1.5, 0.1, -0.6};
  EXPECT_DOUBLE_EQ(A.pairing(B), B.pairing(A));
  EXPECT_NEAR(A.pairing(B.scaled(2.0)), 2.0 * A.pairing(B), 1e-15);
  const SecondFundamentalForm2D BC{B.a11 + C.a11, B.a12 + C.a12, B.a22 + C.a22};
  EXPECT_NEAR(A.pairing(BC), A.pairing(B) + A.pairing(C), 1e-15);
  EXPECT_EQ(A.trace_free().trace(), 0.0);
  EXPECT_DOUBLE_EQ(A.trace(), 0.3 + 1.1);
}

TEST(SecondFundamentalForm, FlatPatchIsRankDeficientOnTinyRing) {
  const auto m = tetrahedron();
  EXPECT_EQ(kind_of([&] { second_fundamental_form_at(m, 0); }), ErrorKind::RankDeficientFit);
}

TEST(RoundSphere, Classification) {
  EXPECT_TRUE(is_round_sphere(gen_icosphere(1.0, 4), 0.05));
  EXPECT_FALSE(is_round_sphere(gen_torus({1.0, 1.0 / std::sqrt(2.0), 64, 64}), 0.05));
  EXPECT_FALSE(is_round_sphere(gen_ellipsoid(1, 1, 2, 4), 0.05));
}

TEST(Properties, ScalingLaws) {
  for (const TriangleMesh& m : {gen_icosphere(1.0, 3), gen_torus({1.0, 0.4, 48, 48})}) {
    const auto s1 = measure(m);
    for (double l : {0.5, 2.0, 10.0}) {
      const auto s = measure(transformed(m, l, Mat3::Identity(), Vec3::Zero()));
      EXPECT_NEAR(s.area / (l * l * s1.area), 1.0, 1e-12);
      EXPECT_NEAR(s.volume / (l * l * l * s1.volume), 1.0, 1e-12);
      EXPECT_NEAR(*s.iso / *s1.iso, 1.0, 1e-12);
      EXPECT_NEAR(s.willmore / s1.willmore, 1.0, 1e-12);
    }
  }
}

TEST(Properties, RigidMotionInvariance) {
  const Mat3 R = Eigen::AngleAxisd(0.83, Vec3(1, -2, 0.5).normalized()).toRotationMatrix();
  for (const TriangleMesh& m : {gen_icosphere(1.0, 3), gen_torus({1.0, 0.4, 48, 48})}) {
    const auto a = measure(m), b = measure(transformed(m, 1.0, R, Vec3(3.0, -1.0, 2.5)));
    EXPECT_NEAR(b.area / a.area, 1.0, 1e-10);
    EXPECT_NEAR(b.volume / a.volume, 1.0, 1e-10);
    EXPECT_NEAR(b.willmore / a.willmore, 1.0, 1e-10);
    EXPECT_NEAR(*b.iso / *a.iso, 1.0, 1e-10);
    EXPECT_EQ(b.euler_char, a.euler_char);
    EXPECT_EQ(b.genus, a.genus);
  }
}

TEST(Properties, EmbeddedIsoperimetricInequality) {
  const double bound = std::cbrt(36.0 * kPi);
  for (int s = 0; s <= 5; ++s) EXPECT_GE(*measure(gen_icosphere(1.3, s)).iso, bound);
  EXPECT_GE(*measure(gen_torus({1.0, 0.3, 64, 64})).iso, bound);
  EXPECT_GE(*measure(gen_ellipsoid(1, 1, 2, 3)).iso, bound);
  EXPECT_GE(*measure(unit_cube()).iso, bound);
  EXPECT_GE(*measure(tetrahedron()).iso, bound);
}

TEST(Properties, EulerCharacteristicOfGenerators) {
  EXPECT_EQ(euler_characteristic(gen_icosphere(1.0, 3)), 2);
  EXPECT_EQ(euler_characteristic(gen_torus({1.0, 0.5, 32, 40})), 0);
  EXPECT_EQ(euler_characteristic(gen_ellipsoid(1, 2, 3, 2)), 2);
}
