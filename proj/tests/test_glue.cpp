#include <gtest/gtest.h>

#include <random>

#include "wlab/glue.hpp"

using namespace wlab;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

struct Pair {
  Surface f1 = torus_surface({1.0, 0.4, 96, 96});
  Surface f2 = torus_surface({1.0, 0.6, 96, 96});
  int p1 = choose_gluing_vertex(f1);
  int p2 = choose_gluing_vertex(f2);
  SurfaceMeasures m1 = measure(f1.mesh);
  SurfaceMeasures m2 = measure(f2.mesh);
};

const Pair& tori() {
  static const Pair p;
  return p;
}

GluingParams at(double alpha) {
  GluingParams g;
  g.alpha = alpha;
  return g;
}

// Every way of writing g as a sum of parts in [1, g - 1], without order.
void partitions(int rest, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (rest == 0) {
    if (cur.size() >= 2) out.push_back(cur);
    return;
  }
  for (int k = std::min(rest, max_part); k >= 1; --k) {
    cur.push_back(k);
    partitions(rest - k, k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST(Normalize, TorusOuterEquator) {
  const double R = 1.0, r = 0.5;
  const auto m = gen_torus({R, r, 128, 128});
  int p = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (m.vertices[v].x() > m.vertices[p].x()) p = v;
  const auto n = normalize_at_point(m, p);
  EXPECT_EQ(n.mesh.vertices[p], Vec3::Zero());
  const Eigen::SelfAdjointEigenSolver<Mat2> es(n.form.matrix());
  EXPECT_NEAR(es.eigenvalues()(0), 1.0 / (R + r), 0.02);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0 / r, 0.04);
}

TEST(Normalize, AnalyticSideIsExact) {
  const auto side = prepare_side(torus_surface({1.0, 0.5, 64, 64}), 0);
  const Eigen::SelfAdjointEigenSolver<Mat2> es(side.norm.form.matrix());
  EXPECT_NEAR(es.eigenvalues()(0), 1.0 / 1.5, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(1), 2.0, 1e-12);
  const Jet2 h = side.chart.height(0.0, 0.0, 0.0);
  EXPECT_NEAR(h.v, 0.0, 1e-14);
  EXPECT_LE(h.g.norm(), 1e-12);
}

TEST(Normalize, AlreadyNormalizedIsFixed) {
  const Surface s = torus_surface({1.0, 0.5, 64, 64});
  const auto once = prepare_side(s, 0);
  const Surface moved{once.norm.mesh, nullptr, "moved"};
  const auto twice = prepare_side(moved, 0);
  EXPECT_LE((twice.norm.motion.rot - Mat3::Identity()).norm(), 1e-10);
  EXPECT_LE(twice.norm.motion.origin.norm(), 1e-10);
}

TEST(Normalize, IcosphereIsUmbilic) {
  EXPECT_EQ(kind_of([] { prepare_side(icosphere_surface(1.0, 3), 0); }), ErrorKind::UmbilicPoint);
}

TEST(Align, TrivialPairs) {
  const SecondFundamentalForm2D P{1, 0, -1}, Q{1, 0, -1}, Qn{-1, 0, 1};
  EXPECT_NEAR(align_orientation(P, Q), 0.0, 1e-15);
  EXPECT_NEAR(P.pairing(Q.rotated(align_orientation(P, Q))), 2.0, 1e-12);
  EXPECT_NEAR(std::abs(align_orientation(P, Qn)), kPi / 2, 1e-12);
  EXPECT_NEAR(P.pairing(Qn.rotated(align_orientation(P, Qn))), 2.0, 1e-12);
}

TEST(Align, BruteForceOverAngles) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
    const SecondFundamentalForm2D P{a, b, -a}, Q{c, d, -c};
    double best = -1e300;
    for (int k = 0; k < 10000; ++k) best = std::max(best, P.pairing(Q.rotated(2 * kPi * k / 10000)));
    const double got = P.pairing(Q.rotated(align_orientation(P, Q)));
    EXPECT_NEAR(got, std::hypot(P.pairing(Q), P.pairing(Q.rotated(kPi / 4))), 1e-12);
    EXPECT_GE(got, best - 1e-12);
    EXPECT_LE(got - best, 1e-6 * std::abs(got));
  }
}

TEST(Align, OrthogonalIsDegenerate) {
  EXPECT_EQ(kind_of([] { align_orientation({1, 0, -1}, {0, 0, 0}); }), ErrorKind::DegeneratePair);
}

TEST(OmegaG, SmallCases) {
  const double b1 = 2 * kPi * kPi;
  EXPECT_TRUE(std::isinf(omega_g(1, {})));
  EXPECT_NEAR(omega_g(2, {{1, b1}}), 4 * kPi * kPi - 4 * kPi, 1e-12);
  const double three = std::min(4 * kPi + 3 * (b1 - 4 * kPi), 4 * kPi + (b1 - 4 * kPi) + (b1 + 1 - 4 * kPi));
  EXPECT_NEAR(omega_g(3, {{1, b1}, {2, b1 + 1}}), three, 1e-12);
  EXPECT_EQ(kind_of([] { omega_g(3, {{1, 1.0}}); }), ErrorKind::MissingBeta);
}

TEST(OmegaG, BruteForcePartitions) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(12.0, 30.0);
  for (int g = 2; g <= 6; ++g) {
    std::map<int, double> beta;
    for (int k = 1; k < g; ++k) beta[k] = U(rng);
    std::vector<std::vector<int>> parts;
    std::vector<int> cur;
    partitions(g, g - 1, cur, parts);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : parts) {
      double w = 4 * kPi;
      for (int k : p) w += beta[k] - 4 * kPi;
      best = std::min(best, w);
    }
    EXPECT_NEAR(omega_g(g, beta), best, 1e-12) << g;
  }
}

TEST(GluingVertex, TorusPicksInnerEquator) {
  const auto& t = tori();
  EXPECT_NEAR(std::hypot(t.f1.mesh.vertices[t.p1].x(), t.f1.mesh.vertices[t.p1].y()), 0.6, 1e-12);
  EXPECT_NEAR(t.f1.mesh.vertices[t.p1].z(), 0.0, 1e-12);
}

TEST(ConnectedSum, TorusTorusTopology) {
  const auto& t = tori();
  const GluedSurface g = connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.02));
  const auto s = measure(g.mesh);
  EXPECT_EQ(s.genus, 2);
  EXPECT_EQ(s.euler_char, -2);
  EXPECT_TRUE(g.mesh.closed);
  EXPECT_NO_THROW(validate_mesh(g.mesh));
  int counts[4] = {0, 0, 0, 0};
  for (Piece p : g.mesh.pieces) ++counts[static_cast<int>(p)];
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[1] + counts[2] + counts[3], g.mesh.num_faces());
  EXPECT_GT(counts[1], 0);
  EXPECT_GT(counts[2], 0);
  EXPECT_GT(counts[3], 0);
}

TEST(ConnectedSum, TorusEllipsoidTopology) {
  const auto& t = tori();
  const Surface e = ellipsoid_surface(1, 1, 2, 4);
  const auto s = measure(connected_sum(t.f1, e, at(0.02)).mesh);
  EXPECT_EQ(s.genus, 1);
  EXPECT_EQ(s.euler_char, 0);
}

TEST(ConnectedSum, ZonesAgree) {
  const auto& t = tori();
  const GluedSurface g = connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.02));
  const double b = std::sqrt(g.alpha);
  for (int j = 0; j < 16; ++j) {
    const double th = 2 * kPi * (j + 0.3) / 16;
    auto check = [&](double r, const GraphHandle& other) {
      const Jet2 a = g.w(r * std::cos(th), r * std::sin(th)), c = other(r * std::cos(th), r * std::sin(th));
      EXPECT_NEAR(a.v, c.v, 1e-8) << r;
      EXPECT_LE((a.g - c.g).norm(), 1e-8) << r;
    };
    check(g.gamma - 0.75 * g.gamma * b, g.u);
    check(g.rho_u, g.u);
    check(1.0 + 0.75 * b, g.v);
    check(g.rho_v, g.v);
    // across the bridge boundaries the Dirichlet and Neumann data match
    const double eps = 1e-9;
    for (double r : {g.gamma, 1.0}) {
      const Jet2 in = g.w((r - eps) * std::cos(th), (r - eps) * std::sin(th));
      const Jet2 out = g.w((r + eps) * std::cos(th), (r + eps) * std::sin(th));
      EXPECT_NEAR(in.v, out.v, 1e-8) << r;
      EXPECT_LE((in.g - out.g).norm(), 1e-7) << r;
    }
  }
}

TEST(ConnectedSum, BandTooWide) {
  // A fine f1, mildly shrunk, with a one-edge hole: the inverted cap reaches into the bridge.
  const auto& t = tori();
  GluingParams p = at(0.08);
  p.kappa = 0.3;
  p.gamma = 0.3;
  p.hole_edges = 1.0;
  const Surface fine = torus_surface({1.0, 0.4, 192, 192});
  EXPECT_EQ(kind_of([&] { connected_sum(fine, t.f2, p); }), ErrorKind::BandTooWide);
  p.alpha = 0.04;
  EXPECT_NO_THROW(connected_sum(fine, t.f2, p));
}

TEST(ConnectedSum, ParamsAreValidated) {
  const auto& t = tori();
  GluingParams p = at(0.02);
  p.m = 2.5;
  EXPECT_EQ(kind_of([&] { connected_sum(t.f1, t.p1, t.f2, t.p2, p); }), ErrorKind::InvalidArgument);
  p = at(0.02);
  p.gamma = 1.0;
  EXPECT_EQ(kind_of([&] { connected_sum(t.f1, t.p1, t.f2, t.p2, p); }), ErrorKind::InvalidArgument);
}

TEST(Excess, TwoAlphas) {
  const auto& t = tori();
  const auto e1 = energy_iso_excess(connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.04)), t.m1, t.m2);
  const auto e2 = energy_iso_excess(connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.02)), t.m1, t.m2);
  EXPECT_LT(e1.dW_excess, 0.0);
  EXPECT_LT(e2.dW_excess, 0.0);
  const double ratio = e1.dW_excess / e2.dW_excess;
  EXPECT_GE(ratio, 3.2);
  EXPECT_LE(ratio, 5.0);
  EXPECT_GE(std::abs(e1.dIso / e2.dIso), 4.5);
  EXPECT_FALSE(e1.diverged);
}

TEST(Excess, DoublingT) {
  const auto& t = tori();
  const GluedSurface g = connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.02));
  GluingParams p = at(0.02);
  p.t = 2 * g.t;
  const GluedSurface h = connected_sum(t.f1, t.p1, t.f2, t.p2, p);
  const auto Pc = g.P.trace_free(), Qc = g.Q.trace_free();
  const double shift = -kPi * g.alpha * g.alpha * Pc.pairing(Qc) * g.t;
  const auto eg = energy_iso_excess(g, t.m1, t.m2), eh = energy_iso_excess(h, t.m1, t.m2);
  EXPECT_NEAR(eh.predicted - eg.predicted, shift, 1e-12 * std::abs(shift));
  EXPECT_LT(eh.dW_excess, eg.dW_excess);
}

TEST(Excess, FarMeshResolutionCancels) {
  // Analytic charts make the energy excess independent of the meshes away from the patch.
  const auto& t = tori();
  const Surface f2b = torus_surface({1.0, 0.6, 128, 128});
  const auto a = energy_iso_excess(connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.02)), t.m1, t.m2);
  const auto b = energy_iso_excess(connected_sum(t.f1, f2b, at(0.02)), t.m1, measure(f2b.mesh));
  EXPECT_NEAR(b.dW_excess / a.dW_excess, 1.0, 1e-6);
}

TEST(Sweep, SlopesAndLeadingCoefficient) {
  const auto& t = tori();
  const auto r = sweep_alpha(t.f1, t.p1, t.f2, t.p2, 0.0, 0.1, {0.08, 0.04, 0.02, 0.01});
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i].alpha, r.rows[i - 1].alpha);
  for (const auto& row : r.rows) EXPECT_LT(row.dW_excess, 0.0);
  EXPECT_GE(r.dW_slope.slope, 1.7);
  EXPECT_LE(r.dW_slope.slope, 2.3);
  EXPECT_GE(r.dIso_slope.slope, 2.2);
  const auto& last = r.rows.back();
  const double ratio = last.dW_excess / (last.alpha * last.alpha * r.predicted_coefficient);
  EXPECT_GE(ratio, 0.5);
  EXPECT_LE(ratio, 2.0);
  EXPECT_GT(r.dW_slope.half_width, 0.0);
}

TEST(Sweep, NeedsFourDecreasingAlphas) {
  const auto& t = tori();
  EXPECT_EQ(kind_of([&] { sweep_alpha(t.f1, t.p1, t.f2, t.p2, 0.0, 0.1, {0.08, 0.04, 0.02}); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { sweep_alpha(t.f1, t.p1, t.f2, t.p2, 0.0, 0.1, {0.08, 0.02, 0.04, 0.01}); }),
            ErrorKind::InvalidArgument);
}

TEST(LogLogSlope, ExactPowerLaw) {
  const std::vector<double> x{0.08, 0.04, 0.02, 0.01}, y{-3 * 0.0064, -3 * 0.0016, -3 * 0.0004, -3 * 0.0001};
  const auto f = loglog_slope(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.half_width, 0.0, 1e-9);
}

TEST(Harness, TorusTorus) {
  const auto& t = tori();
  const auto r = theorem_harness(t.f1, t.f2);
  EXPECT_LE(std::abs(r.iso_glued - r.iso_f2), 1e-3 * r.iso_f2);
  EXPECT_GT(r.w_margin, 0.0);
  EXPECT_LT(r.w_glued, r.w_bound);
  EXPECT_EQ(r.measured.genus, 2);
  EXPECT_LE(std::abs(r.s_star), std::pow(r.alpha_star, 2.25));
}

TEST(Harness, TorusEllipsoid) {
  const auto& t = tori();
  const auto r = theorem_harness(t.f1, ellipsoid_surface(1, 1, 2, 4));
  EXPECT_GT(r.w_margin, 0.0);
  EXPECT_EQ(r.measured.genus, 1);
}

TEST(Harness, SphereIsRejected) {
  const auto& t = tori();
  EXPECT_EQ(kind_of([&] { theorem_harness(icosphere_surface(1.0, 3), t.f2); }), ErrorKind::UmbilicPoint);
}

TEST(Harness, NoMarginReportsTrials) {
  const auto& t = tori();
  HarnessOptions opt;
  opt.margin_factor = 1e12;
  CertifiedResult res;
  EXPECT_EQ(kind_of([&] { run_theorem_harness(t.f1, t.f2, opt, res); }), ErrorKind::NoNegativeExcess);
  EXPECT_EQ(res.trials.size(), 5u);
}

TEST(Harness, IsoMonotoneAcrossBracket) {
  const auto& t = tori();
  const GluedSurface g = connected_sum(t.f1, t.p1, t.f2, t.p2, at(0.08));
  const auto ex = energy_iso_excess(g, t.m1, t.m2);
  const int pv = select_variation_point(t.f2.mesh, t.p2);
  const auto var = build_variation(t.f2.mesh, pv, 5.0 * mean_edge_length(t.f2.mesh), t.p2);
  const double smax = std::pow(0.08, 2.25), b = g.beta;
  double last = std::numeric_limits<double>::infinity();
  for (int k = -8; k <= 8; ++k) {
    const double s = smax * k / 8;
    const auto moved = measure(displaced(t.f2.mesh, var.xi, s));
    const double a = moved.area / t.m2.area - 1.0 + b * b * ex.delta_area / t.m2.area;
    const double v = moved.volume / t.m2.volume - 1.0 + b * b * b * ex.delta_volume / t.m2.volume;
    const double gap = iso_shift(*t.m2.iso, a, v);
    EXPECT_LT(gap, last) << s;
    last = gap;
  }
}
