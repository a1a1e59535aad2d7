#pragma once

#include <Eigen/Eigenvalues>

#include <array>
#include <functional>
#include <limits>
#include <vector>

#include "wlab/jet.hpp"
#include "wlab/surfaces.hpp"

namespace wlab {

// Value and radial derivative on |z| = gamma, then on |z| = 1.
struct ModeData {
  double inner_value = 0.0;
  double inner_slope = 0.0;
  double outer_value = 0.0;
  double outer_slope = 0.0;
};

struct FourierBoundaryData {
  double gamma = 0.1;
  std::vector<ModeData> cos_modes;  // index n = 0..N
  std::vector<ModeData> sin_modes;  // index n = 0..N, n = 0 unused

  int max_mode() const { return static_cast<int>(std::max(cos_modes.size(), sin_modes.size())) - 1; }
};

inline FourierBoundaryData combine(double a, const FourierBoundaryData& d1, double b, const FourierBoundaryData& d2) {
  FourierBoundaryData out;
  out.gamma = d1.gamma;
  auto mix = [&](const std::vector<ModeData>& x, const std::vector<ModeData>& y) {
    std::vector<ModeData> r(std::max(x.size(), y.size()));
    for (std::size_t n = 0; n < r.size(); ++n) {
      const ModeData p = n < x.size() ? x[n] : ModeData{};
      const ModeData q = n < y.size() ? y[n] : ModeData{};
      r[n] = {a * p.inner_value + b * q.inner_value, a * p.inner_slope + b * q.inner_slope,
              a * p.outer_value + b * q.outer_value, a * p.outer_slope + b * q.outer_slope};
    }
    return r;
  };
  out.cos_modes = mix(d1.cos_modes, d2.cos_modes);
  out.sin_modes = mix(d1.sin_modes, d2.sin_modes);
  return out;
}

using Coef4 = std::array<double, 4>;

struct FourierBiharmonicSolution {
  double gamma = 0.1;
  std::vector<Coef4> cos_coef;
  std::vector<Coef4> sin_coef;
  double max_residual = 0.0;   // boundary trace mismatch relative to the data norm
  double max_condition = 0.0;  // of the scaled 4x4 systems
};

// k-th radial basis function of angular mode n with its first two derivatives.
inline std::array<double, 3> radial_basis(int n, int k, double r) {
  const double L = std::log(r);
  auto power = [&](double p) -> std::array<double, 3> {
    const double v = std::pow(r, p);
    return {v, p * v / r, p * (p - 1.0) * v / (r * r)};
  };
  auto power_log = [&](double p) -> std::array<double, 3> {
    // r^p log r
    const double v = std::pow(r, p);
    return {v * L, (p * L + 1.0) * v / r, (p * (p - 1.0) * L + 2.0 * p - 1.0) * v / (r * r)};
  };
  if (n == 0) {
    switch (k) {
      case 0: return {1.0, 0.0, 0.0};
      case 1: return power(2.0);
      case 2: return {L, 1.0 / r, -1.0 / (r * r)};
      default: return power_log(2.0);
    }
  }
  if (n == 1) {
    switch (k) {
      case 0: return power(1.0);
      case 1: return power(3.0);
      case 2: return power(-1.0);
      default: return power_log(1.0);
    }
  }
  switch (k) {
    case 0: return power(n);
    case 1: return power(n + 2.0);
    case 2: return power(-n);
    default: return power(2.0 - n);
  }
}

namespace detail {

struct ModeSolve {
  Coef4 coef;
  double condition;
};

inline ModeSolve solve_mode(int n, double gamma, const ModeData& d) {
  const double rs = std::sqrt(gamma);
  Eigen::Matrix4d A;
  Eigen::Vector4d b(d.inner_value, gamma * d.inner_slope, d.outer_value, d.outer_slope);
  Eigen::Vector4d col_scale;
  for (int k = 0; k < 4; ++k) {
    const auto in = radial_basis(n, k, gamma);
    const auto out = radial_basis(n, k, 1.0);
    const double s = std::abs(radial_basis(n, k, rs)[0]);
    col_scale(k) = s > 0.0 ? s : 1.0;
    // Derivative rows are taken with respect to log r.
    A(0, k) = in[0] / col_scale(k);
    A(1, k) = gamma * in[1] / col_scale(k);
    A(2, k) = out[0] / col_scale(k);
    A(3, k) = out[1] / col_scale(k);
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A);
  const auto sv = svd.singularValues();
  const double cond = sv(3) > 0.0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12))
    throw Error(ErrorKind::IllConditioned, "mode " + std::to_string(n) + " condition " + std::to_string(cond));
  const Eigen::Vector4d x = A.fullPivLu().solve(b);
  ModeSolve out;
  for (int k = 0; k < 4; ++k) out.coef[k] = x(k) / col_scale(k);
  out.condition = cond;
  return out;
}

inline std::array<double, 3> radial_eval(int n, const Coef4& c, double r) {
  std::array<double, 3> f{0.0, 0.0, 0.0};
  for (int k = 0; k < 4; ++k) {
    if (c[k] == 0.0) continue;
    const auto b = radial_basis(n, k, r);
    for (int i = 0; i < 3; ++i) f[i] += c[k] * b[i];
  }
  return f;
}

}  // namespace detail

inline FourierBiharmonicSolution solve_annulus_biharmonic(const FourierBoundaryData& data) {
  if (!(data.gamma >= 1e-3 && data.gamma < 1.0))
    throw Error(ErrorKind::InvalidArgument, "inner radius must lie in [1e-3, 1)");
  FourierBiharmonicSolution sol;
  sol.gamma = data.gamma;
  double norm = 0.0;
  auto track = [&](const ModeData& d) {
    norm = std::max({norm, std::abs(d.inner_value), std::abs(d.inner_slope), std::abs(d.outer_value),
                     std::abs(d.outer_slope)});
  };
  for (const auto& d : data.cos_modes) track(d);
  for (const auto& d : data.sin_modes) track(d);
  auto run = [&](const std::vector<ModeData>& modes, std::vector<Coef4>& coef, bool sine) {
    coef.assign(modes.size(), Coef4{0.0, 0.0, 0.0, 0.0});
    for (std::size_t n = 0; n < modes.size(); ++n) {
      if (sine && n == 0) continue;
      const ModeData& d = modes[n];
      if (d.inner_value == 0.0 && d.inner_slope == 0.0 && d.outer_value == 0.0 && d.outer_slope == 0.0) continue;
      const auto s = detail::solve_mode(static_cast<int>(n), data.gamma, d);
      coef[n] = s.coef;
      sol.max_condition = std::max(sol.max_condition, s.condition);
      const auto in = detail::radial_eval(static_cast<int>(n), s.coef, data.gamma);
      const auto out = detail::radial_eval(static_cast<int>(n), s.coef, 1.0);
      const double res = std::max({std::abs(in[0] - d.inner_value), std::abs(in[1] - d.inner_slope),
                                   std::abs(out[0] - d.outer_value), std::abs(out[1] - d.outer_slope)});
      if (norm > 0.0) sol.max_residual = std::max(sol.max_residual, res / norm);
    }
  };
  run(data.cos_modes, sol.cos_coef, false);
  run(data.sin_modes, sol.sin_coef, true);
  return sol;
}

// Cartesian jet of a function given its polar partial derivatives.
inline Jet2 polar_to_cartesian(double r, double th, double w, double wr, double wt, double wrr, double wrt,
                               double wtt) {
  const double c = std::cos(th), s = std::sin(th);
  Mat2 q;
  q << c, -s, s, c;
  Mat2 hp;
  const double hrt = wrt / r - wt / (r * r);
  hp << wrr, hrt, hrt, wr / r + wtt / (r * r);
  return Jet2(w, q * Vec2(wr, wt / r), q * hp * q.transpose());
}

inline Jet2 evaluate_bridge(const FourierBiharmonicSolution& sol, double r, double th) {
  const double eps = 1e-12;
  if (!(r >= sol.gamma * (1.0 - eps) && r <= 1.0 + eps))
    throw Error(ErrorKind::OutOfDomain, "radius " + std::to_string(r) + " outside the annulus");
  double w = 0, wr = 0, wt = 0, wrr = 0, wrt = 0, wtt = 0;
  auto add = [&](const std::vector<Coef4>& coef, bool sine) {
    for (std::size_t n = 0; n < coef.size(); ++n) {
      const Coef4& c = coef[n];
      if (c[0] == 0.0 && c[1] == 0.0 && c[2] == 0.0 && c[3] == 0.0) continue;
      const auto f = detail::radial_eval(static_cast<int>(n), c, r);
      const double nn = static_cast<double>(n);
      const double a = sine ? std::sin(nn * th) : std::cos(nn * th);
      const double da = sine ? nn * std::cos(nn * th) : -nn * std::sin(nn * th);
      w += f[0] * a;
      wr += f[1] * a;
      wrr += f[2] * a;
      wt += f[0] * da;
      wrt += f[1] * da;
      wtt += -nn * nn * f[0] * a;
    }
  };
  add(sol.cos_coef, false);
  add(sol.sin_coef, true);
  return polar_to_cartesian(r, th, w, wr, wt, wrr, wrt, wtt);
}

struct LinearityReport {
  double max_relative_residual = 0.0;
};

inline LinearityReport linearity_check(const FourierBoundaryData& d1, const FourierBoundaryData& d2, double a,
                                       double b) {
  const auto s1 = solve_annulus_biharmonic(d1);
  const auto s2 = solve_annulus_biharmonic(d2);
  const auto s = solve_annulus_biharmonic(combine(a, d1, b, d2));
  double scale = 0.0, worst = 0.0;
  auto compare = [&](const std::vector<Coef4>& c, const std::vector<Coef4>& c1, const std::vector<Coef4>& c2) {
    for (std::size_t n = 0; n < c.size(); ++n)
      for (int k = 0; k < 4; ++k) {
        const double x1 = n < c1.size() ? c1[n][k] : 0.0;
        const double x2 = n < c2.size() ? c2[n][k] : 0.0;
        const double expect = a * x1 + b * x2;
        scale = std::max({scale, std::abs(a * x1), std::abs(b * x2), std::abs(c[n][k])});
        worst = std::max(worst, std::abs(c[n][k] - expect));
      }
  };
  compare(s.cos_coef, s1.cos_coef, s2.cos_coef);
  compare(s.sin_coef, s1.sin_coef, s2.sin_coef);
  return {scale > 0.0 ? worst / scale : worst};
}

// Gauss-Legendre nodes and weights on [-1, 1] by the Golub-Welsch eigenproblem.
struct GaussLegendre {
  std::vector<double> x, w;
};

inline GaussLegendre gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussLegendre g;
  for (int i = 0; i < n; ++i) {
    g.x.push_back(es.eigenvalues()(i));
    g.w.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return g;
}

struct GraphIntegrands {
  double area_excess;  // sqrt(1 + |Dw|^2) - 1
  double willmore;     // H^2 sqrt(1 + |Dw|^2) / 4
  double volume_flux;  // (w - z.Dw) / 3, upward normal
  double volume_bound; // |z||Dw| + |w|
};

inline GraphIntegrands graph_integrands(double x, double y, const Jet2& j) {
  const double p = j.g(0), q = j.g(1);
  const double g2 = p * p + q * q;
  const double s = std::sqrt(1.0 + g2);
  const double H = ((1.0 + q * q) * j.h(0, 0) - 2.0 * p * q * j.h(0, 1) + (1.0 + p * p) * j.h(1, 1)) / (s * s * s);
  return {g2 / (s + 1.0), 0.25 * H * H * s, (j.v - x * p - y * q) / 3.0,
          std::hypot(x, y) * std::sqrt(g2) + std::abs(j.v)};
}

using GraphHandle = std::function<Jet2(double x, double y)>;

struct GraphEnergetics {
  double area = 0.0;         // infinite on unbounded domains
  double area_excess = 0.0;  // area minus the flat domain area
  double willmore = 0.0;
  double volume_flux = 0.0;  // (1/3) of the flux of the position through the graph, upward normal
  double volume_integrand_bound = 0.0;
  int n_r = 0;
  int n_theta = 0;
  double max_relative_change = 0.0;  // against the half-order rule
  bool diverged = false;             // QuadratureDivergence: refinement changed an output by more than 1e-4
};

struct PolarDomain {
  double inner = 0.0;
  double outer = 1.0;  // may be infinite
  std::vector<double> breaks;  // interior radii where the integrand loses smoothness
};

namespace detail {

inline GraphEnergetics integrate_graph(const GraphHandle& w, const PolarDomain& dom, int n_r, int n_theta) {
  std::vector<double> edges{dom.inner};
  for (double b : dom.breaks)
    if (b > dom.inner && b < dom.outer) edges.push_back(b);
  const bool infinite = std::isinf(dom.outer);
  if (!infinite) edges.push_back(dom.outer);
  std::sort(edges.begin(), edges.end());
  const GaussLegendre gl = gauss_legendre(n_r);
  GraphEnergetics e;
  e.n_r = n_r;
  e.n_theta = n_theta;
  const double dth = 2.0 * kPi / n_theta;
  auto ring = [&](double r, double weight) {
    for (int j = 0; j < n_theta; ++j) {
      const double th = (j + 0.5) * dth;
      const double x = r * std::cos(th), y = r * std::sin(th);
      const GraphIntegrands g = graph_integrands(x, y, w(x, y));
      const double m = weight * r * dth;
      e.area_excess += m * g.area_excess;
      e.willmore += m * g.willmore;
      e.volume_flux += m * g.volume_flux;
      e.volume_integrand_bound += m * g.volume_bound;
    }
  };
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    for (int i = 0; i < n_r; ++i) ring(0.5 * (a + b) + 0.5 * (b - a) * gl.x[i], 0.5 * (b - a) * gl.w[i]);
  }
  if (infinite) {
    // r = r0 / x maps x in (0, 1] onto [r0, infinity).
    const double r0 = edges.back();
    for (int i = 0; i < n_r; ++i) {
      const double x = 0.5 + 0.5 * gl.x[i];
      ring(r0 / x, 0.5 * gl.w[i] * r0 / (x * x));
    }
    e.area = std::numeric_limits<double>::infinity();
    e.volume_flux = std::numeric_limits<double>::quiet_NaN();
    e.volume_integrand_bound = std::numeric_limits<double>::infinity();
  } else {
    e.area = kPi * (dom.outer * dom.outer - dom.inner * dom.inner) + e.area_excess;
  }
  return e;
}

}  // namespace detail

inline GraphEnergetics graph_energetics(const GraphHandle& w, const PolarDomain& dom, int n_r = 64, int n_theta = 256,
                                        bool check_refinement = true) {
  if (!(dom.inner >= 0.0 && dom.inner < dom.outer))
    throw Error(ErrorKind::InvalidArgument, "polar domain needs 0 <= inner < outer");
  if (!check_refinement) return detail::integrate_graph(w, dom, n_r, n_theta);
  const GraphEnergetics coarse = detail::integrate_graph(w, dom, n_r, n_theta);
  GraphEnergetics fine = detail::integrate_graph(w, dom, 2 * n_r, 2 * n_theta);
  auto rel = [](double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return 0.0;
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? std::abs(a - b) / s : 0.0;
  };
  fine.max_relative_change = std::max({rel(coarse.area, fine.area), rel(coarse.willmore, fine.willmore),
                                       rel(coarse.volume_flux, fine.volume_flux)});
  fine.diverged = fine.max_relative_change > 1e-4;
  return fine;
}

}  // namespace wlab
