#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace wlab {

// Second order forward jet in N variables: value, gradient and Hessian.
template <int N>
struct Jet {
  using Grad = Eigen::Matrix<double, N, 1>;
  using Hess = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Grad g = Grad::Zero();
  Hess h = Hess::Zero();

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  Jet(double value, const Grad& grad, const Hess& hess) : v(value), g(grad), h(hess) {}

  static Jet variable(double value, int i) {
    Jet j(value);
    j.g(i) = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& b) {
    v += b.v;
    g += b.g;
    h += b.h;
    return *this;
  }
  Jet& operator-=(const Jet& b) {
    v -= b.v;
    g -= b.g;
    h -= b.h;
    return *this;
  }
};

template <int N>
Jet<N> operator-(const Jet<N>& a) {
  return {-a.v, -a.g, -a.h};
}
template <int N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) {
  return a += b;
}
template <int N>
Jet<N> operator-(Jet<N> a, const Jet<N>& b) {
  return a -= b;
}
template <int N>
Jet<N> operator+(Jet<N> a, double b) {
  a.v += b;
  return a;
}
template <int N>
Jet<N> operator+(double b, Jet<N> a) {
  a.v += b;
  return a;
}
template <int N>
Jet<N> operator-(Jet<N> a, double b) {
  a.v -= b;
  return a;
}
template <int N>
Jet<N> operator-(double b, const Jet<N>& a) {
  return {b - a.v, -a.g, -a.h};
}
template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g,
          a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose()};
}
template <int N>
Jet<N> operator*(Jet<N> a, double s) {
  a.v *= s;
  a.g *= s;
  a.h *= s;
  return a;
}
template <int N>
Jet<N> operator*(double s, Jet<N> a) {
  return a * s;
}

// Applies a scalar function given its value and first two derivatives at a.v.
template <int N>
Jet<N> chain(const Jet<N>& a, double f, double df, double d2f) {
  return {f, df * a.g, df * a.h + d2f * a.g * a.g.transpose()};
}

template <int N>
Jet<N> reciprocal(const Jet<N>& a) {
  const double r = 1.0 / a.v;
  return chain(a, r, -r * r, 2.0 * r * r * r);
}
template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  return a * reciprocal(b);
}
template <int N>
Jet<N> operator/(Jet<N> a, double s) {
  return a * (1.0 / s);
}
template <int N>
Jet<N> operator/(double s, const Jet<N>& a) {
  return reciprocal(a) * s;
}
template <int N>
Jet<N> sqrt(const Jet<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N>
Jet<N> log(const Jet<N>& a) {
  return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
template <int N>
Jet<N> square(const Jet<N>& a) {
  return a * a;
}
inline double square(double a) { return a * a; }

template <int N>
using JetVec3 = std::array<Jet<N>, 3>;

using Jet2 = Jet<2>;
using Jet3 = Jet<3>;

}  // namespace wlab
