#pragma once

#include <memory>
#include <vector>

#include "wlab/jet.hpp"
#include "wlab/measures.hpp"

namespace wlab {

// Zero set of a smooth function, negative inside, with outward pointing gradient.
class ImplicitShape {
 public:
  virtual ~ImplicitShape() = default;
  virtual Jet3 eval(const JetVec3<3>& x) const = 0;

  double value(const Vec3& x) const { return eval({Jet3(x.x()), Jet3(x.y()), Jet3(x.z())}).v; }
  Vec3 gradient(const Vec3& x) const {
    return eval({Jet3::variable(x.x(), 0), Jet3::variable(x.y(), 1), Jet3::variable(x.z(), 2)}).g;
  }
};

class SphereShape : public ImplicitShape {
 public:
  SphereShape(Vec3 center, double radius) : c_(std::move(center)), r_(radius) {}
  Jet3 eval(const JetVec3<3>& x) const override {
    return (square(x[0] - c_.x()) + square(x[1] - c_.y()) + square(x[2] - c_.z()) - r_ * r_) / (2.0 * r_);
  }

 private:
  Vec3 c_;
  double r_;
};

// Torus of revolution about the z axis.
class TorusShape : public ImplicitShape {
 public:
  TorusShape(double R, double r) : R_(R), r_(r) {}
  Jet3 eval(const JetVec3<3>& x) const override {
    const Jet3 rho = sqrt(x[0] * x[0] + x[1] * x[1]);
    return (square(rho - R_) + x[2] * x[2] - r_ * r_) / (2.0 * r_);
  }

 private:
  double R_, r_;
};

class EllipsoidShape : public ImplicitShape {
 public:
  EllipsoidShape(double a, double b, double c) : a_(a), b_(b), c_(c) {}
  Jet3 eval(const JetVec3<3>& x) const override {
    return 0.5 * (x[0] * x[0] / (a_ * a_) + x[1] * x[1] / (b_ * b_) + x[2] * x[2] / (c_ * c_) - 1.0);
  }

 private:
  double a_, b_, c_;
};

// The graph x3 = sum c_ij x1^i x2^j, with the body above it.
class PolynomialGraphShape : public ImplicitShape {
 public:
  PolynomialGraphShape(int degree, std::vector<double> coef) : deg_(degree), c_(std::move(coef)) {}
  Jet3 eval(const JetVec3<3>& x) const override {
    Jet3 p(0.0);
    int k = 0;
    for (int d = 0; d <= deg_; ++d)
      for (int i = d; i >= 0; --i) {
        const int j = d - i;
        Jet3 term(c_[k++]);
        for (int a = 0; a < i; ++a) term = term * x[0];
        for (int b = 0; b < j; ++b) term = term * x[1];
        p += term;
      }
    return p - x[2];
  }
  static int coefficient_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

 private:
  int deg_;
  std::vector<double> c_;
};

// Placement x = origin + rot * y / scale of normalized coordinates y.
struct Similarity {
  Vec3 origin = Vec3::Zero();
  Mat3 rot = Mat3::Identity();
  double scale = 1.0;

  Vec3 to_normalized(const Vec3& x) const { return scale * rot.transpose() * (x - origin); }
  Vec3 from_normalized(const Vec3& y) const { return origin + rot * y / scale; }
};

inline JetVec3<3> invert_jets(const JetVec3<3>& y) {
  const Jet3 r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
  const Jet3 inv = reciprocal(r2);
  return {y[0] * inv, y[1] * inv, y[2] * inv};
}

// A surface seen as a graph over the horizontal plane of normalized coordinates.
// With inverted set, the surface is the image I(S) - lift e3 of the normalized surface S.
struct GraphChart {
  std::shared_ptr<const ImplicitShape> shape;
  Similarity place;
  bool inverted = false;
  double lift = 0.0;

  Jet3 phi(const JetVec3<3>& y) const {
    JetVec3<3> q = y;
    if (inverted) {
      q[2] = q[2] + lift;
      q = invert_jets(q);
    }
    JetVec3<3> x;
    for (int k = 0; k < 3; ++k) {
      x[k] = Jet3(place.origin(k));
      for (int j = 0; j < 3; ++j) x[k] += q[j] * (place.rot(k, j) / place.scale);
    }
    return shape->eval(x);
  }

  Jet3 phi_at(double y1, double y2, double h) const {
    return phi({Jet3::variable(y1, 0), Jet3::variable(y2, 1), Jet3::variable(h, 2)});
  }

  // Height of the sheet through (y1, y2) nearest to guess, with exact first and second derivatives.
  bool try_height(double y1, double y2, double guess, Jet2& out) const {
    double h = guess;
    const double size = 1.0 + std::abs(y1) + std::abs(y2) + std::abs(guess);
    double last_step = std::numeric_limits<double>::infinity();
    Jet3 f;
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      f = phi_at(y1, y2, h);
      if (!(std::abs(f.g(2)) > 0.0) || !std::isfinite(f.v)) return false;
      double step = f.v / f.g(2);
      if (std::abs(step) > 0.25 * size) step = std::copysign(0.25 * size, step);
      h -= step;
      const double a = std::abs(step);
      // Shapes have gradients of order one, so |phi| near 1e-14 is rounding noise.
      if (a <= 1e-15 * size || (a <= 1e-10 * size && a >= 0.5 * last_step) || std::abs(f.v) <= 1e-14) {
        converged = true;
        break;
      }
      last_step = a;
    }
    if (!converged) return false;
    f = phi_at(y1, y2, h);
    const double fh = f.g(2);
    Vec2 dh(-f.g(0) / fh, -f.g(1) / fh);
    Mat2 hh;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        hh(i, j) = -(f.h(i, j) + f.h(i, 2) * dh(j) + f.h(j, 2) * dh(i) + f.h(2, 2) * dh(i) * dh(j)) / fh;
    out = Jet2(h, dh, hh);
    return true;
  }

  Jet2 height(double y1, double y2, double guess) const {
    Jet2 out;
    if (!try_height(y1, y2, guess, out))
      throw Error(ErrorKind::GraphSolveFailed,
                  "no graph height at (" + std::to_string(y1) + ", " + std::to_string(y2) + ")");
    return out;
  }
};

}  // namespace wlab
