/*
 Copyright 2026 The quadtune authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef QUADTUNE_DUAL_HPP
#define QUADTUNE_DUAL_HPP

#include <cmath>
#include <ostream>

#include <Eigen/Core>

namespace qtune {

/**
 * Forward-mode dual number carrying W derivative channels.
 *
 * All step kernels (dynamics, observer, controller, loss) are templated on
 * the scalar type; instantiating them with Dual<W> and seeding the tangent
 * directions yields exact per-step Jacobians in a single pass.
 */
template <int W>
struct Dual {
  double a;                        // value
  Eigen::Matrix<double, W, 1> b;   // derivative channels

  Dual() : a(0.0) { b.setZero(); }
  Dual(double value) : a(value) { b.setZero(); }  // NOLINT: implicit by design
  Dual(double value, int seed_index) : a(value) {
    b.setZero();
    b[seed_index] = 1.0;
  }

  double value() const { return a; }

  Dual& operator+=(const Dual& o) { a += o.a; b += o.b; return *this; }
  Dual& operator-=(const Dual& o) { a -= o.a; b -= o.b; return *this; }
  Dual& operator*=(const Dual& o) { b = b * o.a + o.b * a; a *= o.a; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
  Dual operator-() const { Dual r; r.a = -a; r.b = -b; return r; }

  friend Dual operator+(const Dual& x, const Dual& y) { Dual r; r.a = x.a + y.a; r.b = x.b + y.b; return r; }
  friend Dual operator-(const Dual& x, const Dual& y) { Dual r; r.a = x.a - y.a; r.b = x.b - y.b; return r; }
  friend Dual operator*(const Dual& x, const Dual& y) { Dual r; r.a = x.a * y.a; r.b = x.b * y.a + y.b * x.a; return r; }
  friend Dual operator/(const Dual& x, const Dual& y) {
    Dual r;
    const double inv = 1.0 / y.a;
    r.a = x.a * inv;
    r.b = (x.b - y.b * r.a) * inv;
    return r;
  }

  friend Dual operator+(const Dual& x, double s) { Dual r = x; r.a += s; return r; }
  friend Dual operator+(double s, const Dual& x) { Dual r = x; r.a += s; return r; }
  friend Dual operator-(const Dual& x, double s) { Dual r = x; r.a -= s; return r; }
  friend Dual operator-(double s, const Dual& x) { Dual r; r.a = s - x.a; r.b = -x.b; return r; }
  friend Dual operator*(const Dual& x, double s) { Dual r; r.a = x.a * s; r.b = x.b * s; return r; }
  friend Dual operator*(double s, const Dual& x) { return x * s; }
  friend Dual operator/(const Dual& x, double s) { return x * (1.0 / s); }
  friend Dual operator/(double s, const Dual& x) {
    Dual r;
    const double inv = 1.0 / x.a;
    r.a = s * inv;
    r.b = x.b * (-s * inv * inv);
    return r;
  }

  friend bool operator<(const Dual& x, const Dual& y) { return x.a < y.a; }
  friend bool operator>(const Dual& x, const Dual& y) { return x.a > y.a; }
  friend bool operator<=(const Dual& x, const Dual& y) { return x.a <= y.a; }
  friend bool operator>=(const Dual& x, const Dual& y) { return x.a >= y.a; }
  friend bool operator==(const Dual& x, const Dual& y) { return x.a == y.a; }
  friend bool operator!=(const Dual& x, const Dual& y) { return x.a != y.a; }
  friend bool operator<(const Dual& x, double y) { return x.a < y; }
  friend bool operator>(const Dual& x, double y) { return x.a > y; }
  friend bool operator<(double x, const Dual& y) { return x < y.a; }
  friend bool operator>(double x, const Dual& y) { return x > y.a; }

  friend std::ostream& operator<<(std::ostream& os, const Dual& x) { return os << x.a; }
};

template <int W>
Dual<W> sqrt(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::sqrt(x.a);
  r.b = x.b * (0.5 / r.a);
  return r;
}

template <int W>
Dual<W> sin(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::sin(x.a);
  r.b = x.b * std::cos(x.a);
  return r;
}

template <int W>
Dual<W> cos(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::cos(x.a);
  r.b = x.b * (-std::sin(x.a));
  return r;
}

template <int W>
Dual<W> exp(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::exp(x.a);
  r.b = x.b * r.a;
  return r;
}

template <int W>
Dual<W> log(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::log(x.a);
  r.b = x.b / x.a;
  return r;
}

template <int W>
Dual<W> acos(const Dual<W>& x) {
  Dual<W> r;
  r.a = std::acos(x.a);
  r.b = x.b * (-1.0 / std::sqrt(1.0 - x.a * x.a));
  return r;
}

template <int W>
Dual<W> atan2(const Dual<W>& y, const Dual<W>& x) {
  Dual<W> r;
  r.a = std::atan2(y.a, x.a);
  const double d = x.a * x.a + y.a * y.a;
  r.b = (y.b * x.a - x.b * y.a) / d;
  return r;
}

template <int W>
Dual<W> abs(const Dual<W>& x) {
  return x.a < 0.0 ? -x : x;
}

// Value accessors usable in scalar-generic code.
inline double value_of(double x) { return x; }
template <int W>
double value_of(const Dual<W>& x) { return x.a; }

// Saturation with the clamped-gradient convention: the derivative is zero
// whenever the bound is active.
template <class S>
S saturate(const S& x, double lo, double hi) {
  if (value_of(x) < lo) return S(lo);
  if (value_of(x) > hi) return S(hi);
  return x;
}

}  // namespace qtune

namespace Eigen {

template <int W>
struct NumTraits<qtune::Dual<W>> : NumTraits<double> {
  using Real = qtune::Dual<W>;
  using NonInteger = qtune::Dual<W>;
  using Nested = qtune::Dual<W>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1 + W,
    AddCost = 1 + W,
    MulCost = 3 + 2 * W
  };
};

template <int W, typename BinaryOp>
struct ScalarBinaryOpTraits<qtune::Dual<W>, double, BinaryOp> {
  using ReturnType = qtune::Dual<W>;
};
template <int W, typename BinaryOp>
struct ScalarBinaryOpTraits<double, qtune::Dual<W>, BinaryOp> {
  using ReturnType = qtune::Dual<W>;
};

}  // namespace Eigen

#endif  // QUADTUNE_DUAL_HPP
