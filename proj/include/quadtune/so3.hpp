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

#ifndef QUADTUNE_SO3_HPP
#define QUADTUNE_SO3_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "quadtune/dual.hpp"

namespace qtune {

template <class S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3T = Eigen::Matrix<S, 3, 3>;

/// Skew-symmetric map: hat(w) * x == w x x.
template <class S>
Mat3T<S> hat(const Vec3T<S>& w) {
  Mat3T<S> m;
  m << S(0.0), -w(2), w(1),
       w(2), S(0.0), -w(0),
       -w(1), w(0), S(0.0);
  return m;
}

/// Inverse of hat for the antisymmetric part of M (no symmetry check).
template <class S>
Vec3T<S> vee_unchecked(const Mat3T<S>& m) {
  Vec3T<S> w;
  w << S(0.5) * (m(2, 1) - m(1, 2)),
       S(0.5) * (m(0, 2) - m(2, 0)),
       S(0.5) * (m(1, 0) - m(0, 1));
  return w;
}

/// Inverse of hat; rejects matrices whose symmetric part exceeds tol.
inline Eigen::Vector3d vee(const Eigen::Matrix3d& m, double tol = 1e-8) {
  const double sym = 0.5 * (m + m.transpose()).cwiseAbs().maxCoeff();
  if (sym > tol) {
    throw std::invalid_argument("vee: matrix is not antisymmetric");
  }
  return vee_unchecked<double>(m);
}

/// Rodrigues exponential. Series branch below ||w||^2 ~ 1e-16 keeps the
/// derivative channels finite at zero.
template <class S>
Mat3T<S> exp_so3(const Vec3T<S>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S th2 = w.squaredNorm();
  const Mat3T<S> wh = hat(w);
  if (value_of(th2) < 1e-16) {
    return Mat3T<S>::Identity() + wh + wh * wh * S(0.5);
  }
  const S th = sqrt(th2);
  const S s = sin(th) / th;
  const S c = (S(1.0) - cos(th)) / th2;
  return Mat3T<S>::Identity() + wh * s + wh * wh * c;
}

/**
 * Logarithm on SO(3). Assumes a valid rotation matrix; the angle is clamped
 * to [0, pi). The small-angle branch switches on the value part only, so the
 * function is dual-safe near the identity.
 */
template <class S>
Vec3T<S> log_so3(const Mat3T<S>& r) {
  using std::acos;
  using std::sin;
  const S c_raw = (r.trace() - S(1.0)) * S(0.5);
  const S c = saturate(c_raw, -1.0 + 1e-12, 1.0);
  const Vec3T<S> v = vee_unchecked(r);  // sin(th) * axis
  const double cv = value_of(c);
  if (cv > 1.0 - 1e-8) {
    // th/sin(th) ~ 1 + th^2/6, th^2 ~ 2(1 - c)
    const S th2 = (S(1.0) - c) * S(2.0);
    return v * (S(1.0) + th2 * (1.0 / 6.0));
  }
  const S th = acos(c);
  return v * (th / sin(th));
}

/// Frobenius distance from orthonormality, ||R^T R - I||_F.
inline double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
}

/// Re-orthonormalize via one Gram-Schmidt pass (used only by long-running
/// perturbed simulations; the nominal integrator preserves SO(3) exactly).
inline Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::Vector3d b1 = r.col(0).normalized();
  Eigen::Vector3d b2 = (r.col(1) - b1 * b1.dot(r.col(1))).normalized();
  Eigen::Vector3d b3 = b1.cross(b2);
  Eigen::Matrix3d out;
  out << b1, b2, b3;
  return out;
}

}  // namespace qtune

#endif  // QUADTUNE_SO3_HPP
