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

#ifndef QUADTUNE_CONTROLLER_HPP
#define QUADTUNE_CONTROLLER_HPP

#include "quadtune/observer.hpp"
#include "quadtune/reference.hpp"

namespace qtune {

/// Axis-wise geometric controller gains, theta in R^12.
struct ControllerGains {
  Eigen::Vector3d k_p = {6.0, 6.0, 8.0};
  Eigen::Vector3d k_v = {4.0, 4.0, 5.0};
  Eigen::Vector3d k_R = {8.0, 8.0, 4.0};
  Eigen::Vector3d k_Omega = {0.8, 0.8, 0.8};

  Eigen::Matrix<double, 12, 1> as_vector() const {
    Eigen::Matrix<double, 12, 1> v;
    v << k_p, k_v, k_R, k_Omega;
    return v;
  }
  static ControllerGains from_vector(const Eigen::Matrix<double, 12, 1>& v) {
    ControllerGains g;
    g.k_p = v.segment<3>(0);
    g.k_v = v.segment<3>(3);
    g.k_R = v.segment<3>(6);
    g.k_Omega = v.segment<3>(9);
    return g;
  }
};

/// Element-wise safety box for Theta = [theta(12), psi(6)].
struct GainBounds {
  Eigen::Matrix<double, 18, 1> lo;
  Eigen::Matrix<double, 18, 1> hi;

  GainBounds() {
    lo << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.1, 0.1,
        1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
    hi << 24.0, 24.0, 24.0, 24.0, 24.0, 24.0, 30.0, 30.0, 30.0, 8.0, 8.0, 8.0,
        50.0, 50.0, 50.0, 50.0, 50.0, 50.0;
  }

  Eigen::Matrix<double, 18, 1> clamp(const Eigen::Matrix<double, 18, 1>& v) const {
    return v.cwiseMax(lo).cwiseMin(hi);
  }
  bool contains(const Eigen::Matrix<double, 18, 1>& v, double tol = 1e-12) const {
    return (v.array() >= lo.array() - tol).all() && (v.array() <= hi.array() + tol).all();
  }
};

inline Eigen::Matrix<double, 18, 1> pack_gains(const ControllerGains& c,
                                               const ObserverGains& o) {
  Eigen::Matrix<double, 18, 1> v;
  v << c.as_vector(), o.as_vector();
  return v;
}

/**
 * Geometric SE(3) tracking law evaluated on the observer estimate.
 *
 * Desired force: F_d = -k_p.e_p - k_v.e_v - m g e3 + m a_d - dhat_f (world z
 * down). Thrust is the projection of F_d on the body z axis, the desired
 * attitude is built from b3d = -F_d/||F_d|| and the reference yaw. Torque
 * uses the standard attitude errors with gyroscopic feedforward and
 * disturbance-torque compensation. Thrust and per-axis torque saturate with
 * the clamped-gradient convention.
 *
 * `fallback_b3d` replaces the desired thrust direction when ||F_d|| falls
 * below 1e-6 (free-fall singularity); the rollout supplies the previously
 * commanded direction.
 */
template <class S>
ControlInputT<S> control_law(const ObserverStateT<S>& xhat, const RefPoint& ref,
                             const Vec3T<S>& k_p, const Vec3T<S>& k_v,
                             const Vec3T<S>& k_R, const Vec3T<S>& k_Omega,
                             const QuadParams& prm,
                             const Eigen::Vector3d& fallback_b3d,
                             Eigen::Vector3d* b3d_out = nullptr) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vec3T<S> e3 = Vec3T<S>(S(0.0), S(0.0), S(1.0));

  Vec3T<S> F_d;
  for (int i = 0; i < 3; ++i) {
    const S e_p = xhat.sys.p(i) - S(ref.p_d(i));
    const S e_v = xhat.sys.v(i) - S(ref.v_d(i));
    F_d(i) = -k_p(i) * e_p - k_v(i) * e_v + S(prm.m * ref.a_d(i)) - xhat.dhat_f(i);
  }
  F_d(2) -= S(prm.m * prm.g);

  ControlInputT<S> u;
  u.f = saturate(S(-F_d.dot(xhat.sys.R * e3)), 0.0, prm.f_max());

  Vec3T<S> b3d;
  const S fn2 = F_d.squaredNorm();
  if (value_of(fn2) < 1e-12) {
    b3d = fallback_b3d.cast<S>();  // constant branch, zero slope
  } else {
    b3d = -F_d / sqrt(fn2);
  }
  if (b3d_out != nullptr) {
    for (int i = 0; i < 3; ++i) (*b3d_out)(i) = value_of(b3d(i));
  }

  Vec3T<S> b1c = Vec3T<S>(S(cos(ref.yaw_d)), S(sin(ref.yaw_d)), S(0.0));
  Vec3T<S> b2d = b3d.cross(b1c);
  S b2n2 = b2d.squaredNorm();
  if (value_of(b2n2) < 1e-12) {
    // Heading axis parallel to thrust axis; use the orthogonal heading.
    b1c = Vec3T<S>(S(-sin(ref.yaw_d)), S(cos(ref.yaw_d)), S(0.0));
    b2d = b3d.cross(b1c);
    b2n2 = b2d.squaredNorm();
  }
  b2d = b2d / sqrt(b2n2);
  const Vec3T<S> b1d = b2d.cross(b3d);
  Mat3T<S> R_d;
  R_d.col(0) = b1d;
  R_d.col(1) = b2d;
  R_d.col(2) = b3d;

  const Mat3T<S> M = R_d.transpose() * xhat.sys.R;
  // 1/2 vee(R_d^T R - R^T R_d) == antisymmetric-part vee of M.
  const Vec3T<S> e_R = vee_unchecked<S>(M);
  const Vec3T<S> Omega_d = Vec3T<S>(S(0.0), S(0.0), S(ref.yaw_rate_d));
  const Vec3T<S> e_Omega =
      xhat.sys.Omega - xhat.sys.R.transpose() * (R_d * Omega_d);

  const Vec3T<S> JOm(xhat.sys.Omega(0) * S(prm.J(0)), xhat.sys.Omega(1) * S(prm.J(1)),
                     xhat.sys.Omega(2) * S(prm.J(2)));
  const Vec3T<S> gyro = xhat.sys.Omega.cross(JOm);
  for (int i = 0; i < 3; ++i) {
    const S tau = -k_R(i) * e_R(i) - k_Omega(i) * e_Omega(i) + gyro(i) - xhat.dhat_tau(i);
    u.tau(i) = saturate(tau, -prm.tau_max, prm.tau_max);
  }
  return u;
}

inline ControlInput control_law(const ObserverState& xhat, const RefPoint& ref,
                                const ControllerGains& gains, const QuadParams& prm,
                                const Eigen::Vector3d& fallback_b3d = {0.0, 0.0, 1.0},
                                Eigen::Vector3d* b3d_out = nullptr) {
  return control_law<double>(xhat, ref, gains.k_p, gains.k_v, gains.k_R,
                             gains.k_Omega, prm, fallback_b3d, b3d_out);
}

struct ControllerJacobians {
  Eigen::Matrix<double, 4, 18> dh_dxhat;
  Eigen::Matrix<double, 4, 12> dh_dtheta;
};

ControllerJacobians controller_jacobians(const ObserverState& xhat, const RefPoint& ref,
                                         const ControllerGains& gains,
                                         const QuadParams& prm,
                                         const Eigen::Vector3d& fallback_b3d);

}  // namespace qtune

#endif  // QUADTUNE_CONTROLLER_HPP
