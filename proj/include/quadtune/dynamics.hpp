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

#ifndef QUADTUNE_DYNAMICS_HPP
#define QUADTUNE_DYNAMICS_HPP

#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "quadtune/dual.hpp"
#include "quadtune/so3.hpp"

namespace qtune {

// Tangent-space dimensions used throughout the gradient machinery.
inline constexpr int kStateTan = 12;   // [p, v, rot, Omega]
inline constexpr int kObsTan = 18;     // state tangent + [dhat_f, dhat_tau]
inline constexpr int kInputDim = 4;    // [f, tau]
inline constexpr int kCtrlGainDim = 12;
inline constexpr int kObsGainDim = 6;
inline constexpr int kGainDim = kCtrlGainDim + kObsGainDim;

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/**
 * Rigid-body state of the vehicle.
 *
 * World frame convention: z-axis points down, gravity is +g*e3 and thrust
 * acts along -f*R*e3.
 */
template <class S>
struct RigidStateT {
  Vec3T<S> p = Vec3T<S>::Zero();       // position [m]
  Vec3T<S> v = Vec3T<S>::Zero();       // velocity [m/s]
  Mat3T<S> R = Mat3T<S>::Identity();   // body->world rotation
  Vec3T<S> Omega = Vec3T<S>::Zero();   // body angular rate [rad/s]

  bool all_finite() const {
    return p.allFinite() && v.allFinite() && R.allFinite() && Omega.allFinite();
  }
};
using RigidState = RigidStateT<double>;

struct QuadParams {
  double m = 1.0;                                    // mass [kg]
  Eigen::Vector3d J = {0.02, 0.02, 0.04};            // inertia diagonal [kg m^2]
  double g = 9.81;                                   // gravity [m/s^2]
  double dt = 0.01;                                  // integration step [s]
  double f_max_factor = 4.0;                         // f_max = factor * m * g
  double tau_max = 5.0;                              // per-axis torque limit [N m]

  double f_max() const { return f_max_factor * m * g; }

  void validate() const {
    if (m <= 0.0 || dt <= 0.0 || (J.array() <= 0.0).any()) {
      throw std::invalid_argument("QuadParams: m, dt and inertia entries must be positive");
    }
  }
};

template <class S>
struct ControlInputT {
  S f = S(0.0);                        // total thrust [N]
  Vec3T<S> tau = Vec3T<S>::Zero();     // body torque [N m]

  Eigen::Matrix<S, 4, 1> as_vector() const {
    Eigen::Matrix<S, 4, 1> u;
    u << f, tau(0), tau(1), tau(2);
    return u;
  }
};
using ControlInput = ControlInputT<double>;

struct Disturbance {
  Eigen::Vector3d d_f = Eigen::Vector3d::Zero();     // lumped force [N]
  Eigen::Vector3d d_tau = Eigen::Vector3d::Zero();   // lumped torque [N m]
};

/// Full-state measurement; position and velocity may carry additive noise,
/// attitude and body rate are exact.
template <class S>
struct MeasurementT {
  Vec3T<S> p = Vec3T<S>::Zero();
  Vec3T<S> v = Vec3T<S>::Zero();
  Mat3T<S> R = Mat3T<S>::Identity();
  Vec3T<S> Omega = Vec3T<S>::Zero();
};
using Measurement = MeasurementT<double>;

struct NoiseConfig {
  double sigma_p = 0.0;   // position std dev [m]
  double sigma_v = 0.0;   // velocity std dev [m/s]
};

/// One step of semi-implicit Euler with an exact SO(3) update.
/// The disturbance enters as d_f/m and J^-1 d_tau.
template <class S>
RigidStateT<S> step_dynamics(const RigidStateT<S>& x, const ControlInputT<S>& u,
                             const Vec3T<S>& d_f, const Vec3T<S>& d_tau,
                             const QuadParams& prm) {
  const Vec3T<S> e3 = Vec3T<S>(S(0.0), S(0.0), S(1.0));
  RigidStateT<S> out;
  const Vec3T<S> accel =
      e3 * S(prm.g) - (x.R * e3) * (u.f / prm.m) + d_f * S(1.0 / prm.m);
  out.v = x.v + accel * S(prm.dt);
  out.p = x.p + out.v * S(prm.dt);

  const Vec3T<S> JOmega(x.Omega(0) * S(prm.J(0)), x.Omega(1) * S(prm.J(1)),
                        x.Omega(2) * S(prm.J(2)));
  const Vec3T<S> ang_mom_rhs = -x.Omega.cross(JOmega) + u.tau + d_tau;
  Vec3T<S> Omega_dot(ang_mom_rhs(0) * S(1.0 / prm.J(0)),
                     ang_mom_rhs(1) * S(1.0 / prm.J(1)),
                     ang_mom_rhs(2) * S(1.0 / prm.J(2)));
  out.Omega = x.Omega + Omega_dot * S(prm.dt);
  out.R = x.R * exp_so3<S>(out.Omega * S(prm.dt));
  return out;
}

inline RigidState step_dynamics(const RigidState& x, const ControlInput& u,
                                const Disturbance& d, const QuadParams& prm) {
  return step_dynamics<double>(x, u, d.d_f, d.d_tau, prm);
}

/// Noiseless measurement map.
template <class S>
MeasurementT<S> measure_exact(const RigidStateT<S>& x) {
  MeasurementT<S> y;
  y.p = x.p;
  y.v = x.v;
  y.R = x.R;
  y.Omega = x.Omega;
  return y;
}

/// Measurement with zero-mean Gaussian noise on position and velocity.
inline Measurement measure(const RigidState& x, const NoiseConfig& cfg,
                           std::mt19937_64& rng) {
  Measurement y = measure_exact<double>(x);
  if (cfg.sigma_p > 0.0 || cfg.sigma_v > 0.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 3; ++i) y.p(i) += cfg.sigma_p * n(rng);
    for (int i = 0; i < 3; ++i) y.v(i) += cfg.sigma_v * n(rng);
  }
  return y;
}

// --- Tangent-space parameterization -----------------------------------------
//
// A state perturbation is a 12-vector [dp, dv, drot, dOmega] with the rotation
// perturbed on the right: R(delta) = R * exp(hat(drot)).

template <class S>
RigidStateT<S> apply_state_tangent(const RigidState& x,
                                   const Eigen::Matrix<S, 12, 1>& delta) {
  RigidStateT<S> out;
  for (int i = 0; i < 3; ++i) {
    out.p(i) = S(x.p(i)) + delta(i);
    out.v(i) = S(x.v(i)) + delta(3 + i);
    out.Omega(i) = S(x.Omega(i)) + delta(9 + i);
  }
  const Vec3T<S> drot(delta(6), delta(7), delta(8));
  out.R = x.R.cast<S>() * exp_so3<S>(drot);
  return out;
}

/// First-order tangent of `pert` about the nominal `nom`. Exact for the
/// derivative channels when value(pert) == nom.
template <class S>
Eigen::Matrix<S, 12, 1> state_tangent_from(const RigidState& nom,
                                           const RigidStateT<S>& pert) {
  Eigen::Matrix<S, 12, 1> d;
  const Mat3T<S> m = nom.R.cast<S>().transpose() * pert.R;
  const Vec3T<S> drot = vee_unchecked(m);
  for (int i = 0; i < 3; ++i) {
    d(i) = pert.p(i) - nom.p(i);
    d(3 + i) = pert.v(i) - nom.v(i);
    d(6 + i) = drot(i);
    d(9 + i) = pert.Omega(i) - nom.Omega(i);
  }
  return d;
}

/// Jacobians of step_dynamics on the 12-dim state tangent and the 4-dim
/// input [f, tau]. The additive disturbance drops out of both.
void dynamics_jacobians(const RigidState& x, const ControlInput& u,
                        const Disturbance& d, const QuadParams& prm,
                        Mat12& df_dx, Eigen::Matrix<double, 12, 4>& df_du);

}  // namespace qtune

#endif  // QUADTUNE_DYNAMICS_HPP
