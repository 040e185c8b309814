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

#ifndef QUADTUNE_OBSERVER_HPP
#define QUADTUNE_OBSERVER_HPP

#include "quadtune/dynamics.hpp"

namespace qtune {

/// Augmented observer state: system estimate plus lumped disturbance
/// estimates. Tangent dimension is kObsTan = 18.
template <class S>
struct ObserverStateT {
  RigidStateT<S> sys;
  Vec3T<S> dhat_f = Vec3T<S>::Zero();     // estimated force disturbance [N]
  Vec3T<S> dhat_tau = Vec3T<S>::Zero();   // estimated torque disturbance [N m]

  bool all_finite() const {
    return sys.all_finite() && dhat_f.allFinite() && dhat_tau.allFinite();
  }
};
using ObserverState = ObserverStateT<double>;

/// Per-axis ESO bandwidths [rad/s]; correction gains are (2w, w^2).
struct ObserverGains {
  Eigen::Vector3d omega_t = {10.0, 10.0, 10.0};
  Eigen::Vector3d omega_r = {10.0, 10.0, 10.0};

  Eigen::Matrix<double, 6, 1> as_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << omega_t, omega_r;
    return v;
  }
  static ObserverGains from_vector(const Eigen::Matrix<double, 6, 1>& v) {
    ObserverGains g;
    g.omega_t = v.head<3>();
    g.omega_r = v.tail<3>();
    return g;
  }
};

/**
 * Predictor-corrector extended state observer.
 *
 * Predicts through the nominal dynamics using the current disturbance
 * estimate, then corrects each channel with a critically damped (2w, w^2)
 * gain pair driven by the measurement innovation. The torque channel is
 * scaled by the inertia so its error dynamics match the translational case.
 */
template <class S>
ObserverStateT<S> observer_step(const ObserverStateT<S>& xhat,
                                const MeasurementT<S>& y,
                                const ControlInputT<S>& u,
                                const Vec3T<S>& omega_t,
                                const Vec3T<S>& omega_r,
                                const QuadParams& prm) {
  ObserverStateT<S> out;
  out.sys = step_dynamics<S>(xhat.sys, u, xhat.dhat_f, xhat.dhat_tau, prm);
  out.dhat_f = xhat.dhat_f;
  out.dhat_tau = xhat.dhat_tau;

  const double dt = prm.dt;
  for (int i = 0; i < 3; ++i) {
    const S e_p = y.p(i) - out.sys.p(i);
    const S e_v = y.v(i) - out.sys.v(i);
    out.sys.p(i) += S(2.0 * dt) * omega_t(i) * e_p;
    out.sys.v(i) += S(2.0 * dt) * omega_t(i) * e_v;
    out.dhat_f(i) += S(prm.m * dt) * omega_t(i) * omega_t(i) * e_v;
  }

  const Vec3T<S> e_att = log_so3<S>(Mat3T<S>(out.sys.R.transpose() * y.R));
  Vec3T<S> att_corr;
  for (int i = 0; i < 3; ++i) att_corr(i) = S(2.0 * dt) * omega_r(i) * e_att(i);
  out.sys.R = out.sys.R * exp_so3<S>(att_corr);

  for (int i = 0; i < 3; ++i) {
    const S e_w = y.Omega(i) - out.sys.Omega(i);
    out.sys.Omega(i) += S(2.0 * dt) * omega_r(i) * e_w;
    out.dhat_tau(i) += S(prm.J(i) * dt) * omega_r(i) * omega_r(i) * e_w;
  }
  return out;
}

inline ObserverState observer_step(const ObserverState& xhat, const Measurement& y,
                                   const ControlInput& u, const ObserverGains& gains,
                                   const QuadParams& prm) {
  return observer_step<double>(xhat, y, u, gains.omega_t, gains.omega_r, prm);
}

// Observer tangent: [state tangent (12), d_dhat_f (3), d_dhat_tau (3)].
template <class S>
ObserverStateT<S> apply_obs_tangent(const ObserverState& xhat,
                                    const Eigen::Matrix<S, 18, 1>& delta) {
  ObserverStateT<S> out;
  out.sys = apply_state_tangent<S>(xhat.sys, Eigen::Matrix<S, 12, 1>(delta.template head<12>()));
  for (int i = 0; i < 3; ++i) {
    out.dhat_f(i) = S(xhat.dhat_f(i)) + delta(12 + i);
    out.dhat_tau(i) = S(xhat.dhat_tau(i)) + delta(15 + i);
  }
  return out;
}

template <class S>
Eigen::Matrix<S, 18, 1> obs_tangent_from(const ObserverState& nom,
                                         const ObserverStateT<S>& pert) {
  Eigen::Matrix<S, 18, 1> d;
  d.template head<12>() = state_tangent_from<S>(nom.sys, pert.sys);
  for (int i = 0; i < 3; ++i) {
    d(12 + i) = pert.dhat_f(i) - nom.dhat_f(i);
    d(15 + i) = pert.dhat_tau(i) - nom.dhat_tau(i);
  }
  return d;
}

struct ObserverJacobians {
  Eigen::Matrix<double, 18, 18> do_dxhat;
  Eigen::Matrix<double, 18, 12> do_dx;     // through the measurement map
  Eigen::Matrix<double, 18, 4> do_du;
  Eigen::Matrix<double, 18, 6> do_dpsi;
};

/// Jacobians of observer_step around a recorded step. `x` is the true state
/// that produced the (possibly noisy) recorded measurement `y`.
ObserverJacobians observer_jacobians(const ObserverState& xhat, const RigidState& x,
                                     const Measurement& y, const ControlInput& u,
                                     const ObserverGains& gains, const QuadParams& prm);

}  // namespace qtune

#endif  // QUADTUNE_OBSERVER_HPP
