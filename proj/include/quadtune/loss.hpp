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

#ifndef QUADTUNE_LOSS_HPP
#define QUADTUNE_LOSS_HPP

#include "quadtune/observer.hpp"
#include "quadtune/reference.hpp"

namespace qtune {

/**
 * Quadratic per-step objective
 *   l = ||x - x_d||^2_{W_x} + ||xhat - x||^2_{W_xhat} + lambda_u ||u||^2.
 *
 * Both weighted norms are over 12-dim tangent errors ordered
 * [p, v, attitude, Omega]; the tracking attitude error is taken against the
 * yaw-only reference attitude.
 */
struct LossSpec {
  Vec12 w_x;
  Vec12 w_xhat;
  double lambda_u = 1e-5;

  LossSpec() {
    w_x << 1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.01, 0.01, 0.01;
    w_xhat << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.01, 0.01, 0.01;
  }

  void validate() const {
    if ((w_x.array() < 0.0).any() || (w_xhat.array() < 0.0).any() || lambda_u < 0.0) {
      throw std::invalid_argument("LossSpec: weights must be non-negative");
    }
  }
};

template <class S>
S stage_loss(const RigidStateT<S>& x, const ObserverStateT<S>& xhat,
             const ControlInputT<S>& u, const RefPoint& ref, const LossSpec& spec) {
  using std::cos;
  using std::sin;
  // Yaw-only reference attitude.
  Mat3T<S> R_ref = Mat3T<S>::Identity();
  R_ref(0, 0) = S(std::cos(ref.yaw_d));
  R_ref(0, 1) = S(-std::sin(ref.yaw_d));
  R_ref(1, 0) = S(std::sin(ref.yaw_d));
  R_ref(1, 1) = S(std::cos(ref.yaw_d));

  const Vec3T<S> e_att = log_so3<S>(Mat3T<S>(R_ref.transpose() * x.R));
  const Vec3T<S> e_est_att = log_so3<S>(Mat3T<S>(x.R.transpose() * xhat.sys.R));

  S val = S(0.0);
  for (int i = 0; i < 3; ++i) {
    const S ep = x.p(i) - S(ref.p_d(i));
    const S ev = x.v(i) - S(ref.v_d(i));
    val += S(spec.w_x(i)) * ep * ep + S(spec.w_x(3 + i)) * ev * ev +
           S(spec.w_x(6 + i)) * e_att(i) * e_att(i) +
           S(spec.w_x(9 + i)) * x.Omega(i) * x.Omega(i);

    const S dp = xhat.sys.p(i) - x.p(i);
    const S dv = xhat.sys.v(i) - x.v(i);
    const S dw = xhat.sys.Omega(i) - x.Omega(i);
    val += S(spec.w_xhat(i)) * dp * dp + S(spec.w_xhat(3 + i)) * dv * dv +
           S(spec.w_xhat(6 + i)) * e_est_att(i) * e_est_att(i) +
           S(spec.w_xhat(9 + i)) * dw * dw;
  }
  val += S(spec.lambda_u) * (u.f * u.f + u.tau.squaredNorm());
  return val;
}

struct StageLossGradients {
  double value = 0.0;
  Vec12 dl_dx = Vec12::Zero();
  Vec18 dl_dxhat = Vec18::Zero();
  Eigen::Matrix<double, 4, 1> dl_du = Eigen::Matrix<double, 4, 1>::Zero();
};

StageLossGradients stage_loss_gradients(const RigidState& x, const ObserverState& xhat,
                                        const ControlInput& u, const RefPoint& ref,
                                        const LossSpec& spec);

}  // namespace qtune

#endif  // QUADTUNE_LOSS_HPP
