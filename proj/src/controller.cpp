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

#include "quadtune/controller.hpp"

namespace qtune {

ControllerJacobians controller_jacobians(const ObserverState& xhat, const RefPoint& ref,
                                         const ControllerGains& gains,
                                         const QuadParams& prm,
                                         const Eigen::Vector3d& fallback_b3d) {
  // Seed layout: [xhat (18), theta (12)] -> width 30.
  constexpr int W = kObsTan + kCtrlGainDim;
  using D = Dual<W>;

  Eigen::Matrix<D, 18, 1> dxh;
  for (int i = 0; i < 18; ++i) dxh(i) = D(0.0, i);
  const ObserverStateT<D> xh = apply_obs_tangent<D>(xhat, dxh);

  Vec3T<D> kp, kv, kR, kOm;
  for (int i = 0; i < 3; ++i) {
    kp(i) = D(gains.k_p(i), 18 + i);
    kv(i) = D(gains.k_v(i), 21 + i);
    kR(i) = D(gains.k_R(i), 24 + i);
    kOm(i) = D(gains.k_Omega(i), 27 + i);
  }

  const ControlInputT<D> u =
      control_law<D>(xh, ref, kp, kv, kR, kOm, prm, fallback_b3d);
  const Eigen::Matrix<D, 4, 1> uv = u.as_vector();

  ControllerJacobians jac;
  for (int r = 0; r < 4; ++r) {
    jac.dh_dxhat.row(r) = uv(r).b.segment<18>(0).transpose();
    jac.dh_dtheta.row(r) = uv(r).b.segment<12>(18).transpose();
  }
  return jac;
}

}  // namespace qtune
