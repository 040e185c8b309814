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

#include "quadtune/observer.hpp"

namespace qtune {

ObserverJacobians observer_jacobians(const ObserverState& xhat, const RigidState& x,
                                     const Measurement& y, const ControlInput& u,
                                     const ObserverGains& gains, const QuadParams& prm) {
  // Seed layout: [xhat (18), x (12), u (4), psi (6)] -> width 40.
  constexpr int W = kObsTan + kStateTan + kInputDim + kObsGainDim;
  using D = Dual<W>;

  Eigen::Matrix<D, 18, 1> dxh;
  for (int i = 0; i < 18; ++i) dxh(i) = D(0.0, i);
  const ObserverStateT<D> xh = apply_obs_tangent<D>(xhat, dxh);

  Eigen::Matrix<D, 12, 1> dx;
  for (int i = 0; i < 12; ++i) dx(i) = D(0.0, 18 + i);
  const RigidStateT<D> xs = apply_state_tangent<D>(x, dx);

  // The measurement seen by the observer is the recorded one; only the
  // derivative channels flow through the measurement map (noise is additive).
  MeasurementT<D> ys = measure_exact<D>(xs);
  for (int i = 0; i < 3; ++i) {
    ys.p(i).a = y.p(i);
    ys.v(i).a = y.v(i);
  }

  ControlInputT<D> us;
  us.f = D(u.f, 30);
  us.tau << D(u.tau(0), 31), D(u.tau(1), 32), D(u.tau(2), 33);

  Vec3T<D> wt, wr;
  for (int i = 0; i < 3; ++i) {
    wt(i) = D(gains.omega_t(i), 34 + i);
    wr(i) = D(gains.omega_r(i), 37 + i);
  }

  const ObserverStateT<D> next = observer_step<D>(xh, ys, us, wt, wr, prm);
  const ObserverState nominal = observer_step(xhat, y, u, gains, prm);
  const Eigen::Matrix<D, 18, 1> tan = obs_tangent_from<D>(nominal, next);

  ObserverJacobians jac;
  for (int r = 0; r < 18; ++r) {
    jac.do_dxhat.row(r) = tan(r).b.segment<18>(0).transpose();
    jac.do_dx.row(r) = tan(r).b.segment<12>(18).transpose();
    jac.do_du.row(r) = tan(r).b.segment<4>(30).transpose();
    jac.do_dpsi.row(r) = tan(r).b.segment<6>(34).transpose();
  }
  return jac;
}

}  // namespace qtune
