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

#include "quadtune/dynamics.hpp"

namespace qtune {

void dynamics_jacobians(const RigidState& x, const ControlInput& u,
                        const Disturbance& d, const QuadParams& prm,
                        Mat12& df_dx, Eigen::Matrix<double, 12, 4>& df_du) {
  constexpr int W = kStateTan + kInputDim;  // 16 seed directions
  using D = Dual<W>;

  Eigen::Matrix<D, 12, 1> delta;
  for (int i = 0; i < 12; ++i) delta(i) = D(0.0, i);
  RigidStateT<D> xs = apply_state_tangent<D>(x, delta);

  ControlInputT<D> us;
  us.f = D(u.f, 12);
  us.tau << D(u.tau(0), 13), D(u.tau(1), 14), D(u.tau(2), 15);

  Vec3T<D> df, dtau;
  for (int i = 0; i < 3; ++i) {
    df(i) = D(d.d_f(i));
    dtau(i) = D(d.d_tau(i));
  }

  const RigidStateT<D> next = step_dynamics<D>(xs, us, df, dtau, prm);
  const RigidState nominal = step_dynamics(x, u, d, prm);
  const Eigen::Matrix<D, 12, 1> tan = state_tangent_from<D>(nominal, next);

  for (int r = 0; r < 12; ++r) {
    df_dx.row(r) = tan(r).b.template head<12>().transpose();
    df_du.row(r) = tan(r).b.template tail<4>().transpose();
  }
}

}  // namespace qtune
