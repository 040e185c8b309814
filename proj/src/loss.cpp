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

#include "quadtune/loss.hpp"

namespace qtune {

StageLossGradients stage_loss_gradients(const RigidState& x, const ObserverState& xhat,
                                        const ControlInput& u, const RefPoint& ref,
                                        const LossSpec& spec) {
  // Seed layout: [x (12), xhat (18), u (4)] -> width 34.
  constexpr int W = kStateTan + kObsTan + kInputDim;
  using D = Dual<W>;

  Eigen::Matrix<D, 12, 1> dx;
  for (int i = 0; i < 12; ++i) dx(i) = D(0.0, i);
  const RigidStateT<D> xs = apply_state_tangent<D>(x, dx);

  Eigen::Matrix<D, 18, 1> dxh;
  for (int i = 0; i < 18; ++i) dxh(i) = D(0.0, 12 + i);
  const ObserverStateT<D> xh = apply_obs_tangent<D>(xhat, dxh);

  ControlInputT<D> us;
  us.f = D(u.f, 30);
  us.tau << D(u.tau(0), 31), D(u.tau(1), 32), D(u.tau(2), 33);

  const D val = stage_loss<D>(xs, xh, us, ref, spec);

  StageLossGradients out;
  out.value = val.a;
  out.dl_dx = val.b.segment<12>(0);
  out.dl_dxhat = val.b.segment<18>(12);
  out.dl_du = val.b.segment<4>(30);
  return out;
}

}  // namespace qtune
