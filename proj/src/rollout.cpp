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

#include "quadtune/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace qtune {

RigidState initial_state(const Task& task) {
  RigidState x;
  const RefPoint r0 = eval_ref(task, 0.0);
  x.p = r0.p_d;
  x.v.setZero();
  const double c = std::cos(r0.yaw_d), s = std::sin(r0.yaw_d);
  x.R << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  x.Omega.setZero();
  return x;
}

ObserverState initial_observer(const RigidState& x0) {
  ObserverState xh;
  xh.sys = x0;
  xh.dhat_f.setZero();
  xh.dhat_tau.setZero();
  return xh;
}

RolloutRecord rollout_closed_loop(const Task& task, const QuadParams& prm,
                                  const LossSpec& spec, const RolloutConfig& cfg,
                                  const GainSourceFn& gains_at) {
  prm.validate();
  spec.validate();
  if (cfg.horizon < 1 || cfg.stride < 1 || cfg.horizon % cfg.stride != 0) {
    throw std::invalid_argument("rollout: stride must divide a positive horizon");
  }

  QuadParams plant = prm;
  if (cfg.perturb.enabled) {
    plant.m *= cfg.perturb.mass_scale;
    plant.J *= cfg.perturb.inertia_scale;
  }

  RolloutRecord rec;
  rec.stride = cfg.stride;
  rec.params = prm;
  rec.spec = spec;
  const int n = cfg.horizon;
  rec.x.reserve(n + 1);
  rec.xhat.reserve(n + 1);
  rec.u.reserve(n);
  rec.y.reserve(n);
  rec.ref.reserve(n);
  rec.d.reserve(n);
  rec.Theta.reserve(n);
  rec.fallback_b3d.reserve(n);
  rec.loss.reserve(n);

  std::mt19937_64 rng(cfg.seed);
  RigidState x = initial_state(task);
  ObserverState xhat = initial_observer(x);
  rec.x.push_back(x);
  rec.xhat.push_back(xhat);

  Eigen::Vector3d last_b3d(0.0, 0.0, 1.0);
  Vec18 theta = Vec18::Zero();
  ControlInput u_lag;  // actuator lag state (perturbed sim only)
  bool lag_init = false;
  double pos_err_sq = 0.0;

  for (int k = 0; k < n; ++k) {
    const double t = k * prm.dt;
    const RefPoint ref = eval_ref(task, t);
    const Disturbance d = eval_wind(task, t);

    if (k % cfg.stride == 0) {
      theta = gains_at(k, xhat);
      if (cfg.bounds != nullptr && !cfg.bounds->contains(theta)) {
        throw std::runtime_error("rollout: applied gains violate safety bounds");
      }
    }

    const ControllerGains cg = ControllerGains::from_vector(theta.head<12>());
    const ObserverGains og = ObserverGains::from_vector(theta.tail<6>());

    Eigen::Vector3d b3d_new;
    const Eigen::Vector3d fallback = last_b3d;
    const ControlInput u = control_law(xhat, ref, cg, prm, fallback, &b3d_new);
    last_b3d = b3d_new;

    const Measurement y = measure(x, cfg.noise, rng);
    const ObserverState xhat_next = observer_step(xhat, y, u, og, prm);

    ControlInput u_applied = u;
    if (cfg.perturb.enabled && cfg.perturb.actuator_lag_tau > 0.0) {
      if (!lag_init) {
        u_lag = u;
        lag_init = true;
      }
      const double a = prm.dt / cfg.perturb.actuator_lag_tau;
      u_lag.f += a * (u.f - u_lag.f);
      u_lag.tau += a * (u.tau - u_lag.tau);
      u_applied = u_lag;
    }
    const RigidState x_next = step_dynamics(x, u_applied, d, plant);

    const double l = stage_loss<double>(x, xhat, u, ref, spec);
    rec.u.push_back(u);
    rec.y.push_back(y);
    rec.ref.push_back(ref);
    rec.d.push_back(d);
    rec.Theta.push_back(theta);
    rec.fallback_b3d.push_back(fallback);
    rec.loss.push_back(l);
    rec.total_loss += l;
    pos_err_sq += (x.p - ref.p_d).squaredNorm();

    if (!x_next.all_finite() || !xhat_next.all_finite() ||
        x_next.p.norm() > cfg.crash_pos_limit) {
      rec.crashed = true;
      rec.crash_step = k + 1;
      break;
    }
    x = x_next;
    xhat = xhat_next;
    rec.x.push_back(x);
    rec.xhat.push_back(xhat);
  }

  rec.rmse = rec.loss.empty() ? 0.0 : std::sqrt(pos_err_sq / rec.loss.size());
  return rec;
}

RolloutRecord rollout_closed_loop(const Task& task, const QuadParams& prm,
                                  const LossSpec& spec, const RolloutConfig& cfg,
                                  const GainTrajectory& gains) {
  return rollout_closed_loop(task, prm, spec, cfg,
                             [&](int k, const ObserverState&) -> Vec18 {
                               return gains.at_window(k / cfg.stride);
                             });
}

}  // namespace qtune
