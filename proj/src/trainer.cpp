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

#include "quadtune/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qtune {

RolloutRecord rollout_with_policy(const PolicyParams& policy, const Task& task,
                                  const QuadParams& prm, const LossSpec& spec,
                                  const RolloutConfig& cfg, const GainBounds& bounds,
                                  PolicyTrace* trace) {
  const GainSourceFn source = [&](int k, const ObserverState& xhat) -> Vec18 {
    const double t = k * prm.dt;
    const FeatureVec feat = build_features(xhat, task, t);
    PolicyCache cache;
    const Vec18 eta = policy_forward(policy, feat, &cache);
    const Vec18 theta = bound_gains(eta, bounds);
    if (trace != nullptr) {
      trace->caches.push_back(cache);
      trace->etas.push_back(eta);
      trace->update_steps.push_back(k);
      trace->update_times.push_back(t);
    }
    return theta;
  };
  if (trace != nullptr) {
    trace->caches.clear();
    trace->etas.clear();
    trace->update_steps.clear();
    trace->update_times.clear();
  }
  return rollout_closed_loop(task, prm, spec, cfg, source);
}

double policy_meta_gradient(const PolicyParams& policy, const Task& task,
                            const QuadParams& prm, const LossSpec& spec,
                            const RolloutConfig& cfg, const GainBounds& bounds,
                            PolicyGrads& acc, bool* crashed, double* rmse) {
  PolicyTrace trace;
  const RolloutRecord rec = rollout_with_policy(policy, task, prm, spec, cfg, bounds, &trace);
  if (crashed != nullptr) *crashed = rec.crashed;
  if (rmse != nullptr) *rmse = rec.rmse;
  if (rec.crashed) return rec.total_loss;

  AdjointOptions opts;
  // The features are built from the live estimate, so a perturbation of
  // xhat_k at an update instant moves the applied gains. The adjoint sweep
  // injects dTheta/dxhat^T times the window gradient at those instants.
  opts.policy_feedback = [&](int k) -> Eigen::Matrix<double, 18, 18> {
    const int w = k / rec.stride;
    return policy_state_feedback(policy, trace.caches[w], trace.etas[w], bounds,
                                 rec.xhat[k], task, trace.update_times[w]);
  };
  const AdjointResult adj = adjoint_sweep(rec, opts);

  for (size_t w = 0; w < adj.per_window.size(); ++w) {
    const Vec18 deta =
        bound_gains_jacobian(trace.etas[w], bounds).cwiseProduct(adj.per_window[w]);
    policy_backward(policy, trace.caches[w], deta, acc);
  }
  return rec.total_loss;
}

EpochResult train_epoch(PolicyParams& policy, const TrainConfig& cfg, int epoch) {
  const std::uint64_t epoch_seed =
      cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch);
  const std::vector<Task> tasks = sample_tasks(epoch_seed, cfg.batch, cfg.difficulty);

  EpochResult out;
  PolicyGrads acc = PolicyGrads::zero();
  int valid = 0;
  double loss_sum = 0.0, rmse_sum = 0.0;
  for (int i = 0; i < cfg.batch; ++i) {
    RolloutConfig rcfg;
    rcfg.horizon = cfg.horizon;
    rcfg.stride = cfg.stride;
    rcfg.seed = tasks[i].seed;
    rcfg.noise = cfg.noise;
    rcfg.bounds = &cfg.bounds;
    bool crashed = false;
    double rmse = 0.0;
    PolicyGrads task_grads = PolicyGrads::zero();
    const double loss = policy_meta_gradient(policy, tasks[i], cfg.params, cfg.loss,
                                             rcfg, cfg.bounds, task_grads, &crashed, &rmse);
    if (crashed) {
      out.crashes += 1;
      continue;
    }
    acc += task_grads;
    loss_sum += loss;
    rmse_sum += rmse;
    valid += 1;
  }

  if (valid == 0) {
    // Every task in the batch diverged; report and leave the weights alone.
    out.updated = false;
    out.mean_loss = std::numeric_limits<double>::quiet_NaN();
    out.mean_rmse = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  acc *= 1.0 / valid;
  adam_step(policy, acc, cfg.adam);
  out.mean_loss = loss_sum / valid;
  out.mean_rmse = rmse_sum / valid;
  out.updated = true;
  return out;
}

std::string tune_method_name(TuneMethod m) {
  switch (m) {
    case TuneMethod::kDtBase: return "dt-base";
    case TuneMethod::kDtFixed: return "dt-fixed";
    case TuneMethod::kDtCtg: return "dt-ctg";
    case TuneMethod::kDtHistory: return "dt-history";
    case TuneMethod::kAdjFixed: return "adj-fixed";
    case TuneMethod::kAdjAdaptive: return "adj-adaptive";
  }
  throw std::invalid_argument("tune_method_name: bad enum");
}

TuneMethod tune_method_from_name(const std::string& name) {
  for (TuneMethod m : {TuneMethod::kDtBase, TuneMethod::kDtFixed, TuneMethod::kDtCtg,
                       TuneMethod::kDtHistory, TuneMethod::kAdjFixed,
                       TuneMethod::kAdjAdaptive}) {
    if (tune_method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown tuning method '" + name + "'");
}

namespace {

/// Flat Adam with projection, shared by all tuning modes.
struct AdamVec {
  Eigen::VectorXd m, v;
  std::int64_t steps = 0;

  explicit AdamVec(int dim) : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)) {}

  void update(Eigen::VectorXd& x, const Eigen::VectorXd& g, const AdamConfig& cfg,
              double lr) {
    steps += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(steps));
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square();
    x.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
};

bool is_adaptive(TuneMethod m) {
  return m == TuneMethod::kDtCtg || m == TuneMethod::kDtHistory ||
         m == TuneMethod::kAdjAdaptive;
}

}  // namespace

TuneResult tune_gains(const Task& task, const Vec18& theta0, TuneMethod method,
                      const TuneConfig& cfg) {
  RolloutConfig rcfg;
  rcfg.horizon = cfg.horizon;
  rcfg.stride = cfg.stride;
  rcfg.seed = cfg.seed;
  rcfg.noise = cfg.noise;
  rcfg.bounds = &cfg.bounds;

  const int windows = cfg.horizon / cfg.stride;
  TuneResult out;
  GainTrajectory gains = is_adaptive(method)
                             ? GainTrajectory::adaptive(cfg.bounds.clamp(theta0), windows)
                             : GainTrajectory::fixed(cfg.bounds.clamp(theta0));

  const int dim = is_adaptive(method) ? 18 * windows
                  : method == TuneMethod::kDtBase ? 12
                                                  : 18;
  AdamVec adam(dim);

  for (int it = 0; it < cfg.iterations; ++it) {
    const RolloutRecord rec = rollout_closed_loop(task, cfg.params, cfg.loss, rcfg, gains);
    out.loss_curve.push_back(rec.total_loss);
    out.rmse_curve.push_back(rec.rmse);
    if (rec.crashed) {
      out.diverged = true;
      break;
    }

    Eigen::VectorXd grad(dim);
    switch (method) {
      case TuneMethod::kDtBase:
        grad = forward_sens_fixed(rec, param_map_theta_only());
        break;
      case TuneMethod::kDtFixed:
        grad = forward_sens_fixed(rec, param_map_full());
        break;
      case TuneMethod::kAdjFixed:
        grad = adjoint_sweep(rec).total;
        break;
      case TuneMethod::kAdjAdaptive: {
        const AdjointResult adj = adjoint_sweep(rec);
        for (int w = 0; w < windows; ++w) {
          grad.segment<18>(18 * w) =
              w < static_cast<int>(adj.per_window.size()) ? adj.per_window[w] : Vec18::Zero();
        }
        break;
      }
      case TuneMethod::kDtCtg: {
        const std::vector<Vec18> g = forward_sens_ctg(rec);
        for (int w = 0; w < windows; ++w) {
          grad.segment<18>(18 * w) = w < static_cast<int>(g.size()) ? g[w] : Vec18::Zero();
        }
        break;
      }
      case TuneMethod::kDtHistory: {
        const std::vector<Vec18> g = forward_sens_history(rec);
        for (int w = 0; w < windows; ++w) {
          grad.segment<18>(18 * w) = w < static_cast<int>(g.size()) ? g[w] : Vec18::Zero();
        }
        break;
      }
    }

    if (is_adaptive(method)) {
      Eigen::VectorXd flat(dim);
      for (int w = 0; w < windows; ++w) flat.segment<18>(18 * w) = gains.theta[w];
      adam.update(flat, grad, cfg.adam, cfg.lr);
      for (int w = 0; w < windows; ++w) {
        gains.theta[w] = cfg.bounds.clamp(flat.segment<18>(18 * w));
      }
    } else if (method == TuneMethod::kDtBase) {
      Eigen::VectorXd ctrl = gains.theta[0].head<12>();
      adam.update(ctrl, grad, cfg.adam, cfg.lr);
      Vec18 full = gains.theta[0];
      full.head<12>() = ctrl;
      gains.theta[0] = cfg.bounds.clamp(full);
    } else {
      Eigen::VectorXd flat = gains.theta[0];
      adam.update(flat, grad, cfg.adam, cfg.lr);
      gains.theta[0] = cfg.bounds.clamp(flat);
    }
  }

  out.gains = gains;
  return out;
}

std::vector<EvalCase> default_eval_grid() {
  std::vector<EvalCase> grid;
  for (const char* cat : {"hover", "2d_circle", "3d_circle", "figure8"}) {
    for (double wind : {0.0, 1.0, 2.0}) {
      for (double speed : {2.0, 3.0, 4.0}) {
        grid.push_back({cat, wind, speed});
      }
    }
  }
  return grid;
}

namespace {

std::vector<EvalRow> evaluate_source(
    const std::function<RolloutRecord(const Task&, const RolloutConfig&)>& run,
    const std::string& method, const std::vector<EvalCase>& grid, const EvalConfig& cfg) {
  std::vector<EvalRow> rows;
  for (const EvalCase& c : grid) {
    EvalRow row;
    row.c = c;
    row.method = method;
    row.repeats = cfg.repeats;
    double sum = 0.0, sum2 = 0.0;
    int ok = 0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t s = cfg.seed + 131 * r;
      const double duration = cfg.horizon * cfg.params.dt;
      const Task task = make_preset(c.category, c.speed, c.wind, s, duration);
      RolloutConfig rcfg;
      rcfg.horizon = cfg.horizon;
      rcfg.stride = cfg.stride;
      rcfg.seed = s;
      rcfg.noise = cfg.noise;
      rcfg.perturb = cfg.perturb;
      rcfg.bounds = &cfg.bounds;
      const RolloutRecord rec = run(task, rcfg);
      if (rec.crashed) {
        row.crashes += 1;
        continue;
      }
      sum += rec.rmse;
      sum2 += rec.rmse * rec.rmse;
      ok += 1;
    }
    if (ok > 0) {
      row.mean_rmse = sum / ok;
      row.sd_rmse = ok > 1 ? std::sqrt(std::max(0.0, sum2 / ok - row.mean_rmse * row.mean_rmse))
                           : 0.0;
    } else {
      row.mean_rmse = std::numeric_limits<double>::quiet_NaN();
      row.sd_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<EvalRow> evaluate_fixed(const Vec18& theta, const std::string& method,
                                    const std::vector<EvalCase>& grid,
                                    const EvalConfig& cfg) {
  const GainTrajectory g = GainTrajectory::fixed(cfg.bounds.clamp(theta));
  return evaluate_source(
      [&](const Task& task, const RolloutConfig& rcfg) {
        return rollout_closed_loop(task, cfg.params, cfg.loss, rcfg, g);
      },
      method, grid, cfg);
}

std::vector<EvalRow> evaluate_policy(const PolicyParams& policy, const std::string& method,
                                     const std::vector<EvalCase>& grid,
                                     const EvalConfig& cfg) {
  return evaluate_source(
      [&](const Task& task, const RolloutConfig& rcfg) {
        return rollout_with_policy(policy, task, cfg.params, cfg.loss, rcfg, cfg.bounds);
      },
      method, grid, cfg);
}

std::string eval_rows_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "wind,velocity,method,category,mean,sd,crashes\n";
  for (const EvalRow& r : rows) {
    out << r.c.wind << "," << r.c.speed << "," << r.method << "," << r.c.category << ","
        << r.mean_rmse << "," << r.sd_rmse << "," << r.crashes << "\n";
  }
  return out.str();
}

}  // namespace qtune
