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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "quadtune/config.hpp"
#include "quadtune/oracle.hpp"
#include "quadtune/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qtune;

namespace {

// Exit-code contract shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitGradcheck = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitConfig = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Experiment config file (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", o.seed, "Seed override")
      ->each([&o](const std::string&) { o.seed_set = true; });
}

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig cfg =
      o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  // The rollout contract requires the stride to divide the horizon.
  if (cfg.horizon % cfg.stride != 0) {
    cfg.horizon += cfg.stride - cfg.horizon % cfg.stride;
  }
  return cfg;
}

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void finish(const ExperimentConfig& cfg, const std::string& cmd, const WallTimer& t) {
  write_manifest(cfg.output_dir + "/" + cmd + "_manifest.json", cfg, t.ms());
}

Vec18 warm_gains() { return pack_gains(ControllerGains{}, ObserverGains{}); }

std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

json gains_to_json(const GainTrajectory& g, bool unstable) {
  json j;
  j["schema"] = "quadtune-gains-v1";
  j["mode"] = g.mode == GainTrajectory::Mode::kFixed ? "fixed" : "adaptive";
  j["unstable"] = unstable;
  json arr = json::array();
  for (const Vec18& t : g.theta) {
    json row = json::array();
    for (int i = 0; i < 18; ++i) row.push_back(t(i));
    arr.push_back(row);
  }
  j["theta"] = arr;
  return j;
}

Vec18 gains_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing gains file: " + path);
  json j;
  in >> j;
  if (j.value("schema", "") != "quadtune-gains-v1" || !j.contains("theta") ||
      j["theta"].empty() || j["theta"][0].size() != 18) {
    throw ConfigError("gains file '" + path + "' has an unexpected layout");
  }
  Vec18 v;
  for (int i = 0; i < 18; ++i) v(i) = j["theta"][0][i].get<double>();
  return v;
}

// --- gradcheck -----------------------------------------------------------

/// FD check of one analytic Jacobian, column by column over a tangent basis.
template <int Rows, int Cols, class Apply>
double jac_rel_error(const Eigen::Matrix<double, Rows, Cols>& analytic,
                     const Apply& apply, double eps) {
  Eigen::Matrix<double, Rows, Cols> fd;
  for (int c = 0; c < Cols; ++c) {
    Eigen::Matrix<double, Cols, 1> delta = Eigen::Matrix<double, Cols, 1>::Zero();
    delta(c) = eps;
    const Eigen::Matrix<double, Rows, 1> hi = apply(delta);
    delta(c) = -eps;
    const Eigen::Matrix<double, Rows, 1> lo = apply(delta);
    fd.col(c) = (hi - lo) / (2.0 * eps);
  }
  return (analytic - fd).norm() / std::max({analytic.norm(), fd.norm(), 1e-12});
}

struct CheckBlock {
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool ran = false;
  bool pass() const { return !ran || max_rel_error < threshold; }
};

int run_gradcheck(const ExperimentConfig& cfg, std::vector<std::string> engines,
                  int horizon, int samples, double corrupt) {
  const WallTimer timer;
  if (engines.empty()) {
    engines = {"jacobians", "adjoint", "forward-fixed", "forward-ctg", "meta"};
  }
  const auto wants = [&](const std::string& name) {
    return std::find(engines.begin(), engines.end(), name) != engines.end();
  };
  if (horizon % cfg.stride != 0) horizon += cfg.stride - horizon % cfg.stride;

  std::map<std::string, CheckBlock> blocks;
  blocks["jacobians"].threshold = 1e-5;
  blocks["adjoint"].threshold = 1e-4;
  blocks["forward-fixed"].threshold = 1e-7;
  blocks["forward-ctg"].threshold = 1e-7;
  blocks["meta"].threshold = 1e-3;

  const std::vector<Task> tasks = sample_tasks(cfg.seed, samples, cfg.difficulty);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);

  AdjointOptions aopts;
  aopts.debug_jacobian_perturb = corrupt;

  for (int s = 0; s < samples; ++s) {
    const Task& task = tasks[s];
    Vec18 theta = warm_gains();
    for (int i = 0; i < 18; ++i) theta(i) *= jitter(rng);
    theta = cfg.bounds.clamp(theta);

    RolloutConfig rcfg = cfg.rollout_config();
    rcfg.horizon = horizon;
    rcfg.seed = cfg.seed + 17 * s;
    const RolloutRecord rec = rollout_closed_loop(task, cfg.vehicle, cfg.loss, rcfg,
                                                  GainTrajectory::fixed(theta));
    if (rec.crashed) continue;

    if (wants("jacobians")) {
      CheckBlock& b = blocks["jacobians"];
      b.ran = true;
      const double eps = 1e-6;
      for (const int k : {0, rec.steps() / 2, rec.steps() - 1}) {
        const ControllerGains cg = ControllerGains::from_vector(rec.Theta[k].head<12>());
        const ObserverGains og = ObserverGains::from_vector(rec.Theta[k].tail<6>());

        Mat12 df_dx;
        Eigen::Matrix<double, 12, 4> df_du;
        dynamics_jacobians(rec.x[k], rec.u[k], rec.d[k], rec.params, df_dx, df_du);
        b.max_rel_error = std::max(
            b.max_rel_error,
            jac_rel_error<12, 12>(df_dx, [&](const Vec12& delta) {
              const RigidState xp = apply_state_tangent<double>(rec.x[k], delta);
              return Vec12(state_tangent_from<double>(
                  rec.x[k + 1],
                  step_dynamics<double>(xp, rec.u[k], rec.d[k].d_f, rec.d[k].d_tau,
                                        rec.params)));
            }, eps));

        const ControllerJacobians cj = controller_jacobians(
            rec.xhat[k], rec.ref[k], cg, rec.params, rec.fallback_b3d[k]);
        b.max_rel_error = std::max(
            b.max_rel_error,
            jac_rel_error<4, 18>(cj.dh_dxhat, [&](const Vec18& delta) {
              const ObserverState xp = apply_obs_tangent<double>(rec.xhat[k], delta);
              const ControlInput u = control_law(xp, rec.ref[k], cg, rec.params,
                                                 rec.fallback_b3d[k]);
              Vec4 out;
              out << u.f, u.tau;
              return out;
            }, eps));

        const ObserverJacobians oj = observer_jacobians(
            rec.xhat[k], rec.x[k], rec.y[k], rec.u[k], og, rec.params);
        b.max_rel_error = std::max(
            b.max_rel_error,
            jac_rel_error<18, 18>(oj.do_dxhat, [&](const Vec18& delta) {
              const ObserverState xp = apply_obs_tangent<double>(rec.xhat[k], delta);
              const ObserverState next = observer_step(xp, rec.y[k], rec.u[k], og,
                                                       rec.params);
              return Vec18(obs_tangent_from<double>(rec.xhat[k + 1], next));
            }, eps));
      }
    }

    const auto loss_of = [&](const Eigen::VectorXd& th) {
      return rollout_closed_loop(task, cfg.vehicle, cfg.loss, rcfg,
                                 GainTrajectory::fixed(th)).total_loss;
    };
    const AdjointResult adj = adjoint_sweep(rec, aopts);

    if (wants("adjoint")) {
      CheckBlock& b = blocks["adjoint"];
      b.ran = true;
      const auto fd = oracle::fd_gradient(loss_of, theta, 1e-6);
      b.max_rel_error = std::max(
          b.max_rel_error, oracle::relative_error(adj.total, fd.gradient));
    }
    if (wants("forward-fixed")) {
      CheckBlock& b = blocks["forward-fixed"];
      b.ran = true;
      const Eigen::VectorXd fwd = forward_sens_fixed(rec, param_map_full());
      b.max_rel_error = std::max(
          b.max_rel_error, oracle::relative_error(Eigen::VectorXd(adj.total), fwd));
    }
    if (wants("forward-ctg")) {
      CheckBlock& b = blocks["forward-ctg"];
      b.ran = true;
      const std::vector<Vec18> ctg = forward_sens_ctg(rec);
      for (size_t w = 0; w < ctg.size(); ++w) {
        b.max_rel_error = std::max(
            b.max_rel_error,
            oracle::relative_error(Eigen::VectorXd(adj.per_window[w]),
                                   Eigen::VectorXd(ctg[w])));
      }
    }
  }

  if (wants("meta")) {
    CheckBlock& b = blocks["meta"];
    b.ran = true;
    RolloutConfig rcfg = cfg.rollout_config();
    rcfg.horizon = horizon;
    const Task task = cfg.default_task();
    const PolicyParams p = PolicyParams::init(cfg.seed + 3, warm_gains(), cfg.bounds);
    PolicyGrads grads = PolicyGrads::zero();
    bool crashed = false;
    policy_meta_gradient(p, task, cfg.vehicle, cfg.loss, rcfg, cfg.bounds, grads,
                         &crashed);
    if (!crashed) {
      const auto loss_of = [&](const PolicyParams& q) {
        return rollout_with_policy(q, task, cfg.vehicle, cfg.loss, rcfg, cfg.bounds)
            .total_loss;
      };
      std::mt19937_64 prng(cfg.seed + 11);
      std::uniform_int_distribution<int> rh(0, kHiddenDim - 1), rf(0, kFeatureDim - 1);
      const double eps = 1e-5;
      for (int probe = 0; probe < 4; ++probe) {
        PolicyParams hi = p, lo = p;
        double analytic = 0.0;
        if (probe % 2 == 0) {
          const int r = rh(prng), c = rf(prng);
          hi.W1(r, c) += eps;
          lo.W1(r, c) -= eps;
          analytic = grads.W1(r, c);
        } else {
          const int r = probe % 18, c = rh(prng);
          hi.W2(r, c) += eps;
          lo.W2(r, c) -= eps;
          analytic = grads.W2(r, c);
        }
        const double fd = (loss_of(hi) - loss_of(lo)) / (2.0 * eps);
        b.max_rel_error = std::max(b.max_rel_error,
                                   oracle::relative_error(analytic, fd));
      }
    }
  }

  json report;
  report["schema"] = "quadtune-gradcheck-v1";
  report["horizon"] = horizon;
  report["samples"] = samples;
  bool all_pass = true;
  std::string first_fail;
  for (const auto& [name, b] : blocks) {
    if (!b.ran) continue;
    report["blocks"][name] = {{"max_rel_error", b.max_rel_error},
                              {"threshold", b.threshold},
                              {"pass", b.pass()}};
    std::printf("%-14s max rel error %.3e  (threshold %.0e)  %s\n", name.c_str(),
                b.max_rel_error, b.threshold, b.pass() ? "ok" : "FAIL");
    if (!b.pass() && all_pass) first_fail = name;
    all_pass = all_pass && b.pass();
  }
  report["pass"] = all_pass;
  write_file_atomic(cfg.output_dir + "/gradcheck_report.json", report.dump(2) + "\n");
  finish(cfg, "gradcheck", timer);
  if (!all_pass) {
    std::fprintf(stderr, "gradcheck: failing block '%s'\n", first_fail.c_str());
    return kExitGradcheck;
  }
  return kExitOk;
}

// --- bench ---------------------------------------------------------------

GradientEngine engine_from_name(const std::string& name) {
  for (const auto e : {GradientEngine::kAdjoint, GradientEngine::kForwardFixed,
                       GradientEngine::kForwardCtg, GradientEngine::kForwardHistory}) {
    if (engine_name(e) == name) return e;
  }
  throw ConfigError("unknown gradient engine '" + name + "'");
}

int run_bench(const ExperimentConfig& cfg, std::vector<std::string> engine_names,
              std::vector<int> horizons, int repetitions, int param_copies) {
  const WallTimer timer;
  if (engine_names.empty()) engine_names = {"adjoint", "forward-fixed", "forward-ctg"};
  if (horizons.empty()) horizons = {100, 200, 400, 800};
  std::vector<GradientEngine> engines;
  for (const auto& n : engine_names) engines.push_back(engine_from_name(n));

  const auto rows = benchmark_gradient_time(engines, horizons, repetitions,
                                            param_copies);
  std::ostringstream csv;
  csv << "engine,horizon,best_ms\n";
  for (const auto& r : rows) {
    csv << engine_name(r.engine) << "," << r.horizon << "," << csv_num(r.best_ms)
        << "\n";
  }
  write_file_atomic(cfg.output_dir + "/bench.csv", csv.str());

  json summary;
  summary["schema"] = "quadtune-bench-v1";
  summary["param_copies"] = param_copies;
  for (const auto e : engines) {
    const double slope = fit_loglog_slope(rows, e);
    summary["slopes"][engine_name(e)] = slope;
    std::printf("%-16s log-log slope %.3f\n", engine_name(e).c_str(), slope);
  }
  write_file_atomic(cfg.output_dir + "/bench_summary.json", summary.dump(2) + "\n");
  finish(cfg, "bench", timer);
  return kExitOk;
}

// --- tune ----------------------------------------------------------------

int run_tune(const ExperimentConfig& cfg, const std::string& method_name,
             double detune) {
  const WallTimer timer;
  const TuneMethod method = tune_method_from_name(method_name);
  TuneConfig tcfg = cfg.tune_config();
  const Task task = cfg.default_task();
  Vec18 theta0 = warm_gains();
  theta0.head<12>() *= detune;
  theta0 = cfg.bounds.clamp(theta0);

  const TuneResult r = tune_gains(task, theta0, method, tcfg);

  std::ostringstream csv;
  csv << "iteration,loss,rmse\n";
  for (size_t i = 0; i < r.loss_curve.size(); ++i) {
    csv << i << "," << csv_num(r.loss_curve[i]) << "," << csv_num(r.rmse_curve[i])
        << "\n";
  }
  const std::string stem = cfg.output_dir + "/tune_" + method_name;
  write_file_atomic(stem + "_curve.csv", csv.str());

  const bool unstable =
      r.diverged ||
      (!r.loss_curve.empty() && r.loss_curve.back() > 10.0 * r.loss_curve.front());
  write_file_atomic(stem + "_gains.json", gains_to_json(r.gains, unstable).dump(2) + "\n");

  std::printf("method %s: %zu iterations, loss %.4f -> %.4f, rmse %.4f -> %.4f%s\n",
              method_name.c_str(), r.loss_curve.size(),
              r.loss_curve.empty() ? 0.0 : r.loss_curve.front(),
              r.loss_curve.empty() ? 0.0 : r.loss_curve.back(),
              r.rmse_curve.empty() ? 0.0 : r.rmse_curve.front(),
              r.rmse_curve.empty() ? 0.0 : r.rmse_curve.back(),
              unstable ? "  [UNSTABLE]" : "");
  finish(cfg, "tune", timer);
  return kExitOk;
}

// --- train ---------------------------------------------------------------

void save_checkpoint_atomic(const PolicyParams& p, const std::string& path) {
  const std::string tmp = path + ".tmp";
  save_checkpoint(p, tmp);
  fs::rename(tmp, path);
}

int run_train(const ExperimentConfig& cfg, int epochs_override,
              std::string checkpoint_path, const std::string& resume) {
  const WallTimer timer;
  TrainConfig tcfg = cfg.train_config();
  if (epochs_override >= 0) tcfg.epochs = epochs_override;
  if (checkpoint_path.empty()) checkpoint_path = cfg.output_dir + "/policy.json";

  if (!resume.empty() && !fs::exists(resume)) {
    std::fprintf(stderr, "train: missing checkpoint '%s'\n", resume.c_str());
    return kExitMissingArtifact;
  }
  PolicyParams policy = resume.empty()
                            ? PolicyParams::init(cfg.seed, warm_gains(), cfg.bounds)
                            : load_checkpoint(resume);
  fs::create_directories(fs::path(checkpoint_path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(checkpoint_path).parent_path());
  save_checkpoint_atomic(policy, checkpoint_path);

  std::ostringstream log;
  log << "epoch,mean_loss,mean_rmse,crashes\n";
  for (int e = 0; e < tcfg.epochs; ++e) {
    const EpochResult r = train_epoch(policy, tcfg, e);
    log << e << "," << csv_num(r.mean_loss) << "," << csv_num(r.mean_rmse) << ","
        << r.crashes << "\n";
    if ((e + 1) % 10 == 0 || e + 1 == tcfg.epochs) {
      std::printf("epoch %4d  mean loss %.4f  mean rmse %.4f  crashes %d\n", e,
                  r.mean_loss, r.mean_rmse, r.crashes);
    }
    if ((e + 1) % cfg.checkpoint_every == 0 || e + 1 == tcfg.epochs) {
      save_checkpoint_atomic(policy, checkpoint_path);
      write_file_atomic(cfg.output_dir + "/train_log.csv", log.str());
    }
  }
  write_file_atomic(cfg.output_dir + "/train_log.csv", log.str());
  finish(cfg, "train", timer);
  std::printf("checkpoint: %s\n", checkpoint_path.c_str());
  return kExitOk;
}

// --- eval ----------------------------------------------------------------

int run_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
             const std::string& gains_path, bool perturbed) {
  const WallTimer timer;
  EvalConfig ecfg;
  ecfg.seed = cfg.seed;
  ecfg.horizon = cfg.horizon;
  ecfg.stride = cfg.stride;
  ecfg.noise = cfg.noise;
  ecfg.params = cfg.vehicle;
  ecfg.loss = cfg.loss;
  ecfg.bounds = cfg.bounds;
  ecfg.perturb.enabled = perturbed;

  const auto grid = default_eval_grid();
  std::vector<EvalRow> rows;
  const auto fixed_rows = evaluate_fixed(warm_gains(), "warm", grid, ecfg);
  rows.insert(rows.end(), fixed_rows.begin(), fixed_rows.end());

  if (!gains_path.empty()) {
    if (!fs::exists(gains_path)) {
      std::fprintf(stderr, "eval: missing gains file '%s'\n", gains_path.c_str());
      return kExitMissingArtifact;
    }
    const auto tuned = evaluate_fixed(gains_from_file(gains_path), "tuned", grid, ecfg);
    rows.insert(rows.end(), tuned.begin(), tuned.end());
  }
  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint)) {
      std::fprintf(stderr, "eval: missing checkpoint '%s'\n", checkpoint.c_str());
      return kExitMissingArtifact;
    }
    const PolicyParams policy = load_checkpoint(checkpoint);
    const auto prow = evaluate_policy(policy, "policy", grid, ecfg);
    rows.insert(rows.end(), prow.begin(), prow.end());
  }

  write_file_atomic(cfg.output_dir + "/eval.csv", eval_rows_csv(rows));
  std::printf("eval: %zu rows -> %s/eval.csv%s\n", rows.size(), cfg.output_dir.c_str(),
              perturbed ? " (perturbed plant)" : "");
  finish(cfg, "eval", timer);
  return kExitOk;
}

// --- plotdata ------------------------------------------------------------

int run_plotdata(const ExperimentConfig& cfg, const std::string& checkpoint,
                 const std::string& preset, double speed, double wind) {
  const WallTimer timer;
  RolloutConfig rcfg = cfg.rollout_config();
  const double duration =
      std::max(cfg.difficulty.min_duration, rcfg.horizon * cfg.vehicle.dt);
  const Task task = make_preset(preset, speed, wind, cfg.seed, duration);

  RolloutRecord rec;
  if (checkpoint.empty()) {
    rec = rollout_closed_loop(task, cfg.vehicle, cfg.loss, rcfg,
                              GainTrajectory::fixed(warm_gains()));
  } else {
    if (!fs::exists(checkpoint)) {
      std::fprintf(stderr, "plotdata: missing checkpoint '%s'\n", checkpoint.c_str());
      return kExitMissingArtifact;
    }
    const PolicyParams policy = load_checkpoint(checkpoint);
    rec = rollout_with_policy(policy, task, cfg.vehicle, cfg.loss, rcfg, cfg.bounds);
  }

  const double dt = cfg.vehicle.dt;
  std::ostringstream pos, dist, gains;
  pos << "t,px,py,pz,pdx,pdy,pdz\n";
  dist << "t,dhat_fx,dhat_fy,dhat_fz,d_fx,d_fy,d_fz,"
          "dhat_tx,dhat_ty,dhat_tz,d_tx,d_ty,d_tz\n";
  gains << "t";
  for (int i = 0; i < 18; ++i) gains << ",theta" << i;
  gains << "\n";
  for (int k = 0; k < rec.steps(); ++k) {
    const double t = k * dt;
    pos << csv_num(t);
    for (int i = 0; i < 3; ++i) pos << "," << csv_num(rec.x[k].p(i));
    for (int i = 0; i < 3; ++i) pos << "," << csv_num(rec.ref[k].p_d(i));
    pos << "\n";
    dist << csv_num(t);
    for (int i = 0; i < 3; ++i) dist << "," << csv_num(rec.xhat[k].dhat_f(i));
    for (int i = 0; i < 3; ++i) dist << "," << csv_num(rec.d[k].d_f(i));
    for (int i = 0; i < 3; ++i) dist << "," << csv_num(rec.xhat[k].dhat_tau(i));
    for (int i = 0; i < 3; ++i) dist << "," << csv_num(rec.d[k].d_tau(i));
    dist << "\n";
    gains << csv_num(t);
    for (int i = 0; i < 18; ++i) gains << "," << csv_num(rec.Theta[k](i));
    gains << "\n";
  }
  write_file_atomic(cfg.output_dir + "/plot_position.csv", pos.str());
  write_file_atomic(cfg.output_dir + "/plot_disturbance.csv", dist.str());
  write_file_atomic(cfg.output_dir + "/plot_gains.csv", gains.str());

  // Final-window disturbance-estimate quality, the headline convergence
  // number for the hover + constant-force scenario.
  const int n = rec.steps();
  const int w0 = std::max(0, n - std::max(1, n / 10));
  double err = 0.0, mag = 0.0;
  for (int k = w0; k < n; ++k) {
    err += (rec.xhat[k].dhat_f - rec.d[k].d_f).norm();
    mag += rec.d[k].d_f.norm();
  }
  const double rel = err / std::max(mag, 1e-12);
  std::printf("plotdata: %d steps, final-window disturbance error %.2f%%%s\n", n,
              100.0 * rel, rec.crashed ? "  [CRASHED]" : "");
  finish(cfg, "plotdata", timer);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadtune: differentiable closed-loop quadrotor gain tuning"};
  app.require_subcommand(1);

  CommonOpts gc_o, bench_o, tune_o, train_o, eval_o, plot_o;

  auto* gc = app.add_subcommand("gradcheck", "Verify gradients against the FD oracle");
  add_common(gc, gc_o);
  std::vector<std::string> gc_engines;
  int gc_horizon = 50, gc_samples = 3;
  double gc_corrupt = 0.0;
  gc->add_option("--engine", gc_engines,
                 "Blocks to run (jacobians, adjoint, forward-fixed, forward-ctg, meta)");
  gc->add_option("--horizon", gc_horizon, "Rollout steps per sample");
  gc->add_option("--samples", gc_samples, "Task instances");
  gc->add_option("--corrupt-jacobian", gc_corrupt,
                 "Test hook: perturb df/dx(0,0) by this amount");

  auto* bench = app.add_subcommand("bench", "Gradient timing and scaling slopes");
  add_common(bench, bench_o);
  std::vector<std::string> bench_engines;
  std::vector<int> bench_horizons;
  int bench_reps = 5, bench_copies = 1;
  bench->add_option("--engines", bench_engines, "Engines to time");
  bench->add_option("--horizons", bench_horizons, "Horizon sweep");
  bench->add_option("--repetitions", bench_reps, "Repetitions (best-of)");
  bench->add_option("--param-copies", bench_copies, "Gain-dimension inflation factor");

  auto* tune = app.add_subcommand("tune", "Gradient-descent gain tuning on one task");
  add_common(tune, tune_o);
  std::string tune_method = "adj-fixed";
  double tune_detune = 1.0;
  tune->add_option("--method", tune_method,
                   "dt-base | dt-fixed | dt-ctg | dt-history | adj-fixed | adj-adaptive");
  tune->add_option("--detune", tune_detune,
                   "Scale applied to the warm controller gains before tuning");

  auto* train = app.add_subcommand("train", "Meta-train the gain policy");
  add_common(train, train_o);
  int train_epochs = -1;
  std::string train_ckpt, train_resume;
  train->add_option("--epochs", train_epochs, "Epoch count override");
  train->add_option("--checkpoint", train_ckpt, "Checkpoint output path");
  train->add_option("--resume", train_resume, "Resume from a checkpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate methods over the preset grid");
  add_common(eval, eval_o);
  std::string eval_ckpt, eval_gains;
  bool eval_perturbed = false;
  eval->add_option("--checkpoint", eval_ckpt, "Policy checkpoint to evaluate");
  eval->add_option("--gains", eval_gains, "Tuned fixed-gain file to evaluate");
  eval->add_flag("--perturbed", eval_perturbed, "Use the perturbed transfer plant");

  auto* plot = app.add_subcommand("plotdata", "Re-simulate and emit time-series CSVs");
  add_common(plot, plot_o);
  std::string plot_ckpt, plot_preset = "hover";
  double plot_speed = 2.0, plot_wind = 1.0;
  plot->add_option("--checkpoint", plot_ckpt, "Policy checkpoint (warm gains if absent)");
  plot->add_option("--preset", plot_preset, "hover | 2d_circle | 3d_circle | figure8");
  plot->add_option("--speed", plot_speed, "Path speed [m/s]");
  plot->add_option("--wind", plot_wind, "Wind torque level [N m]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gc->parsed()) {
      return run_gradcheck(resolve_config(gc_o), gc_engines, gc_horizon, gc_samples,
                           gc_corrupt);
    }
    if (bench->parsed()) {
      return run_bench(resolve_config(bench_o), bench_engines, bench_horizons,
                       bench_reps, bench_copies);
    }
    if (tune->parsed()) {
      return run_tune(resolve_config(tune_o), tune_method, tune_detune);
    }
    if (train->parsed()) {
      return run_train(resolve_config(train_o), train_epochs, train_ckpt, train_resume);
    }
    if (eval->parsed()) {
      return run_eval(resolve_config(eval_o), eval_ckpt, eval_gains, eval_perturbed);
    }
    if (plot->parsed()) {
      return run_plotdata(resolve_config(plot_o), plot_ckpt, plot_preset, plot_speed,
                          plot_wind);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
