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

#include "quadtune/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qtune {

namespace {

using nlohmann::json;

struct SegmentAt {
  const PolySegment* seg = nullptr;
  double local_t = 0.0;
};

SegmentAt segment_at(const Task& task, double t) {
  SegmentAt out;
  double acc = 0.0;
  for (const auto& s : task.segments) {
    if (t <= acc + s.duration || &s == &task.segments.back()) {
      out.seg = &s;
      out.local_t = std::clamp(t - acc, 0.0, s.duration);
      return out;
    }
    acc += s.duration;
  }
  throw std::invalid_argument("segment_at: task has no segments");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

template <class S>
Eigen::Matrix<S, kFeatureDim, 1> build_features(const ObserverStateT<S>& xhat,
                                                const Task& task, double t,
                                                const FeatureScales& sc) {
  Eigen::Matrix<S, kFeatureDim, 1> f;
  int i = 0;
  for (int j = 0; j < 3; ++j) f(i++) = xhat.sys.p(j) * S(1.0 / sc.pos);
  for (int j = 0; j < 3; ++j) f(i++) = xhat.sys.v(j) * S(1.0 / sc.vel);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) f(i++) = xhat.sys.R(r, c);
  }
  for (int j = 0; j < 3; ++j) f(i++) = xhat.sys.Omega(j) * S(1.0 / sc.rate);
  for (int j = 0; j < 3; ++j) f(i++) = xhat.dhat_f(j) * S(1.0 / sc.dist_f);
  for (int j = 0; j < 3; ++j) f(i++) = xhat.dhat_tau(j) * S(1.0 / sc.dist_tau);

  const RefPoint ref = eval_ref(task, t);
  for (int j = 0; j < 3; ++j) f(i++) = S(ref.p_d(j) / sc.pos);
  for (int j = 0; j < 3; ++j) f(i++) = S(ref.v_d(j) / sc.vel);
  for (int j = 0; j < 3; ++j) f(i++) = S(ref.a_d(j) / sc.acc);
  f(i++) = S(ref.yaw_d / M_PI);

  const SegmentAt at = segment_at(task, t);
  const double cmax = std::max(1.0, at.seg->coeffs.cwiseAbs().maxCoeff());
  for (int k = 0; k < 8; ++k) {
    for (int ax = 0; ax < 4; ++ax) f(i++) = S(at.seg->coeffs(k, ax) / cmax);
  }
  f(i++) = S(at.seg->duration > 0.0 ? at.local_t / at.seg->duration : 0.0);
  const double total = task.total_duration();
  f(i++) = S(total > 0.0 ? std::clamp(t / total, 0.0, 1.0) : 0.0);
  return f;
}

template Eigen::Matrix<double, kFeatureDim, 1> build_features<double>(
    const ObserverStateT<double>&, const Task&, double, const FeatureScales&);
template Eigen::Matrix<Dual<18>, kFeatureDim, 1> build_features<Dual<18>>(
    const ObserverStateT<Dual<18>>&, const Task&, double, const FeatureScales&);

FeatureVec build_features(const ObserverState& xhat, const Task& task, double t,
                          const FeatureScales& sc) {
  return build_features<double>(xhat, task, t, sc);
}

Eigen::Matrix<double, kFeatureDim, 18> dfeat_dxhat(const ObserverState& xhat,
                                                   const Task& task, double t,
                                                   const FeatureScales& sc) {
  using D = Dual<18>;
  Eigen::Matrix<D, 18, 1> delta;
  for (int i = 0; i < 18; ++i) {
    delta(i) = D(0.0);
    delta(i).b(i) = 1.0;
  }
  const ObserverStateT<D> xh = apply_obs_tangent<D>(xhat, delta);
  const Eigen::Matrix<D, kFeatureDim, 1> f = build_features<D>(xh, task, t, sc);
  Eigen::Matrix<double, kFeatureDim, 18> out;
  for (int i = 0; i < kFeatureDim; ++i) out.row(i) = f(i).b.transpose();
  return out;
}

PolicyParams PolicyParams::init(std::uint64_t seed, const Vec18& warm_start,
                                const GainBounds& bounds) {
  PolicyParams p;
  std::seed_seq sseq{seed, static_cast<std::uint64_t>(0x5eedu)};
  std::mt19937_64 rng(sseq);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(kHiddenDim));
  std::uniform_real_distribution<double> u1(-s1, s1), u2(-s2, s2);

  p.W1.resize(kHiddenDim, kFeatureDim);
  for (int r = 0; r < kHiddenDim; ++r) {
    for (int c = 0; c < kFeatureDim; ++c) p.W1(r, c) = u1(rng);
  }
  p.b1 = Eigen::VectorXd::Zero(kHiddenDim);
  p.W2.resize(kGainDim, kHiddenDim);
  for (int r = 0; r < kGainDim; ++r) {
    for (int c = 0; c < kHiddenDim; ++c) p.W2(r, c) = u2(rng);
  }
  // Warm start: choose b2 so sigmoid(b2) maps to the hand-stable gains when
  // the (small, zero-mean) W2 contribution is ignored.
  p.b2.resize(kGainDim);
  for (int i = 0; i < kGainDim; ++i) {
    const double frac = std::clamp(
        (warm_start(i) - bounds.lo(i)) / (bounds.hi(i) - bounds.lo(i)), 1e-6, 1.0 - 1e-6);
    p.b2(i) = std::log(frac / (1.0 - frac));
  }

  p.m_W1 = Eigen::MatrixXd::Zero(kHiddenDim, kFeatureDim);
  p.v_W1 = p.m_W1;
  p.m_W2 = Eigen::MatrixXd::Zero(kGainDim, kHiddenDim);
  p.v_W2 = p.m_W2;
  p.m_b1 = Eigen::VectorXd::Zero(kHiddenDim);
  p.v_b1 = p.m_b1;
  p.m_b2 = Eigen::VectorXd::Zero(kGainDim);
  p.v_b2 = p.m_b2;
  return p;
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
  return W1.rows() == o.W1.rows() && W1.cols() == o.W1.cols() &&
         W2.rows() == o.W2.rows() && W2.cols() == o.W2.cols();
}

Vec18 policy_forward(const PolicyParams& p, const FeatureVec& feat, PolicyCache* cache) {
  const Eigen::VectorXd z1 = p.W1 * feat + p.b1;
  const Eigen::VectorXd a1 = z1.cwiseMax(0.0);
  const Vec18 eta = p.W2 * a1 + p.b2;
  if (cache != nullptr) {
    cache->feat = feat;
    cache->z1 = z1;
    cache->a1 = a1;
  }
  return eta;
}

Vec18 bound_gains(const Vec18& eta, const GainBounds& bounds) {
  Vec18 out;
  for (int i = 0; i < kGainDim; ++i) {
    out(i) = bounds.lo(i) + (bounds.hi(i) - bounds.lo(i)) * stable_sigmoid(eta(i));
  }
  return out;
}

Vec18 bound_gains_jacobian(const Vec18& eta, const GainBounds& bounds) {
  Vec18 out;
  for (int i = 0; i < kGainDim; ++i) {
    const double s = stable_sigmoid(eta(i));
    out(i) = (bounds.hi(i) - bounds.lo(i)) * s * (1.0 - s);
  }
  return out;
}

PolicyGrads PolicyGrads::zero() {
  PolicyGrads g;
  g.W1 = Eigen::MatrixXd::Zero(kHiddenDim, kFeatureDim);
  g.b1 = Eigen::VectorXd::Zero(kHiddenDim);
  g.W2 = Eigen::MatrixXd::Zero(kGainDim, kHiddenDim);
  g.b2 = Eigen::VectorXd::Zero(kGainDim);
  return g;
}

PolicyGrads& PolicyGrads::operator+=(const PolicyGrads& o) {
  W1 += o.W1;
  b1 += o.b1;
  W2 += o.W2;
  b2 += o.b2;
  return *this;
}

PolicyGrads& PolicyGrads::operator*=(double s) {
  W1 *= s;
  b1 *= s;
  W2 *= s;
  b2 *= s;
  return *this;
}

double PolicyGrads::norm() const {
  return std::sqrt(W1.squaredNorm() + b1.squaredNorm() + W2.squaredNorm() +
                   b2.squaredNorm());
}

FeatureVec policy_backward(const PolicyParams& p, const PolicyCache& cache,
                           const Vec18& deta, PolicyGrads& acc) {
  acc.b2 += deta;
  acc.W2 += deta * cache.a1.transpose();
  Eigen::VectorXd da1 = p.W2.transpose() * deta;
  for (int i = 0; i < kHiddenDim; ++i) {
    if (cache.z1(i) <= 0.0) da1(i) = 0.0;
  }
  acc.b1 += da1;
  acc.W1 += da1 * cache.feat.transpose();
  return p.W1.transpose() * da1;
}

Eigen::Matrix<double, 18, 18> policy_state_feedback(
    const PolicyParams& p, const PolicyCache& cache, const Vec18& eta,
    const GainBounds& bounds, const ObserverState& xhat, const Task& task,
    double t, const FeatureScales& sc) {
  const Eigen::Matrix<double, kFeatureDim, 18> df = dfeat_dxhat(xhat, task, t, sc);
  Eigen::MatrixXd hidden = p.W1 * df;  // 128 x 18
  for (int i = 0; i < kHiddenDim; ++i) {
    if (cache.z1(i) <= 0.0) hidden.row(i).setZero();
  }
  const Eigen::Matrix<double, 18, 18> deta_dxhat = p.W2 * hidden;
  return bound_gains_jacobian(eta, bounds).asDiagonal() * deta_dxhat;
}

namespace {
template <class M>
void adam_update(M& w, M& m, M& v, const M& g, const AdamConfig& cfg, double bc1,
                 double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square();
  w.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}
}  // namespace

void adam_step(PolicyParams& p, const PolicyGrads& g, const AdamConfig& cfg) {
  p.step_count += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step_count));
  adam_update(p.W1, p.m_W1, p.v_W1, g.W1, cfg, bc1, bc2);
  adam_update(p.W2, p.m_W2, p.v_W2, g.W2, cfg, bc1, bc2);
  adam_update(p.b1, p.m_b1, p.v_b1, g.b1, cfg, bc1, bc2);
  adam_update(p.b2, p.m_b2, p.v_b2, g.b2, cfg, bc1, bc2);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

Eigen::MatrixXd matrix_from_json(const json& a, int rows, int cols) {
  if (static_cast<int>(a.size()) != rows * cols) {
    throw std::runtime_error("checkpoint: weight block has wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  int i = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = a.at(i++).get<double>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const PolicyParams& p, const std::string& path) {
  json j;
  j["format"] = "quadtune-policy-v1";
  j["feature_dim"] = kFeatureDim;
  j["hidden_dim"] = kHiddenDim;
  j["gain_dim"] = kGainDim;
  j["step_count"] = p.step_count;
  j["W1"] = matrix_to_json(p.W1);
  j["b1"] = matrix_to_json(p.b1);
  j["W2"] = matrix_to_json(p.W2);
  j["b2"] = matrix_to_json(p.b2);
  j["m_W1"] = matrix_to_json(p.m_W1);
  j["v_W1"] = matrix_to_json(p.v_W1);
  j["m_b1"] = matrix_to_json(p.m_b1);
  j["v_b1"] = matrix_to_json(p.v_b1);
  j["m_W2"] = matrix_to_json(p.m_W2);
  j["v_W2"] = matrix_to_json(p.v_W2);
  j["m_b2"] = matrix_to_json(p.m_b2);
  j["v_b2"] = matrix_to_json(p.v_b2);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out << j.dump(1) << "\n";
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  json j;
  in >> j;
  if (j.value("format", "") != "quadtune-policy-v1") {
    throw std::runtime_error("checkpoint: unknown format");
  }
  if (j.at("feature_dim").get<int>() != kFeatureDim ||
      j.at("hidden_dim").get<int>() != kHiddenDim ||
      j.at("gain_dim").get<int>() != kGainDim) {
    throw std::runtime_error("checkpoint: dimension mismatch");
  }
  PolicyParams p;
  p.step_count = j.at("step_count").get<std::int64_t>();
  p.W1 = matrix_from_json(j.at("W1"), kHiddenDim, kFeatureDim);
  p.b1 = matrix_from_json(j.at("b1"), kHiddenDim, 1);
  p.W2 = matrix_from_json(j.at("W2"), kGainDim, kHiddenDim);
  p.b2 = matrix_from_json(j.at("b2"), kGainDim, 1);
  p.m_W1 = matrix_from_json(j.at("m_W1"), kHiddenDim, kFeatureDim);
  p.v_W1 = matrix_from_json(j.at("v_W1"), kHiddenDim, kFeatureDim);
  p.m_b1 = matrix_from_json(j.at("m_b1"), kHiddenDim, 1);
  p.v_b1 = matrix_from_json(j.at("v_b1"), kHiddenDim, 1);
  p.m_W2 = matrix_from_json(j.at("m_W2"), kGainDim, kHiddenDim);
  p.v_W2 = matrix_from_json(j.at("v_W2"), kGainDim, kHiddenDim);
  p.m_b2 = matrix_from_json(j.at("m_b2"), kGainDim, 1);
  p.v_b2 = matrix_from_json(j.at("v_b2"), kGainDim, 1);
  return p;
}

}  // namespace qtune
