// Copyright 2026 The poselift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "poselift/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "poselift/parallel.hpp"

namespace poselift::training {

std::string to_string(OcclusionMode mode) {
  switch (mode) {
    case OcclusionMode::kNOG: return "NOG";
    case OcclusionMode::kOGV: return "OGV";
    case OcclusionMode::kOAT: return "OAT";
  }
  return "unknown";
}

OcclusionMode parse_occlusion_mode(const std::string& name) {
  if (name == "NOG" || name == "nog") return OcclusionMode::kNOG;
  if (name == "OGV" || name == "ogv") return OcclusionMode::kOGV;
  if (name == "OAT" || name == "oat") return OcclusionMode::kOAT;
  throw Error("unknown occlusion mode '" + name + "' (expected NOG|OGV|OAT)");
}

void TrainConfig::check() const {
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (steps < 0) throw Error("steps must be >= 0");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (!(lr_decay > 0.0)) throw Error("lr_decay must be > 0");
  if (n_missing_per_frame < 0) throw Error("n_missing_per_frame must be >= 0");
  if (n_missing_max >= 0 && n_missing_max < n_missing_per_frame)
    throw Error("n_missing_max must be >= n_missing_per_frame");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error("AMSGrad betas must lie in [0, 1)");
  if (eval_every < 0) throw Error("eval_every must be >= 0");
  guidance.check();
}

metrics::OcclusionSetting TrainConfig::eval_setting() const {
  metrics::OcclusionSetting s;
  s.n_missing = eval_n_missing >= 0 ? eval_n_missing : n_missing_per_frame;
  s.seed = eval_seed;
  s.mode = occlusion_mode == OcclusionMode::kNOG ? metrics::InputMode::kZeroFill : metrics::InputMode::kGuided;
  s.guidance = guidance;
  return s;
}

OptimizerState OptimizerState::zeros_like(const model::ParameterSet<float>& params) {
  OptimizerState s;
  for (const auto& t : params.tensors) {
    s.m.emplace_back(t.size(), 0.0f);
    s.v.emplace_back(t.size(), 0.0f);
    s.v_max.emplace_back(t.size(), 0.0f);
  }
  return s;
}

double mpjpe_loss(const PoseSequence3D& pred, const PoseSequence3D& gt) {
  if (pred.frames() != gt.frames() || pred.joints() != gt.joints())
    throw Error("mpjpe_loss: shape mismatch");
  double total = 0.0;
  for (int f = 0; f < pred.frames(); ++f)
    for (int j = 0; j < pred.joints(); ++j) {
      double sq = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(pred.at(f, j, c)) - gt.at(f, j, c);
        sq += d * d;
      }
      total += std::sqrt(sq);
    }
  return total / (static_cast<double>(pred.frames()) * pred.joints());
}

void amsgrad_step(model::ParameterSet<float>& params, const std::vector<nn::Tensor<float>>& grads,
                  OptimizerState& state, const AmsGradOptions& o) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw Error("amsgrad_step: parameter, gradient and state counts differ");
  ++state.step;
  const double bias1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& theta = params.tensors[p].data;
    const auto& g = grads[p].data;
    if (g.size() != theta.size()) throw Error("amsgrad_step: gradient shape mismatch for " + params.names[p]);
    auto& m = state.m[p];
    auto& v = state.v[p];
    auto& vmax = state.v_max[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<float>(o.beta1 * m[i] + (1.0 - o.beta1) * gi);
      v[i] = static_cast<float>(o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi);
      vmax[i] = std::max(vmax[i], v[i]);
      const double m_hat = m[i] / bias1;
      theta[i] -= static_cast<float>(o.learning_rate * m_hat / (std::sqrt(static_cast<double>(vmax[i]) / bias2) + o.epsilon));
    }
  }
}

nlohmann::json StepLog::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["loss"] = loss;
  j["eval_mpjpe_p1"] = eval_mpjpe_p1 ? nlohmann::ordered_json(*eval_mpjpe_p1) : nlohmann::ordered_json();
  j["eval_mpjpe_p2"] = eval_mpjpe_p2 ? nlohmann::ordered_json(*eval_mpjpe_p2) : nlohmann::ordered_json();
  j["lr"] = learning_rate;
  return nlohmann::json::parse(j.dump());
}

Trainer::Trainer(model::DtfModel model, Dataset train_data, TrainConfig cfg, Dataset eval_data)
    : Trainer(std::move(model), OptimizerState{}, std::move(train_data), std::move(cfg), std::move(eval_data)) {}

Trainer::Trainer(model::DtfModel model, OptimizerState state, Dataset train_data, TrainConfig cfg,
                 Dataset eval_data)
    : model_(std::move(model)), state_(std::move(state)), train_(std::move(train_data)),
      eval_(std::move(eval_data)), cfg_(std::move(cfg)) {
  cfg_.check();
  if (train_.empty()) throw Error("training dataset is empty");
  const auto& mc = model_.config();
  const int max_missing = std::max(cfg_.n_missing_per_frame, cfg_.n_missing_max);
  if (cfg_.occlusion_mode != OcclusionMode::kOGV && max_missing >= mc.joints)
    throw Error("n_missing_per_frame must be smaller than the joint count");
  for (const auto& s : train_.sequences) {
    if (s.pose2d.joints() != mc.joints || s.pose3d.joints() != mc.joints)
      throw Error("dimension mismatch: sequence '" + s.name + "' has " + std::to_string(s.pose2d.joints()) +
                  " joints, model expects " + std::to_string(mc.joints));
    if (s.pose2d.frames() != s.pose3d.frames()) throw Error("sequence '" + s.name + "' has mismatched 2D/3D lengths");
  }
  if (state_.m.empty()) state_ = OptimizerState::zeros_like(model_.params());
  if (state_.m.size() != model_.params().size()) throw Error("optimizer state does not match the model");
  index_windows();
}

void Trainer::index_windows() {
  const int t = model_.config().frames;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    const int len = train_.sequences[i].pose2d.frames();
    if (len >= t) {
      for (int s = 0; s + t <= len; ++s) windows_.push_back({i, s});
    } else {
      windows_.push_back({i, (len - t) / 2});  // edge-replicated
    }
  }
}

std::int64_t Trainer::steps_per_epoch() const {
  const auto n = static_cast<std::int64_t>(windows_.size());
  return std::max<std::int64_t>(1, (n + cfg_.batch_size - 1) / cfg_.batch_size);
}

double Trainer::learning_rate_at(std::int64_t step) const {
  return cfg_.learning_rate * std::pow(cfg_.lr_decay, static_cast<double>(step / steps_per_epoch()));
}

std::vector<Sample> Trainer::make_batch(std::int64_t step) const {
  const std::int64_t spe = steps_per_epoch();
  const std::int64_t epoch = step / spe;
  const std::int64_t pos = step % spe;
  std::vector<std::size_t> order(windows_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(cfg_.seed, 0x5EED, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const int t = model_.config().frames;
  std::vector<Sample> batch(cfg_.batch_size);
  for (int b = 0; b < cfg_.batch_size; ++b) {
    const WindowRef& w = windows_[order[(pos * cfg_.batch_size + b) % order.size()]];
    const LabeledSequence& s = train_.sequences[w.sequence];
    Sample& out = batch[b];
    out.sequence = w.sequence;
    out.start = w.start;
    out.target = s.pose3d.window(w.start, t);
    PoseSequence2D clean = s.pose2d.window(w.start, t);
    if (cfg_.occlusion_mode == OcclusionMode::kOGV) {
      out.input = std::move(clean);
      continue;
    }
    out.mask_seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(step) + 1, static_cast<std::uint64_t>(b) + 1);
    out.n_missing = cfg_.n_missing_per_frame;
    if (cfg_.n_missing_max > cfg_.n_missing_per_frame) {
      std::mt19937_64 rng(mix_seed(out.mask_seed));
      out.n_missing = std::uniform_int_distribution<int>(cfg_.n_missing_per_frame, cfg_.n_missing_max)(rng);
    }
    auto [occluded, mask] = occlusion::inject_occlusion(clean, out.n_missing, out.mask_seed);
    out.input = cfg_.occlusion_mode == OcclusionMode::kNOG
                    ? occlusion::zero_fill(occluded, mask)
                    : occlusion::guide_sequence(occluded, mask, cfg_.guidance);
  }
  return batch;
}

double Trainer::loss_and_gradients(const std::vector<Sample>& batch, std::vector<nn::Tensor<float>>* grads) const {
  const auto& mc = model_.config();
  const auto& params = model_.params();
  struct Result {
    double loss = 0.0;
    std::vector<nn::Tensor<float>> grads;
  };
  std::vector<Result> results(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    nn::Tape<float> tape;
    model::Bound<float> b = model::bind(tape, mc, model_.layout(), params, grads != nullptr);
    nn::Var input = tape.constant(model::input_tensor<float>(batch[i].input, mc));
    model::ForwardVars<float> out = model::model_forward(tape, b, input);
    nn::Var loss;
    if (cfg_.full_sequence_loss) {
      nn::Tensor<float> target({mc.frames, mc.joints * 3});
      std::copy(batch[i].target.data().begin(), batch[i].target.data().end(), target.data.begin());
      loss = nn::mean_joint_distance(tape, out.sequence, target);
    } else {
      nn::Tensor<float> target({1, mc.joints * 3});
      auto row = batch[i].target.frame(mc.central_index());
      std::copy(row.begin(), row.end(), target.data.begin());
      loss = nn::mean_joint_distance(tape, out.central, target);
    }
    results[i].loss = tape.value(loss).data[0];
    if (!grads) return;
    tape.backward(loss);
    for (nn::Var v : b.vars) results[i].grads.push_back(tape.grad(v));
  });

  double total = 0.0;
  for (const auto& r : results) total += r.loss;
  const float inv = 1.0f / static_cast<float>(batch.size());
  if (grads) {
    grads->clear();
    for (const auto& t : params.tensors) grads->emplace_back(t.shape);
    for (const auto& r : results)
      for (std::size_t p = 0; p < grads->size(); ++p)
        for (std::size_t k = 0; k < r.grads[p].size(); ++k) (*grads)[p].data[k] += r.grads[p].data[k];
    for (auto& g : *grads)
      for (auto& x : g.data) x *= inv;
  }
  return total / static_cast<double>(batch.size());
}

StepLog Trainer::step() {
  const std::int64_t index = state_.step;
  const std::vector<Sample> batch = make_batch(index);
  std::vector<nn::Tensor<float>> grads;
  const double loss = loss_and_gradients(batch, &grads);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss " << loss << " at step " << index + 1;
    throw Error(msg.str());
  }
  StepLog log;
  log.learning_rate = learning_rate_at(index);
  amsgrad_step(model_.params(), grads, state_,
               {log.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon});
  log.step = state_.step;
  log.loss = loss;
  if (cfg_.eval_every > 0 && !eval_.empty() && log.step % cfg_.eval_every == 0) {
    const metrics::EvalReport report = metrics::evaluate(model_, eval_, cfg_.eval_setting());
    log.eval_mpjpe_p1 = report.aggregate.mpjpe_p1;
    log.eval_mpjpe_p2 = report.aggregate.mpjpe_p2;
  }
  return log;
}

std::vector<StepLog> Trainer::run(std::int64_t n_steps, const std::function<void(const StepLog&)>& on_step) {
  std::vector<StepLog> logs;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    logs.push_back(step());
    if (on_step) on_step(logs.back());
  }
  return logs;
}

std::vector<StepLog> Trainer::run_to_end(const std::function<void(const StepLog&)>& on_step) {
  return run(std::max<std::int64_t>(0, cfg_.steps - state_.step), on_step);
}

TrainResult train(model::DtfModel model, const Dataset& dataset, const TrainConfig& cfg, const Dataset& eval_data) {
  Trainer trainer(std::move(model), dataset, cfg, eval_data);
  auto log = trainer.run_to_end();
  return {trainer.model(), trainer.state(), std::move(log)};
}

}  // namespace poselift::training
