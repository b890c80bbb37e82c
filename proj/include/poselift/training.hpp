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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poselift/metrics.hpp"
#include "poselift/model.hpp"
#include "poselift/occlusion.hpp"
#include "poselift/pose_core.hpp"

namespace poselift::training {

// NOG: train on zero-filled occluded input. OGV: train on clean input and use
// guidance only when evaluating. OAT: occlude and guide every training batch.
enum class OcclusionMode { kNOG, kOGV, kOAT };

std::string to_string(OcclusionMode mode);
OcclusionMode parse_occlusion_mode(const std::string& name);

struct TrainConfig {
  int batch_size = 32;
  std::int64_t steps = 1000;
  double learning_rate = 1e-3;
  double lr_decay = 0.98;  // multiplicative, applied once per epoch
  std::uint64_t seed = 0;
  OcclusionMode occlusion_mode = OcclusionMode::kOAT;
  int n_missing_per_frame = 16;
  // When larger than n_missing_per_frame, every sample draws its missing
  // count uniformly from [n_missing_per_frame, n_missing_max].
  int n_missing_max = -1;
  occlusion::GuidanceConfig guidance;
  bool full_sequence_loss = false;  // default: central frame only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int eval_every = 0;        // 0 disables periodic evaluation
  int eval_n_missing = -1;   // < 0: use n_missing_per_frame
  std::uint64_t eval_seed = 1;

  void check() const;
  // Input regime used when evaluating a model trained with this config.
  metrics::OcclusionSetting eval_setting() const;
};

struct OptimizerState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::vector<std::vector<float>> v_max;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const model::ParameterSet<float>& params);
  bool operator==(const OptimizerState&) const = default;
};

// Mean Euclidean distance over frames and joints (mm).
double mpjpe_loss(const PoseSequence3D& pred, const PoseSequence3D& gt);

struct AmsGradOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  v_max <- max(v_max, v);
// theta <- theta - lr * m_hat / (sqrt(v_max / (1 - b2^step)) + eps) with
// m_hat = m / (1 - b1^step). Same update as torch.optim.Adam(amsgrad=True).
void amsgrad_step(model::ParameterSet<float>& params, const std::vector<nn::Tensor<float>>& grads,
                  OptimizerState& state, const AmsGradOptions& options);

struct StepLog {
  std::int64_t step = 0;  // 1-based index of the completed step
  double loss = 0.0;
  double learning_rate = 0.0;
  std::optional<double> eval_mpjpe_p1;
  std::optional<double> eval_mpjpe_p2;

  nlohmann::json to_json() const;
};

struct Sample {
  PoseSequence2D input;   // model input after the occlusion regime
  PoseSequence3D target;  // ground-truth window
  std::size_t sequence = 0;
  int start = 0;
  int n_missing = 0;
  std::uint64_t mask_seed = 0;
};

class Trainer {
 public:
  Trainer(model::DtfModel model, Dataset train_data, TrainConfig cfg, Dataset eval_data = {});
  // Resumes from a saved optimizer state.
  Trainer(model::DtfModel model, OptimizerState state, Dataset train_data, TrainConfig cfg,
          Dataset eval_data = {});

  StepLog step();
  std::vector<StepLog> run(std::int64_t n_steps, const std::function<void(const StepLog&)>& on_step = nullptr);
  // Runs until cfg.steps total steps have completed.
  std::vector<StepLog> run_to_end(const std::function<void(const StepLog&)>& on_step = nullptr);

  // Deterministic batch for a 0-based step index.
  std::vector<Sample> make_batch(std::int64_t step) const;
  double learning_rate_at(std::int64_t step) const;
  std::int64_t steps_per_epoch() const;

  // Loss and mean gradient over a batch; gradients follow the parameter order.
  double loss_and_gradients(const std::vector<Sample>& batch, std::vector<nn::Tensor<float>>* grads) const;

  const model::DtfModel& model() const { return model_; }
  model::DtfModel& model() { return model_; }
  const OptimizerState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  struct WindowRef {
    std::size_t sequence;
    int start;
  };
  void index_windows();

  model::DtfModel model_;
  OptimizerState state_;
  Dataset train_;
  Dataset eval_;
  TrainConfig cfg_;
  std::vector<WindowRef> windows_;
};

struct TrainResult {
  model::DtfModel model;
  OptimizerState state;
  std::vector<StepLog> log;
};

TrainResult train(model::DtfModel model, const Dataset& dataset, const TrainConfig& cfg,
                  const Dataset& eval_data = {});

}  // namespace poselift::training
