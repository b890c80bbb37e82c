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

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "poselift/model.hpp"
#include "poselift/occlusion.hpp"
#include "poselift/pose_core.hpp"

namespace poselift::metrics {

using Pose = Eigen::Matrix<double, Eigen::Dynamic, 3>;  // j x 3, mm

Pose to_pose(const PoseSequence3D& seq, int frame);
Pose to_pose(std::span<const float> joints_xyz);

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose apply(const Pose& p) const;
};

// Protocol 1: mean per-joint Euclidean distance.
double mpjpe_p1(const Pose& pred, const Pose& gt);

// Least-squares similarity transform (scale, proper rotation, translation)
// taking pred onto gt. Throws when either cloud has rank < 2.
std::pair<SimilarityTransform, Pose> procrustes_align(const Pose& pred, const Pose& gt);

// Protocol 2: P1 after Procrustes alignment.
double mpjpe_p2(const Pose& pred, const Pose& gt);

// Percentage of joints with error strictly below threshold_mm.
double pck(const Pose& pred, const Pose& gt, double threshold_mm = 150.0);

// Thresholds 5, 10, ..., 150 mm.
const std::array<double, 30>& auc_thresholds();
std::array<double, 30> pck_curve(const Pose& pred, const Pose& gt);
// Mean of the PCK curve over auc_thresholds().
double auc(const Pose& pred, const Pose& gt);

struct MetricRow {
  double mpjpe_p1 = 0.0;
  double mpjpe_p2 = 0.0;
  double pck = 0.0;
  double auc = 0.0;
  std::size_t n_poses = 0;
};

// How the (possibly occluded) 2D input reaches the model.
enum class InputMode {
  kClean,     // no occlusion injected
  kZeroFill,  // missing joints left as (0, 0, 0)
  kGuided,    // occlusion guidance
};
std::string to_string(InputMode mode);
InputMode parse_input_mode(const std::string& name);

struct OcclusionSetting {
  int n_missing = 0;
  std::uint64_t seed = 0;
  InputMode mode = InputMode::kGuided;
  occlusion::GuidanceConfig guidance;
};

// Model input for sequence `index` of an evaluation set under `setting`.
// Occlusion is injected over the whole clip with a seed derived from
// (setting.seed, index).
PoseSequence2D prepare_input(const PoseSequence2D& clean, const OcclusionSetting& setting,
                             std::size_t index);

struct EvalReport {
  std::map<std::string, MetricRow> per_action;
  MetricRow aggregate;  // unweighted mean of the action rows
  OcclusionSetting setting;
  std::string model_identity;

  nlohmann::json to_json() const;
};

// Central-frame lifter: receives a window and the (sequence, centre frame)
// it came from; returns j*3 root-relative mm for the centre frame.
using LiftFunction =
    std::function<std::vector<float>(const PoseSequence2D& window, std::size_t sequence, int frame)>;

// Sliding stride-1 evaluation: every frame of every sequence is the centre
// of one window (edges replicated) and is scored against its ground truth.
EvalReport evaluate(const LiftFunction& lift, int window_frames, const Dataset& data,
                    const OcclusionSetting& setting);
EvalReport evaluate(const model::DtfModel& model, const Dataset& data, const OcclusionSetting& setting);

}  // namespace poselift::metrics
