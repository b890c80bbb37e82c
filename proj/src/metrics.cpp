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

#include "poselift/metrics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "poselift/parallel.hpp"

namespace poselift::metrics {

namespace {

void check_shapes(const Pose& pred, const Pose& gt) {
  if (pred.rows() != gt.rows() || pred.rows() == 0) throw Error("pose shape mismatch");
}

// Number of singular values of the centred cloud above a relative cutoff.
int cloud_rank(const Pose& centred) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 1e-12) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > 1e-9 * s[0]) ++rank;
  return rank;
}

}  // namespace

Pose to_pose(const PoseSequence3D& seq, int frame) { return to_pose(seq.frame(frame)); }

Pose to_pose(std::span<const float> xyz) {
  if (xyz.size() % 3 != 0) throw Error("pose data length is not a multiple of 3");
  Pose p(static_cast<Eigen::Index>(xyz.size() / 3), 3);
  for (Eigen::Index j = 0; j < p.rows(); ++j)
    for (int c = 0; c < 3; ++c) p(j, c) = xyz[static_cast<std::size_t>(j) * 3 + c];
  return p;
}

Pose SimilarityTransform::apply(const Pose& p) const {
  Pose out = (scale * (p * rotation.transpose())).rowwise() + translation.transpose();
  return out;
}

double mpjpe_p1(const Pose& pred, const Pose& gt) {
  check_shapes(pred, gt);
  return (pred - gt).rowwise().norm().mean();
}

std::pair<SimilarityTransform, Pose> procrustes_align(const Pose& pred, const Pose& gt) {
  check_shapes(pred, gt);
  const Eigen::RowVector3d mu_pred = pred.colwise().mean();
  const Eigen::RowVector3d mu_gt = gt.colwise().mean();
  const Pose x = pred.rowwise() - mu_pred;
  const Pose y = gt.rowwise() - mu_gt;
  if (cloud_rank(x) < 2 || cloud_rank(y) < 2)
    throw Error("alignment failed: degenerate (rank < 2) joint cloud");

  // Cross-covariance H = x^T y; the optimal rotation maps x onto y.
  const Eigen::Matrix3d h = x.transpose() * y;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, 1.0);
  if ((v * u.transpose()).determinant() < 0.0) d[2] = -1.0;  // exclude reflections

  SimilarityTransform tf;
  tf.rotation = v * d.asDiagonal() * u.transpose();
  tf.scale = (svd.singularValues().array() * d.array()).sum() / x.squaredNorm();
  tf.translation = mu_gt.transpose() - tf.scale * tf.rotation * mu_pred.transpose();
  return {tf, tf.apply(pred)};
}

double mpjpe_p2(const Pose& pred, const Pose& gt) {
  return mpjpe_p1(procrustes_align(pred, gt).second, gt);
}

double pck(const Pose& pred, const Pose& gt, double threshold_mm) {
  check_shapes(pred, gt);
  const Eigen::VectorXd err = (pred - gt).rowwise().norm();
  const auto correct = (err.array() < threshold_mm).count();
  return 100.0 * static_cast<double>(correct) / static_cast<double>(err.size());
}

const std::array<double, 30>& auc_thresholds() {
  static const std::array<double, 30> thresholds = [] {
    std::array<double, 30> t{};
    for (int i = 0; i < 30; ++i) t[i] = 5.0 * (i + 1);
    return t;
  }();
  return thresholds;
}

std::array<double, 30> pck_curve(const Pose& pred, const Pose& gt) {
  std::array<double, 30> curve{};
  for (std::size_t i = 0; i < curve.size(); ++i) curve[i] = pck(pred, gt, auc_thresholds()[i]);
  return curve;
}

double auc(const Pose& pred, const Pose& gt) {
  const auto curve = pck_curve(pred, gt);
  double total = 0.0;
  for (double v : curve) total += v;
  return total / static_cast<double>(curve.size());
}

std::string to_string(InputMode mode) {
  switch (mode) {
    case InputMode::kClean: return "clean";
    case InputMode::kZeroFill: return "zero_fill";
    case InputMode::kGuided: return "guided";
  }
  return "unknown";
}

InputMode parse_input_mode(const std::string& name) {
  if (name == "clean") return InputMode::kClean;
  if (name == "zero_fill" || name == "zero" || name == "NOG") return InputMode::kZeroFill;
  if (name == "guided" || name == "guide") return InputMode::kGuided;
  throw Error("unknown input mode '" + name + "'");
}

PoseSequence2D prepare_input(const PoseSequence2D& clean, const OcclusionSetting& setting,
                             std::size_t index) {
  if (setting.mode == InputMode::kClean || setting.n_missing == 0) return clean;
  auto [occluded, mask] =
      occlusion::inject_occlusion(clean, setting.n_missing, derive_seed(setting.seed, index));
  if (setting.mode == InputMode::kZeroFill) return occlusion::zero_fill(occluded, mask);
  return occlusion::guide_sequence(occluded, mask, setting.guidance);
}

nlohmann::json EvalReport::to_json() const {
  auto row = [](const MetricRow& r) {
    return nlohmann::json{{"mpjpe_p1", r.mpjpe_p1}, {"mpjpe_p2", r.mpjpe_p2}, {"pck", r.pck},
                          {"auc", r.auc}, {"n_poses", r.n_poses}};
  };
  nlohmann::json actions = nlohmann::json::object();
  for (const auto& [name, r] : per_action) actions[name] = row(r);
  return {{"per_action", actions},
          {"aggregate", row(aggregate)},
          {"occlusion",
           {{"n_missing", setting.n_missing},
            {"seed", setting.seed},
            {"mode", to_string(setting.mode)},
            {"f_past", setting.guidance.f_past},
            {"f_future", setting.guidance.f_future},
            {"fallback", occlusion::to_string(setting.guidance.fallback)}}},
          {"model", model_identity}};
}

EvalReport evaluate(const LiftFunction& lift, int window_frames, const Dataset& data,
                    const OcclusionSetting& setting) {
  if (data.empty()) throw Error("evaluation dataset is empty");
  if (window_frames < 1) throw Error("window_frames must be >= 1");
  const int centre = window_frames / 2;

  struct SequenceSums {
    MetricRow sums;
  };
  std::vector<SequenceSums> per_sequence(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const LabeledSequence& s = data.sequences[i];
    const PoseSequence2D input = prepare_input(s.pose2d, setting, i);
    MetricRow& acc = per_sequence[i].sums;
    for (int f = 0; f < input.frames(); ++f) {
      const PoseSequence2D window = input.window(f - centre, window_frames);
      const std::vector<float> out = lift(window, i, f);
      const Pose pred = to_pose(out);
      const Pose gt = to_pose(s.pose3d, f);
      acc.mpjpe_p1 += mpjpe_p1(pred, gt);
      acc.mpjpe_p2 += mpjpe_p2(pred, gt);
      acc.pck += pck(pred, gt);
      acc.auc += auc(pred, gt);
      ++acc.n_poses;
    }
  });

  EvalReport report;
  report.setting = setting;
  std::map<std::string, MetricRow> sums;
  for (std::size_t i = 0; i < data.size(); ++i) {
    MetricRow& r = sums[data.sequences[i].action];
    const MetricRow& s = per_sequence[i].sums;
    r.mpjpe_p1 += s.mpjpe_p1;
    r.mpjpe_p2 += s.mpjpe_p2;
    r.pck += s.pck;
    r.auc += s.auc;
    r.n_poses += s.n_poses;
  }
  for (auto& [name, r] : sums) {
    const double n = static_cast<double>(r.n_poses);
    MetricRow row{r.mpjpe_p1 / n, r.mpjpe_p2 / n, r.pck / n, r.auc / n, r.n_poses};
    report.per_action[name] = row;
    report.aggregate.mpjpe_p1 += row.mpjpe_p1;
    report.aggregate.mpjpe_p2 += row.mpjpe_p2;
    report.aggregate.pck += row.pck;
    report.aggregate.auc += row.auc;
    report.aggregate.n_poses += row.n_poses;
  }
  const double n_actions = static_cast<double>(report.per_action.size());
  report.aggregate.mpjpe_p1 /= n_actions;
  report.aggregate.mpjpe_p2 /= n_actions;
  report.aggregate.pck /= n_actions;
  report.aggregate.auc /= n_actions;
  return report;
}

EvalReport evaluate(const model::DtfModel& model, const Dataset& data, const OcclusionSetting& setting) {
  auto lift = [&model](const PoseSequence2D& window, std::size_t, int) {
    auto pred = model.predict(window);
    return std::vector<float>(pred.central.data().begin(), pred.central.data().end());
  };
  EvalReport report = evaluate(lift, model.config().frames, data, setting);
  report.model_identity = model::to_string(model.config().variant) + "/seed=" + std::to_string(model.seed());
  return report;
}

}  // namespace poselift::metrics
