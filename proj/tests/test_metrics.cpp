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

#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "doctest.h"
#include "oracles.hpp"
#include "poselift/metrics.hpp"
#include "poselift/synth.hpp"

using namespace poselift;
using namespace poselift::metrics;

namespace {

Pose random_pose(std::mt19937_64& rng, int joints = 17, double sd = 200.0) {
  std::normal_distribution<double> d(0.0, sd);
  Pose p(joints, 3);
  for (int j = 0; j < joints; ++j)
    for (int c = 0; c < 3; ++c) p(j, c) = d(rng);
  return p;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::Quaterniond q(d(rng), d(rng), d(rng), d(rng));
  return q.normalized().toRotationMatrix();
}

std::vector<double> flat(const Pose& p) {
  std::vector<double> out;
  for (int j = 0; j < p.rows(); ++j)
    for (int c = 0; c < 3; ++c) out.push_back(p(j, c));
  return out;
}

// Sum of squared residuals after the best scale and translation for a fixed rotation.
double sse_for_rotation(const Pose& pred, const Pose& gt, const Eigen::Matrix3d& r) {
  const Eigen::RowVector3d mp = pred.colwise().mean(), mg = gt.colwise().mean();
  const Pose x = (pred.rowwise() - mp) * r.transpose();
  const Pose y = gt.rowwise() - mg;
  const double s = std::max(0.0, (x.array() * y.array()).sum() / x.squaredNorm());
  return (s * x - y).squaredNorm();
}

Eigen::Matrix3d rotation_from(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

// Coarse grid over axis-angle space followed by shrinking coordinate search.
double brute_force_sse(const Pose& pred, const Pose& gt) {
  Eigen::Vector3d best_w = Eigen::Vector3d::Zero();
  double best = sse_for_rotation(pred, gt, Eigen::Matrix3d::Identity());
  const int n = 12;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const Eigen::Vector3d w(M_PI * (2.0 * a / n - 1.0), M_PI * (2.0 * b / n - 1.0), M_PI * (2.0 * c / n - 1.0));
        if (w.norm() > M_PI) continue;
        const double e = sse_for_rotation(pred, gt, rotation_from(w));
        if (e < best) {
          best = e;
          best_w = w;
        }
      }
  for (double step = 0.3; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int axis = 0; axis < 3; ++axis)
        for (double sign : {-1.0, 1.0}) {
          Eigen::Vector3d w = best_w;
          w[axis] += sign * step;
          const double e = sse_for_rotation(pred, gt, rotation_from(w));
          if (e < best) {
            best = e;
            best_w = w;
            improved = true;
          }
        }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("P1 examples and naive oracle") {
  std::mt19937_64 rng(1);
  const Pose a = random_pose(rng);
  CHECK(mpjpe_p1(a, a) == 0.0);
  Pose shifted = a;
  shifted.col(1).array() += 10.0;
  CHECK(mpjpe_p1(shifted, a) == doctest::Approx(10.0).epsilon(1e-12));
  for (int trial = 0; trial < 100; ++trial) {
    const Pose p = random_pose(rng), g = random_pose(rng);
    CHECK(std::abs(mpjpe_p1(p, g) - oracle::mpjpe(flat(p), flat(g))) < 1e-6);
  }
  CHECK_THROWS_AS(mpjpe_p1(random_pose(rng, 16), a), Error);
}

TEST_CASE("PCK examples and naive oracle") {
  std::mt19937_64 rng(2);
  const Pose a = random_pose(rng, 16);
  CHECK(pck(a, a) == 100.0);
  Pose half = a;
  for (int j = 0; j < 8; ++j) half(j, 0) += 200.0;
  CHECK(pck(half, a) == 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose p = random_pose(rng, 17, 80.0), g = random_pose(rng, 17, 80.0);
    for (double th : {50.0, 150.0}) CHECK(std::abs(pck(p, g, th) - oracle::pck(flat(p), flat(g), th)) < 1e-6);
  }
}

TEST_CASE("AUC examples") {
  std::mt19937_64 rng(3);
  const Pose a = random_pose(rng);
  CHECK(auc(a, a) == 100.0);
  auto offset = [&](double mm) {
    Pose p = a;
    p.col(2).array() += mm;
    return p;
  };
  CHECK(auc(offset(76.0), a) == 50.0);
  CHECK(auc(offset(151.0), a) == 0.0);
  CHECK(auc_thresholds().front() == 5.0);
  CHECK(auc_thresholds().back() == 150.0);
}

TEST_CASE("PCK curve is monotone in the threshold and AUC is its mean") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose p = random_pose(rng, 17, 60.0), g = random_pose(rng, 17, 60.0);
    const auto curve = pck_curve(p, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (i) CHECK(curve[i] >= curve[i - 1]);
      CHECK(curve[i] >= 0.0);
      CHECK(curve[i] <= 100.0);
      sum += curve[i];
    }
    CHECK(auc(p, g) == doctest::Approx(sum / 30.0).epsilon(1e-12));
  }
}

TEST_CASE("P2 never exceeds P1") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Pose p = random_pose(rng), g = random_pose(rng);
    CHECK(mpjpe_p2(p, g) <= mpjpe_p1(p, g) + 1e-9);
  }
}

TEST_CASE("Procrustes recovers similarity transforms exactly") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> scale(0.2, 5.0), shift(-1000.0, 1000.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose gt = random_pose(rng);
    SimilarityTransform tf;
    tf.scale = scale(rng);
    tf.rotation = random_rotation(rng);
    tf.translation = {shift(rng), shift(rng), shift(rng)};
    const Pose pred = tf.apply(gt);
    const auto [found, aligned] = procrustes_align(pred, gt);
    CHECK(mpjpe_p1(aligned, gt) < 1e-6);
    CHECK(std::abs(found.scale - 1.0 / tf.scale) < 1e-9);
    CHECK(std::abs(found.rotation.determinant() - 1.0) < 1e-6);
    CHECK((found.rotation.transpose() * found.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-6);
  }
  const Pose gt = random_pose(rng);
  CHECK(mpjpe_p2(2.0 * gt, gt) < 1e-6);
}

TEST_CASE("Procrustes residual is invariant to pre-applied similarity transforms") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.5, 3.0), shift(-500.0, 500.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pred = random_pose(rng), gt = random_pose(rng);
    SimilarityTransform tf;
    tf.scale = scale(rng);
    tf.rotation = random_rotation(rng);
    tf.translation = {shift(rng), shift(rng), shift(rng)};
    CHECK(std::abs(mpjpe_p2(tf.apply(pred), gt) - mpjpe_p2(pred, gt)) < 1e-7);
  }
}

TEST_CASE("Procrustes matches a brute-force search over rotations") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose gt = random_pose(rng, 8);
    const Pose pred = (gt * random_rotation(rng).transpose()) * 1.3 + 40.0 * random_pose(rng, 8, 1.0);
    const auto aligned = procrustes_align(pred, gt).second;
    const double closed = (aligned - gt).squaredNorm();
    const double brute = brute_force_sse(pred, gt);
    CHECK(closed <= brute + 1e-6 * brute);
    CHECK(brute <= closed * (1.0 + 1e-6) + 1e-9);
  }
}

TEST_CASE("Procrustes refuses reflections and degenerate clouds") {
  // Asymmetric tetrahedron and its mirror image.
  Pose gt(4, 3);
  gt << 0, 0, 0, 100, 0, 0, 0, 200, 0, 0, 0, 300;
  Pose mirror = gt;
  mirror.col(0) *= -1.0;
  CHECK(mpjpe_p2(mirror, gt) > 1.0);
  // No proper rotation zeroes the residual: brute force agrees it stays positive.
  CHECK(brute_force_sse(mirror, gt) > 1.0);

  Pose line(5, 3);
  for (int j = 0; j < 5; ++j) line.row(j) << j * 10.0, j * 20.0, j * 30.0;
  Pose cloud(5, 3);
  cloud.setRandom();
  CHECK_THROWS_WITH_AS(procrustes_align(line, cloud), doctest::Contains("alignment failed"), Error);
  CHECK_THROWS_WITH_AS(procrustes_align(cloud, line), doctest::Contains("alignment failed"), Error);
}

TEST_CASE("evaluation of a perfect lifter gives zero error") {
  synth::DatasetOptions opt;
  opt.sigma = 0.0;
  const Dataset data = synth::make_dataset_in_memory(6, {"walk", "sit", "wave"}, 15, 3, opt);
  OcclusionSetting setting;
  setting.n_missing = 8;
  setting.seed = 4;
  const LiftFunction oracle_lift = [&](const PoseSequence2D&, std::size_t seq, int frame) {
    auto row = data.sequences[seq].pose3d.frame(frame);
    return std::vector<float>(row.begin(), row.end());
  };
  const EvalReport r = evaluate(oracle_lift, 9, data, setting);
  CHECK(r.per_action.size() == 3);
  for (const auto& [name, row] : r.per_action) {
    CHECK(row.mpjpe_p1 == 0.0);
    CHECK(row.mpjpe_p2 < 1e-6);
    CHECK(row.pck == 100.0);
    CHECK(row.auc == 100.0);
  }
  CHECK(r.aggregate.mpjpe_p1 == 0.0);
  CHECK(r.aggregate.n_poses == 6 * 15);
}

TEST_CASE("aggregate is the unweighted mean of action rows") {
  const Dataset data = synth::make_dataset_in_memory(5, {"walk", "sit"}, 11, 8);
  const auto fixed = data.sequences[0].pose3d.frame(0);
  const LiftFunction fixed_lift = [&](const PoseSequence2D&, std::size_t, int) {
    return std::vector<float>(fixed.begin(), fixed.end());
  };
  const EvalReport r = evaluate(fixed_lift, 5, data, {});
  REQUIRE(r.per_action.size() == 2);
  double p1 = 0.0, pck_sum = 0.0;
  for (const auto& [name, row] : r.per_action) {
    p1 += row.mpjpe_p1 / 2.0;
    pck_sum += row.pck / 2.0;
  }
  CHECK(r.aggregate.mpjpe_p1 == doctest::Approx(p1).epsilon(1e-12));
  CHECK(r.aggregate.pck == doctest::Approx(pck_sum).epsilon(1e-12));
  // Three walk clips against two sit clips, so pose weighting would differ.
  CHECK(r.aggregate.mpjpe_p1 > 0.0);
  CHECK(r.to_json().at("aggregate").at("mpjpe_p1").get<double>() == r.aggregate.mpjpe_p1);
}

TEST_CASE("evaluation windows replicate edges and use the occluded input deterministically") {
  const Dataset data = synth::make_dataset_in_memory(2, {"walk"}, 6, 9);
  OcclusionSetting setting;
  setting.n_missing = 10;
  setting.seed = 7;
  setting.mode = InputMode::kZeroFill;
  std::vector<PoseSequence2D> seen;
  const LiftFunction probe = [&](const PoseSequence2D& w, std::size_t seq, int frame) {
    if (seq == 0 && frame == 0) seen.push_back(w);
    auto row = data.sequences[seq].pose3d.frame(frame);
    return std::vector<float>(row.begin(), row.end());
  };
  evaluate(probe, 5, data, setting);
  evaluate(probe, 5, data, setting);
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == seen[1]);
  const PoseSequence2D input = prepare_input(data.sequences[0].pose2d, setting, 0);
  for (int f = 0; f < 5; ++f)
    for (int j = 0; j < 17; ++j)
      for (int c = 0; c < 3; ++c) CHECK(seen[0].at(f, j, c) == input.at(std::max(0, f - 2), j, c));
  CHECK_THROWS_AS(evaluate(probe, 5, Dataset{}, setting), Error);
}

TEST_CASE("input modes") {
  const Dataset data = synth::make_dataset_in_memory(1, {"walk"}, 10, 2);
  const auto& clean = data.sequences[0].pose2d;
  OcclusionSetting s;
  s.n_missing = 0;
  s.mode = InputMode::kZeroFill;
  CHECK(prepare_input(clean, s, 0) == clean);
  s.mode = InputMode::kGuided;
  CHECK(prepare_input(clean, s, 0) == clean);
  s.n_missing = 5;
  s.mode = InputMode::kClean;
  CHECK(prepare_input(clean, s, 0) == clean);
  CHECK(parse_input_mode("zero_fill") == InputMode::kZeroFill);
  CHECK_THROWS_AS(parse_input_mode("x"), Error);
}
