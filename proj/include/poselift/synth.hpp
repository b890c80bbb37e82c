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
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "poselift/pose_core.hpp"

namespace poselift::synth {

using Angles = std::array<double, 3>;  // rotation about x, y, z in radians

// Sinusoidal joint-angle trajectories driving a forward-kinematics chain.
// The angle at joint j rotates the bone from parent(j) to j and everything
// below it: angle(t) = base + amplitude * sin(2*pi*frequency*t/fps + phase).
struct MotionSpec {
  SkeletonSpec skeleton = SkeletonSpec::human36m();
  std::vector<double> bone_lengths;       // mm, per joint (root entry unused)
  std::vector<Eigen::Vector3d> bone_dirs; // rest direction of each bone
  std::vector<Angles> base;
  std::vector<Angles> amplitudes;
  std::vector<Angles> frequencies;  // Hz
  std::vector<Angles> phases;
  double yaw = 0.0;  // whole-body heading
  int n_frames = 81;
  double fps = 50.0;
  std::string action_label;
  std::uint64_t seed = 0;

  void check() const;
};

std::vector<std::string> known_actions();

// Action template perturbed by the seed (amplitudes, phases, tempo, bone
// lengths and heading).
MotionSpec motion_spec_for_action(const std::string& action, int n_frames, std::uint64_t seed);

// Root-relative joint positions in mm, body frame with +y up.
PoseSequence3D generate_motion(const MotionSpec& spec);
// Same trajectory at 64-bit, indexed [frame][joint].
std::vector<std::vector<Eigen::Vector3d>> generate_positions(const MotionSpec& spec);

struct CameraSpec {
  double focal = 1150.0;  // pixels
  double cx = 500.0;
  double cy = 500.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d position = Eigen::Vector3d::Zero();      // camera centre, world mm
  int width = 1000;
  int height = 1000;

  // Camera 4.5 m in front of the origin at 1 m height looking along -z.
  static CameraSpec default_camera();
  void check() const;
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * (world - position);
  }
  nlohmann::json to_json() const;
  static CameraSpec from_json(const nlohmann::json& j);
};

// Adds a fixed world offset to every joint (body frame -> world frame).
PoseSequence3D place_in_world(const PoseSequence3D& body, const Eigen::Vector3d& root_world);

// World-frame joints -> camera frame.
PoseSequence3D to_camera_frame(const PoseSequence3D& world, const CameraSpec& cam);

// Pinhole projection of world-frame joints. x, y are measured from the
// principal point and divided by half the image width; confidence is 1.
PoseSequence2D project_to_2d(const PoseSequence3D& world, const CameraSpec& cam);

// Inverse of project_to_2d given camera-frame depths; returns the camera
// frame points re-centred on the root joint.
PoseSequence3D back_project(const PoseSequence2D& seq2d, const PoseSequence3D& camera_frame_depths,
                            const CameraSpec& cam, int root_index);

// i.i.d. Gaussian noise on x, y (normalized units); confidence untouched.
PoseSequence2D add_detector_noise(const PoseSequence2D& seq, double sigma, std::uint64_t seed);

struct ManifestEntry {
  std::string name;
  std::string action;
  std::string split;
  std::uint64_t seed = 0;
  std::string pose2d;  // file name relative to the dataset directory
  std::string pose3d;
  Eigen::Vector3d root_camera_mm = Eigen::Vector3d::Zero();
};

struct Manifest {
  int version = 1;
  int frames = 0;
  double fps = 50.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  CameraSpec camera;
  std::vector<ManifestEntry> entries;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

struct DatasetOptions {
  double sigma = 0.01;
  double test_fraction = 0.25;
  CameraSpec camera = CameraSpec::default_camera();
};

// Generates one clip: motion, world placement, projection and noise.
struct Clip {
  LabeledSequence sequence;
  ManifestEntry entry;
};
Clip make_clip(const std::string& action, int frames, std::uint64_t seed,
               const DatasetOptions& options);

// Writes seq_NNNN.pseq2d / seq_NNNN.pseq3d pairs plus manifest.json. Actions
// are assigned round-robin; the last test_fraction of clips form the test
// split. Every clip's motion seed is derived from (seed, index).
Manifest make_dataset(int n_sequences, const std::vector<std::string>& actions, int frames,
                      const std::filesystem::path& out_dir, std::uint64_t seed,
                      const DatasetOptions& options = {});

// The same clips as make_dataset, kept in memory.
Dataset make_dataset_in_memory(int n_sequences, const std::vector<std::string>& actions,
                               int frames, std::uint64_t seed, const DatasetOptions& options = {});

Manifest load_manifest(const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace poselift::synth
