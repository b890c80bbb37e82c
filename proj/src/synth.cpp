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

#include "poselift/synth.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "poselift/parallel.hpp"

namespace poselift::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Rest offsets (mm) of each joint from its parent, Human3.6M order.
const std::array<Eigen::Vector3d, 17> kRestOffsets = {{
    {0, 0, 0},       // hip
    {-130, 0, 0},    // r_hip
    {0, -450, 0},    // r_knee
    {0, -440, 0},    // r_ankle
    {130, 0, 0},     // l_hip
    {0, -450, 0},    // l_knee
    {0, -440, 0},    // l_ankle
    {0, 230, 10},    // spine
    {0, 250, 0},     // thorax
    {0, 110, 15},    // neck
    {0, 115, 0},     // head
    {150, -10, 0},   // l_shoulder
    {0, -280, 0},    // l_elbow
    {0, -250, 0},    // l_wrist
    {-150, -10, 0},  // r_shoulder
    {0, -280, 0},    // r_elbow
    {0, -250, 0},    // r_wrist
}};

enum Joint {
  kHip = 0, kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle, kSpine, kThorax,
  kNeck, kHead, kLShoulder, kLElbow, kLWrist, kRShoulder, kRElbow, kRWrist
};

// Angle at joint j rotates the bone ending at j. Positive x rotation swings a
// downward bone backwards (-z is behind the body, +z faces the camera).
struct Template {
  double frequency;
  std::array<Angles, 17> base{};
  std::array<Angles, 17> amp{};
  std::array<Angles, 17> phase{};
};

Template make_template(const std::string& action) {
  Template t{};
  // Arms hang slightly abducted by default.
  t.base[kLElbow][2] = 0.15;
  t.base[kRElbow][2] = -0.15;
  auto set = [&](Joint j, int axis, double base, double amp, double phase) {
    t.base[j][axis] = base;
    t.amp[j][axis] = amp;
    t.phase[j][axis] = phase;
  };
  if (action == "walk") {
    t.frequency = 0.9;
    set(kRKnee, 0, 0.0, 0.5, 0.0);
    set(kLKnee, 0, 0.0, 0.5, kPi);
    set(kRAnkle, 0, 0.35, 0.3, kPi / 2);
    set(kLAnkle, 0, 0.35, 0.3, kPi / 2 + kPi);
    set(kLElbow, 0, 0.0, 0.4, 0.0);
    set(kRElbow, 0, 0.0, 0.4, kPi);
    set(kLWrist, 0, -0.3, 0.15, 0.0);
    set(kRWrist, 0, -0.3, 0.15, kPi);
    set(kSpine, 1, 0.0, 0.1, 0.0);
    set(kHip, 1, 0.0, 0.08, 0.0);
  } else if (action == "sit") {
    t.frequency = 0.3;
    set(kRKnee, 0, -1.45, 0.05, 0.0);
    set(kLKnee, 0, -1.45, 0.05, 0.5);
    set(kRAnkle, 0, 1.45, 0.05, 0.0);
    set(kLAnkle, 0, 1.45, 0.05, 0.5);
    set(kSpine, 0, -0.15, 0.1, 0.0);
    set(kLElbow, 0, -0.4, 0.2, 0.0);
    set(kRElbow, 0, -0.4, 0.2, 1.0);
    set(kLWrist, 0, -0.9, 0.2, 0.3);
    set(kRWrist, 0, -0.9, 0.2, 1.3);
    set(kHead, 1, 0.0, 0.3, 0.0);
  } else if (action == "wave") {
    t.frequency = 1.2;
    set(kRElbow, 2, -2.3, 0.2, 0.0);
    set(kRWrist, 2, -0.4, 0.6, 0.0);
    set(kSpine, 2, 0.0, 0.05, 0.0);
    set(kHead, 1, 0.0, 0.15, kPi / 3);
    set(kRKnee, 0, -0.05, 0.03, 0.0);
    set(kLKnee, 0, -0.05, 0.03, kPi);
  } else if (action == "squat") {
    t.frequency = 0.4;
    set(kRKnee, 0, -0.9, -0.9, 0.0);
    set(kLKnee, 0, -0.9, -0.9, 0.0);
    set(kRAnkle, 0, 1.2, 1.2, 0.0);
    set(kLAnkle, 0, 1.2, 1.2, 0.0);
    set(kSpine, 0, -0.3, -0.3, 0.0);
    set(kLElbow, 0, -1.3, 0.2, 0.0);
    set(kRElbow, 0, -1.3, 0.2, 0.0);
  } else if (action == "reach") {
    t.frequency = 0.5;
    set(kLElbow, 0, -0.8, 0.7, 0.0);
    set(kRElbow, 0, -0.8, 0.7, kPi);
    set(kLWrist, 0, -0.3, 0.3, 0.0);
    set(kRWrist, 0, -0.3, 0.3, kPi);
    set(kSpine, 0, 0.0, -0.2, 0.0);
    set(kThorax, 1, 0.0, 0.3, kPi / 2);
  } else if (action == "box") {
    t.frequency = 1.0;
    set(kLElbow, 0, -1.2, 0.3, 0.0);
    set(kLWrist, 0, -1.6, 1.2, 0.0);
    set(kRElbow, 0, -1.2, 0.3, kPi);
    set(kRWrist, 0, -1.6, 1.2, kPi);
    set(kRKnee, 0, -0.2, 0.0, 0.0);
    set(kLKnee, 0, 0.2, 0.0, 0.0);
    set(kRAnkle, 0, 0.3, 0.0, 0.0);
    set(kLAnkle, 0, 0.3, 0.0, 0.0);
    set(kSpine, 1, 0.0, 0.25, 0.0);
  } else {
    throw Error("unknown action '" + action + "'");
  }
  return t;
}

Eigen::Matrix3d rotation_xyz(const Angles& a) {
  return (Eigen::AngleAxisd(a[2], Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(a[1], Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(a[0], Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

nlohmann::json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
Eigen::Vector3d vec_from(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

std::string clip_name(int index) {
  std::ostringstream s;
  s << "seq_" << std::setw(4) << std::setfill('0') << index;
  return s.str();
}

}  // namespace

std::vector<std::string> known_actions() { return {"walk", "sit", "wave", "squat", "reach", "box"}; }

void MotionSpec::check() const {
  if (auto err = skeleton.tree_error(); !err.empty()) throw Error("invalid skeleton: " + err);
  const std::size_t j = static_cast<std::size_t>(skeleton.n_joints);
  if (bone_lengths.size() != j || bone_dirs.size() != j || base.size() != j ||
      amplitudes.size() != j || frequencies.size() != j || phases.size() != j)
    throw Error("motion parameter arrays must have one entry per joint");
  for (std::size_t i = 0; i < j; ++i) {
    if (static_cast<int>(i) == skeleton.root_index) continue;
    if (!(bone_lengths[i] > 0.0)) throw Error("bone lengths must be positive");
    if (std::abs(bone_dirs[i].norm() - 1.0) > 1e-9) throw Error("bone directions must be unit vectors");
  }
  if (n_frames < 1) throw Error("n_frames must be >= 1");
  if (!(fps > 0.0)) throw Error("fps must be positive");
}

MotionSpec motion_spec_for_action(const std::string& action, int n_frames, std::uint64_t seed) {
  const Template tpl = make_template(action);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  MotionSpec spec;
  spec.n_frames = n_frames;
  spec.action_label = action;
  spec.seed = seed;
  const int J = spec.skeleton.n_joints;
  const double body_scale = uniform(0.9, 1.1);
  const double tempo = uniform(0.8, 1.2);
  const double phase_offset = uniform(0.0, 2.0 * kPi);
  spec.yaw = uniform(-0.6, 0.6);
  for (int j = 0; j < J; ++j) {
    const Eigen::Vector3d& rest = kRestOffsets[j];
    const double len = rest.norm();
    spec.bone_lengths.push_back(j == spec.skeleton.root_index ? 0.0 : len * body_scale * uniform(0.97, 1.03));
    spec.bone_dirs.push_back(len > 0.0 ? Eigen::Vector3d(rest / len) : Eigen::Vector3d::UnitY());
    Angles base{}, amp{}, freq{}, phase{};
    for (int a = 0; a < 3; ++a) {
      base[a] = tpl.base[j][a] + uniform(-0.08, 0.08);
      amp[a] = tpl.amp[j][a] * uniform(0.75, 1.25);
      freq[a] = tpl.frequency * tempo;
      phase[a] = tpl.phase[j][a] + phase_offset;
    }
    spec.base.push_back(base);
    spec.amplitudes.push_back(amp);
    spec.frequencies.push_back(freq);
    spec.phases.push_back(phase);
  }
  return spec;
}

std::vector<std::vector<Eigen::Vector3d>> generate_positions(const MotionSpec& spec) {
  spec.check();
  const int J = spec.skeleton.n_joints;
  const int root = spec.skeleton.root_index;
  const std::vector<int> order = spec.skeleton.topological_order();
  const Eigen::Matrix3d heading = Eigen::AngleAxisd(spec.yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  std::vector<std::vector<Eigen::Vector3d>> frames(spec.n_frames, std::vector<Eigen::Vector3d>(J));
  std::vector<Eigen::Matrix3d> global(J);
  for (int f = 0; f < spec.n_frames; ++f) {
    auto& pos = frames[f];
    const double time = f / spec.fps;
    for (int j : order) {
      Angles a{};
      for (int k = 0; k < 3; ++k)
        a[k] = spec.base[j][k] +
               spec.amplitudes[j][k] * std::sin(2.0 * kPi * spec.frequencies[j][k] * time + spec.phases[j][k]);
      const Eigen::Matrix3d local = rotation_xyz(a);
      if (j == root) {
        global[j] = heading * local;
        pos[j].setZero();
      } else {
        const int p = spec.skeleton.parent[j];
        global[j] = global[p] * local;
        pos[j] = pos[p] + global[j] * (spec.bone_lengths[j] * spec.bone_dirs[j]);
      }
    }
  }
  return frames;
}

PoseSequence3D generate_motion(const MotionSpec& spec) {
  const auto positions = generate_positions(spec);
  PoseSequence3D out(spec.n_frames, spec.skeleton.n_joints);
  for (int f = 0; f < spec.n_frames; ++f)
    for (int j = 0; j < spec.skeleton.n_joints; ++j)
      for (int c = 0; c < 3; ++c) out.at(f, j, c) = static_cast<float>(positions[f][j][c]);
  return out;
}

CameraSpec CameraSpec::default_camera() {
  CameraSpec cam;
  cam.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  cam.position = Eigen::Vector3d(0.0, 1000.0, 4500.0);
  return cam;
}

void CameraSpec::check() const {
  if (!(focal > 0.0)) throw Error("camera focal must be positive");
  if (width < 1 || height < 1) throw Error("camera image size must be positive");
  if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm() > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6)
    throw Error("camera orientation must be a proper rotation");
}

nlohmann::json CameraSpec::to_json() const {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({rotation(r, 0), rotation(r, 1), rotation(r, 2)});
  return {{"focal", focal}, {"cx", cx}, {"cy", cy}, {"rotation", rot},
          {"position", vec_json(position)}, {"width", width}, {"height", height}};
}

CameraSpec CameraSpec::from_json(const nlohmann::json& j) {
  CameraSpec cam;
  cam.focal = j.at("focal").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
  cam.position = vec_from(j.at("position"));
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.check();
  return cam;
}

PoseSequence3D place_in_world(const PoseSequence3D& body, const Eigen::Vector3d& root_world) {
  PoseSequence3D out = body;
  for (int f = 0; f < out.frames(); ++f)
    for (int j = 0; j < out.joints(); ++j)
      for (int c = 0; c < 3; ++c)
        out.at(f, j, c) = static_cast<float>(body.at(f, j, c) + root_world[c]);
  return out;
}

PoseSequence3D to_camera_frame(const PoseSequence3D& world, const CameraSpec& cam) {
  PoseSequence3D out(world.frames(), world.joints());
  for (int f = 0; f < world.frames(); ++f)
    for (int j = 0; j < world.joints(); ++j) {
      const Eigen::Vector3d p = cam.to_camera({world.at(f, j, 0), world.at(f, j, 1), world.at(f, j, 2)});
      for (int c = 0; c < 3; ++c) out.at(f, j, c) = static_cast<float>(p[c]);
    }
  return out;
}

PoseSequence2D project_to_2d(const PoseSequence3D& world, const CameraSpec& cam) {
  cam.check();
  const double half_width = cam.width / 2.0;
  PoseSequence2D out(world.frames(), world.joints());
  for (int f = 0; f < world.frames(); ++f)
    for (int j = 0; j < world.joints(); ++j) {
      const Eigen::Vector3d p = cam.to_camera({world.at(f, j, 0), world.at(f, j, 1), world.at(f, j, 2)});
      if (!(p.z() > 0.0)) throw Error("joint behind camera");
      const double u = cam.focal * p.x() / p.z() + cam.cx;
      const double v = cam.focal * p.y() / p.z() + cam.cy;
      out.at(f, j, 0) = static_cast<float>((u - cam.cx) / half_width);
      out.at(f, j, 1) = static_cast<float>((v - cam.cy) / half_width);
      out.at(f, j, 2) = 1.0f;
    }
  return out;
}

PoseSequence3D back_project(const PoseSequence2D& seq2d, const PoseSequence3D& camera_frame_depths,
                            const CameraSpec& cam, int root_index) {
  if (seq2d.frames() != camera_frame_depths.frames() || seq2d.joints() != camera_frame_depths.joints())
    throw Error("back_project: 2D and depth sequences differ in shape");
  const double half_width = cam.width / 2.0;
  PoseSequence3D out(seq2d.frames(), seq2d.joints());
  std::vector<Eigen::Vector3d> pts(seq2d.joints());
  for (int f = 0; f < seq2d.frames(); ++f) {
    for (int j = 0; j < seq2d.joints(); ++j) {
      const double z = camera_frame_depths.at(f, j, 2);
      pts[j] = {seq2d.at(f, j, 0) * half_width * z / cam.focal,
                seq2d.at(f, j, 1) * half_width * z / cam.focal, z};
    }
    for (int j = 0; j < seq2d.joints(); ++j)
      for (int c = 0; c < 3; ++c) out.at(f, j, c) = static_cast<float>(pts[j][c] - pts[root_index][c]);
  }
  return out;
}

PoseSequence2D add_detector_noise(const PoseSequence2D& seq, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error("noise sigma must be >= 0");
  PoseSequence2D out = seq;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int f = 0; f < seq.frames(); ++f)
    for (int j = 0; j < seq.joints(); ++j)
      for (int c = 0; c < 2; ++c) out.at(f, j, c) = static_cast<float>(seq.at(f, j, c) + noise(rng));
  return out;
}

Clip make_clip(const std::string& action, int frames, std::uint64_t seed, const DatasetOptions& options) {
  const MotionSpec spec = motion_spec_for_action(action, frames, seed);
  const PoseSequence3D body = generate_motion(spec);
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Vector3d root_world(-300.0 + 600.0 * unit(rng), 950.0, -500.0 + 1000.0 * unit(rng));
  const PoseSequence3D world = place_in_world(body, root_world);
  const PoseSequence3D cam_frame = to_camera_frame(world, options.camera);

  Clip clip;
  LabeledSequence& s = clip.sequence;
  s.action = action;
  s.seed = seed;
  s.pose2d = add_detector_noise(project_to_2d(world, options.camera), options.sigma, mix_seed(seed ^ 0x2D));
  s.pose3d = PoseSequence3D(frames, spec.skeleton.n_joints);
  const int root = spec.skeleton.root_index;
  for (int f = 0; f < frames; ++f)
    for (int j = 0; j < spec.skeleton.n_joints; ++j)
      for (int c = 0; c < 3; ++c) s.pose3d.at(f, j, c) = cam_frame.at(f, j, c) - cam_frame.at(f, root, c);
  clip.entry.action = action;
  clip.entry.seed = seed;
  clip.entry.root_camera_mm = options.camera.to_camera(root_world);
  return clip;
}

namespace {

std::vector<Clip> make_clips(int n_sequences, const std::vector<std::string>& actions, int frames,
                             std::uint64_t seed, const DatasetOptions& options) {
  if (n_sequences < 1) throw Error("n_sequences must be >= 1");
  if (actions.empty()) throw Error("at least one action is required");
  if (!(options.test_fraction >= 0.0 && options.test_fraction < 1.0))
    throw Error("test_fraction must lie in [0, 1)");
  const int n_test = static_cast<int>(std::ceil(options.test_fraction * n_sequences));
  std::vector<Clip> clips(n_sequences);
  parallel_for(clips.size(), [&](std::size_t i) {
    const int idx = static_cast<int>(i);
    clips[i] = make_clip(actions[i % actions.size()], frames, derive_seed(seed, i), options);
    clips[i].sequence.name = clip_name(idx);
    clips[i].sequence.split = idx >= n_sequences - n_test ? "test" : "train";
    clips[i].entry.name = clips[i].sequence.name;
    clips[i].entry.split = clips[i].sequence.split;
    clips[i].entry.pose2d = clips[i].sequence.name + ".pseq2d";
    clips[i].entry.pose3d = clips[i].sequence.name + ".pseq3d";
  });
  return clips;
}

}  // namespace

Manifest make_dataset(int n_sequences, const std::vector<std::string>& actions, int frames,
                      const std::filesystem::path& out_dir, std::uint64_t seed,
                      const DatasetOptions& options) {
  std::vector<Clip> clips = make_clips(n_sequences, actions, frames, seed, options);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create '" + out_dir.string() + "': " + ec.message());
  Manifest m;
  m.frames = frames;
  m.sigma = options.sigma;
  m.seed = seed;
  m.camera = options.camera;
  for (auto& clip : clips) {
    save_sequence(clip.sequence.pose2d, out_dir / clip.entry.pose2d);
    save_sequence(clip.sequence.pose3d, out_dir / clip.entry.pose3d);
    m.entries.push_back(clip.entry);
  }
  write_file(out_dir / "manifest.json", m.to_json().dump(2));
  return m;
}

Dataset make_dataset_in_memory(int n_sequences, const std::vector<std::string>& actions, int frames,
                               std::uint64_t seed, const DatasetOptions& options) {
  Dataset d;
  for (auto& clip : make_clips(n_sequences, actions, frames, seed, options))
    d.sequences.push_back(std::move(clip.sequence));
  return d;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& e : entries) {
    seqs.push_back({{"name", e.name}, {"action", e.action}, {"split", e.split}, {"seed", e.seed},
                    {"pose2d", e.pose2d}, {"pose3d", e.pose3d},
                    {"root_camera_mm", vec_json(e.root_camera_mm)}});
  }
  return {{"version", version}, {"frames", frames}, {"fps", fps}, {"sigma", sigma},
          {"seed", seed}, {"camera", camera.to_json()}, {"sequences", seqs}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw Error("unsupported manifest version " + std::to_string(m.version));
    m.frames = j.value("frames", 0);
    m.fps = j.value("fps", 50.0);
    m.sigma = j.value("sigma", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("camera")) m.camera = CameraSpec::from_json(j.at("camera"));
    for (const auto& s : j.at("sequences")) {
      ManifestEntry e;
      e.name = s.at("name").get<std::string>();
      e.action = s.at("action").get<std::string>();
      e.split = s.at("split").get<std::string>();
      e.seed = s.value("seed", std::uint64_t{0});
      e.pose2d = s.at("pose2d").get<std::string>();
      e.pose3d = s.at("pose3d").get<std::string>();
      if (s.contains("root_camera_mm")) e.root_camera_mm = vec_from(s.at("root_camera_mm"));
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& dir) {
  try {
    return Manifest::from_json(nlohmann::json::parse(read_file(dir / "manifest.json")));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const Manifest m = load_manifest(dir);
  Dataset d;
  for (const auto& e : m.entries) {
    LabeledSequence s;
    s.name = e.name;
    s.action = e.action;
    s.split = e.split;
    s.seed = e.seed;
    s.pose2d = load_sequence2d(dir / e.pose2d);
    s.pose3d = load_sequence3d(dir / e.pose3d);
    if (s.pose2d.frames() != s.pose3d.frames() || s.pose2d.joints() != s.pose3d.joints())
      throw Error("sequence '" + e.name + "' has mismatched 2D/3D shapes");
    d.sequences.push_back(std::move(s));
  }
  return d;
}

}  // namespace poselift::synth
