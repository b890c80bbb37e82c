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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poselift {

// Every recoverable failure in the library surfaces as this exception type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SkeletonSpec {
  int n_joints = 17;
  int root_index = 0;
  std::vector<int> parent;  // parent[root_index] == root_index
  std::vector<std::string> joint_names;

  // 17-joint Human3.6M topology.
  static SkeletonSpec human36m();

  // Empty string when the parent array forms a single tree rooted at
  // root_index, otherwise a description of the first problem found.
  std::string tree_error() const;
  bool is_valid() const { return tree_error().empty(); }

  // Joints ordered so that every parent precedes its children.
  std::vector<int> topological_order() const;
};

enum class SequenceKind { k2D, k3D };

// Frame-major t x j x 3 array of 32-bit floats. For 2D the channels are
// (x, y, confidence); for 3D they are root-relative (x, y, z) in mm.
template <SequenceKind Kind>
class PoseSequence {
 public:
  static constexpr SequenceKind kind = Kind;

  PoseSequence() = default;
  PoseSequence(int frames, int joints)
      : frames_(frames), joints_(joints),
        data_(static_cast<std::size_t>(frames) * joints * 3, 0.0f) {
    if (frames < 0 || joints < 0) throw Error("negative sequence dimensions");
  }
  PoseSequence(int frames, int joints, std::vector<float> data)
      : frames_(frames), joints_(joints), data_(std::move(data)) {
    if (frames < 0 || joints < 0) throw Error("negative sequence dimensions");
    if (data_.size() != static_cast<std::size_t>(frames) * joints * 3)
      throw Error("sequence data length does not match t*j*3");
  }

  int frames() const { return frames_; }
  int joints() const { return joints_; }

  float& at(int f, int j, int c) { return data_[index(f, j, c)]; }
  float at(int f, int j, int c) const { return data_[index(f, j, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> frame(int f) const {
    return std::span<const float>(data_).subspan(index(f, 0, 0), joints_ * 3);
  }
  std::span<float> frame(int f) {
    return std::span<float>(data_).subspan(index(f, 0, 0), joints_ * 3);
  }

  // Copies frames [start, start + count) clamping out-of-range indices to the
  // first/last frame (edge replication).
  PoseSequence window(int start, int count) const {
    PoseSequence out(count, joints_);
    for (int i = 0; i < count; ++i) {
      int src = std::clamp(start + i, 0, frames_ - 1);
      auto in = frame(src);
      std::copy(in.begin(), in.end(), out.frame(i).begin());
    }
    return out;
  }

  bool operator==(const PoseSequence&) const = default;

 private:
  std::size_t index(int f, int j, int c) const {
    return (static_cast<std::size_t>(f) * joints_ + j) * 3 + c;
  }

  int frames_ = 0;
  int joints_ = 0;
  std::vector<float> data_;
};

using PoseSequence2D = PoseSequence<SequenceKind::k2D>;
using PoseSequence3D = PoseSequence<SequenceKind::k3D>;

// (t x j) presence grid. present[f * joints + j] is true when observed.
struct OcclusionMask {
  int frames = 0;
  int joints = 0;
  std::vector<bool> present;
  std::uint64_t seed = 0;
  int n_missing_per_frame = 0;

  static OcclusionMask all_present(int frames, int joints);
  bool is_present(int f, int j) const {
    return present[static_cast<std::size_t>(f) * joints + j];
  }
  void set(int f, int j, bool value) {
    present[static_cast<std::size_t>(f) * joints + j] = value;
  }
  bool operator==(const OcclusionMask&) const = default;
};

// One clip: paired 2D detections and root-relative 3D ground truth.
struct LabeledSequence {
  std::string name;
  std::string action;
  std::string split;  // "train" | "test"
  std::uint64_t seed = 0;
  PoseSequence2D pose2d;
  PoseSequence3D pose3d;
};

struct Dataset {
  std::vector<LabeledSequence> sequences;

  Dataset with_split(const std::string& split) const {
    Dataset out;
    for (const auto& s : sequences)
      if (s.split == split) out.sequences.push_back(s);
    return out;
  }
  bool empty() const { return sequences.empty(); }
  std::size_t size() const { return sequences.size(); }
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_sequence(const PoseSequence2D& seq,
                                   const SkeletonSpec& spec);
ValidationResult validate_sequence(const PoseSequence3D& seq,
                                   const SkeletonSpec& spec);

// PSEQ container: 8-byte magic "PSEQv001", u32le header length, JSON header,
// then frames*joints*3 little-endian f32 values.
void save_sequence(const PoseSequence2D& seq, const std::filesystem::path& path);
void save_sequence(const PoseSequence3D& seq, const std::filesystem::path& path);
PoseSequence2D load_sequence2d(const std::filesystem::path& path);
PoseSequence3D load_sequence3d(const std::filesystem::path& path);

// In-memory variants used by the file functions.
std::string encode_pseq(SequenceKind kind, int frames, int joints,
                        std::span<const float> data);
struct DecodedPseq {
  SequenceKind kind;
  int frames;
  int joints;
  std::vector<float> data;
};
DecodedPseq decode_pseq(std::string_view bytes);

// Little-endian float helpers shared with the checkpoint format.
void append_f32le(std::string& out, std::span<const float> values);
void read_f32le(std::string_view bytes, std::span<float> out);
void append_u32le(std::string& out, std::uint32_t value);
std::uint32_t read_u32le(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace poselift
