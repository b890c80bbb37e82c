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

#include "poselift/pose_core.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace poselift {

namespace {

constexpr std::string_view kPseqMagic = "PSEQv001";
constexpr std::string_view kPseqMagicPrefix = "PSEQv";

template <SequenceKind K>
void check_common(const PoseSequence<K>& seq, const SkeletonSpec& spec,
                  ValidationResult& result) {
  if (seq.frames() < 1) result.violations.push_back("t >= 1 violated");
  if (seq.joints() != spec.n_joints) {
    std::ostringstream msg;
    msg << "shape mismatch: sequence has " << seq.joints()
        << " joints, skeleton has " << spec.n_joints;
    result.violations.push_back(msg.str());
  }
  for (float v : seq.data()) {
    if (!std::isfinite(v)) {
      result.violations.push_back("non-finite value");
      break;
    }
  }
}

const char* kind_name(SequenceKind kind) {
  return kind == SequenceKind::k2D ? "2d" : "3d";
}

}  // namespace

SkeletonSpec SkeletonSpec::human36m() {
  SkeletonSpec spec;
  spec.n_joints = 17;
  spec.root_index = 0;
  spec.parent = {0, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  spec.joint_names = {"hip",        "r_hip",      "r_knee",  "r_ankle",
                      "l_hip",      "l_knee",     "l_ankle", "spine",
                      "thorax",     "neck",       "head",    "l_shoulder",
                      "l_elbow",    "l_wrist",    "r_shoulder",
                      "r_elbow",    "r_wrist"};
  return spec;
}

std::string SkeletonSpec::tree_error() const {
  if (n_joints < 2) return "n_joints must be >= 2";
  if (static_cast<int>(parent.size()) != n_joints)
    return "parent array length differs from n_joints";
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != n_joints)
    return "joint_names length differs from n_joints";
  if (root_index < 0 || root_index >= n_joints) return "root_index out of range";
  if (parent[root_index] != root_index) return "root parent must be itself";
  for (int j = 0; j < n_joints; ++j) {
    if (parent[j] < 0 || parent[j] >= n_joints) return "parent index out of range";
    if (j != root_index && parent[j] == j) return "second root found";
  }
  // Every joint must reach the root in fewer than n_joints hops.
  for (int j = 0; j < n_joints; ++j) {
    int cur = j;
    int hops = 0;
    while (cur != root_index) {
      cur = parent[cur];
      if (++hops >= n_joints) return "parent array contains a cycle";
    }
  }
  return {};
}

std::vector<int> SkeletonSpec::topological_order() const {
  if (auto err = tree_error(); !err.empty()) throw Error("invalid skeleton: " + err);
  std::vector<int> depth(n_joints, 0);
  for (int j = 0; j < n_joints; ++j) {
    for (int cur = j; cur != root_index; cur = parent[cur]) ++depth[j];
  }
  std::vector<int> order(n_joints);
  for (int j = 0; j < n_joints; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

OcclusionMask OcclusionMask::all_present(int frames, int joints) {
  OcclusionMask mask;
  mask.frames = frames;
  mask.joints = joints;
  mask.present.assign(static_cast<std::size_t>(frames) * joints, true);
  return mask;
}

ValidationResult validate_sequence(const PoseSequence2D& seq,
                                   const SkeletonSpec& spec) {
  ValidationResult result;
  check_common(seq, spec, result);
  for (int f = 0; f < seq.frames(); ++f) {
    for (int j = 0; j < seq.joints(); ++j) {
      float c = seq.at(f, j, 2);
      if (!(c >= 0.0f && c <= 1.0f)) {
        result.violations.push_back("confidence out of range");
        return result;
      }
    }
  }
  return result;
}

ValidationResult validate_sequence(const PoseSequence3D& seq,
                                   const SkeletonSpec& spec) {
  ValidationResult result;
  check_common(seq, spec, result);
  if (spec.root_index < 0 || spec.root_index >= seq.joints()) return result;
  for (int f = 0; f < seq.frames(); ++f) {
    for (int c = 0; c < 3; ++c) {
      if (!(std::abs(seq.at(f, spec.root_index, c)) <= 1e-6f)) {
        result.violations.push_back("root not at origin");
        return result;
      }
    }
  }
  return result;
}

void append_u32le(std::string& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32le(std::string_view bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return v;
}

void append_f32le(std::string& out, std::span<const float> values) {
  out.reserve(out.size() + values.size() * 4);
  for (float f : values) append_u32le(out, std::bit_cast<std::uint32_t>(f));
}

void read_f32le(std::string_view bytes, std::span<float> out) {
  if (bytes.size() < out.size() * 4) throw Error("payload length mismatch");
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<float>(read_u32le(bytes.substr(i * 4, 4)));
}

std::string encode_pseq(SequenceKind kind, int frames, int joints,
                        std::span<const float> data) {
  if (frames < 1) throw Error("t >= 1 violated");
  nlohmann::ordered_json header;
  header["frames"] = frames;
  header["joints"] = joints;
  header["channels"] = 3;
  header["kind"] = kind_name(kind);
  header["layout"] = "frame-major";
  header["dtype"] = "f32le";
  std::string text = header.dump();
  std::string out(kPseqMagic);
  append_u32le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  append_f32le(out, data);
  return out;
}

DecodedPseq decode_pseq(std::string_view bytes) {
  if (bytes.size() < 12) throw Error("file too short for PSEQ header");
  if (bytes.substr(0, kPseqMagicPrefix.size()) != kPseqMagicPrefix)
    throw Error("bad magic: not a PSEQ file");
  if (bytes.substr(0, 8) != kPseqMagic) throw Error("unknown format version");
  std::uint32_t header_len = read_u32le(bytes.substr(8, 4));
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len))
    throw Error("header length mismatch");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed PSEQ header: ") + e.what());
  }
  DecodedPseq out;
  try {
    long long frames = header.at("frames").get<long long>();
    long long joints = header.at("joints").get<long long>();
    if (frames < 1) throw Error("t >= 1 violated");
    if (joints < 1) throw Error("joints >= 1 violated");
    if (header.at("channels").get<int>() != 3) throw Error("channels must be 3");
    if (header.at("layout").get<std::string>() != "frame-major")
      throw Error("unsupported layout");
    if (header.at("dtype").get<std::string>() != "f32le")
      throw Error("unsupported dtype");
    std::string kind = header.at("kind").get<std::string>();
    if (kind == "2d") {
      out.kind = SequenceKind::k2D;
    } else if (kind == "3d") {
      out.kind = SequenceKind::k3D;
    } else {
      throw Error("unknown sequence kind '" + kind + "'");
    }
    out.frames = static_cast<int>(frames);
    out.joints = static_cast<int>(joints);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed PSEQ header: ") + e.what());
  }
  std::size_t count = static_cast<std::size_t>(out.frames) * out.joints * 3;
  std::string_view payload = bytes.substr(12 + header_len);
  if (payload.size() != count * 4) throw Error("payload length mismatch");
  out.data.resize(count);
  read_f32le(payload, out.data);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("read failure on '" + path.string() + "'");
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failure on '" + path.string() + "'");
}

void save_sequence(const PoseSequence2D& seq, const std::filesystem::path& path) {
  write_file(path, encode_pseq(SequenceKind::k2D, seq.frames(), seq.joints(), seq.data()));
}

void save_sequence(const PoseSequence3D& seq, const std::filesystem::path& path) {
  write_file(path, encode_pseq(SequenceKind::k3D, seq.frames(), seq.joints(), seq.data()));
}

PoseSequence2D load_sequence2d(const std::filesystem::path& path) {
  auto decoded = decode_pseq(read_file(path));
  if (decoded.kind != SequenceKind::k2D)
    throw Error("'" + path.string() + "' holds a 3d sequence, expected 2d");
  return PoseSequence2D(decoded.frames, decoded.joints, std::move(decoded.data));
}

PoseSequence3D load_sequence3d(const std::filesystem::path& path) {
  auto decoded = decode_pseq(read_file(path));
  if (decoded.kind != SequenceKind::k3D)
    throw Error("'" + path.string() + "' holds a 2d sequence, expected 3d");
  return PoseSequence3D(decoded.frames, decoded.joints, std::move(decoded.data));
}

}  // namespace poselift
