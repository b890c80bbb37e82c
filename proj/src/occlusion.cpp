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

#include "poselift/occlusion.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "json.hpp"

namespace poselift::occlusion {

void GuidanceConfig::check() const {
  if (f_past < 1) throw Error("guidance f_past must be >= 1");
  if (f_future < 1) throw Error("guidance f_future must be >= 1");
}

std::string to_string(OcclusionCategory category) {
  switch (category) {
    case OcclusionCategory::kNone: return "none";
    case OcclusionCategory::kMild: return "mild";
    case OcclusionCategory::kIntermediate: return "intermediate";
    case OcclusionCategory::kSevere: return "severe";
  }
  return "unknown";
}

std::string to_string(Fallback fallback) {
  return fallback == Fallback::kZeroFill ? "zero" : "whole";
}

Fallback parse_fallback(const std::string& name) {
  if (name == "zero" || name == "zero_fill") return Fallback::kZeroFill;
  if (name == "whole" || name == "whole_sequence_search")
    return Fallback::kWholeSequenceSearch;
  throw Error("unknown fallback '" + name + "' (expected whole|zero)");
}

std::pair<PoseSequence2D, OcclusionMask> inject_occlusion(
    const PoseSequence2D& seq, int n_missing_per_frame, std::uint64_t seed) {
  const int j = seq.joints();
  if (n_missing_per_frame < 0) throw Error("n_missing_per_frame must be >= 0");
  if (n_missing_per_frame >= j)
    throw Error("n_missing_per_frame must be smaller than the joint count");

  OcclusionMask mask = OcclusionMask::all_present(seq.frames(), j);
  mask.seed = seed;
  mask.n_missing_per_frame = n_missing_per_frame;
  PoseSequence2D out = seq;

  std::mt19937_64 rng(seed);
  std::vector<int> joints(j);
  for (int f = 0; f < seq.frames(); ++f) {
    std::iota(joints.begin(), joints.end(), 0);
    // A full shuffle per frame whose first n entries are dropped, so one seed
    // gives nested masks across n.
    for (int i = 0; i + 1 < j; ++i) {
      std::uniform_int_distribution<int> pick(i, j - 1);
      std::swap(joints[i], joints[pick(rng)]);
    }
    for (int i = 0; i < n_missing_per_frame; ++i) {
      mask.set(f, joints[i], false);
      for (int c = 0; c < 3; ++c) out.at(f, joints[i], c) = 0.0f;
    }
  }
  return {std::move(out), std::move(mask)};
}

double confidence_for_gap(int gap, int f_past, int f_future) {
  if (gap == 0) return 1.0;
  const int k = gap < 0 ? -gap : gap;
  const int window = gap < 0 ? f_past : f_future;
  if (window <= 0) return 0.0;
  return std::max(0.0, 1.0 - static_cast<double>(k) / window);
}

FrameWindow slid_window(int frame, int n_frames, const GuidanceConfig& cfg) {
  const int room_past = frame;
  const int room_future = n_frames - 1 - frame;
  const int past0 = std::min(cfg.f_past, room_past);
  const int future0 = std::min(cfg.f_future, room_future);
  // Whatever one side loses to the boundary is handed to the other side.
  FrameWindow w;
  w.past = std::min(room_past, past0 + (cfg.f_future - future0));
  w.future = std::min(room_future, future0 + (cfg.f_past - past0));
  return w;
}

PoseSequence2D zero_fill(const PoseSequence2D& seq, const OcclusionMask& mask) {
  if (mask.frames != seq.frames() || mask.joints != seq.joints())
    throw Error("mask dimensions do not match sequence");
  PoseSequence2D out = seq;
  for (int f = 0; f < seq.frames(); ++f)
    for (int j = 0; j < seq.joints(); ++j)
      if (!mask.is_present(f, j))
        for (int c = 0; c < 3; ++c) out.at(f, j, c) = 0.0f;
  return out;
}

PoseSequence2D guide_sequence(const PoseSequence2D& seq, const OcclusionMask& mask,
                              const GuidanceConfig& cfg) {
  cfg.check();
  if (mask.frames != seq.frames() || mask.joints != seq.joints())
    throw Error("mask dimensions do not match sequence");
  const int t = seq.frames();
  PoseSequence2D out = seq;

  auto fill = [&](int f, int j, int src, float confidence) {
    out.at(f, j, 0) = seq.at(src, j, 0);
    out.at(f, j, 1) = seq.at(src, j, 1);
    out.at(f, j, 2) = confidence;
  };

  for (int f = 0; f < t; ++f) {
    const FrameWindow w = slid_window(f, t, cfg);
    for (int j = 0; j < seq.joints(); ++j) {
      if (mask.is_present(f, j)) continue;
      bool found = false;
      for (int k = 1; k <= std::max(w.past, w.future) && !found; ++k) {
        if (k <= w.past && mask.is_present(f - k, j)) {
          fill(f, j, f - k, static_cast<float>(confidence_for_gap(-k, w.past, w.future)));
          found = true;
        } else if (k <= w.future && mask.is_present(f + k, j)) {
          fill(f, j, f + k, static_cast<float>(confidence_for_gap(k, w.past, w.future)));
          found = true;
        }
      }
      if (found) continue;
      for (int c = 0; c < 3; ++c) out.at(f, j, c) = 0.0f;
      if (cfg.fallback == Fallback::kZeroFill) continue;
      for (int k = 1; k < t; ++k) {
        if (f - k >= 0 && mask.is_present(f - k, j)) {
          fill(f, j, f - k, 0.0f);
          break;
        }
        if (f + k < t && mask.is_present(f + k, j)) {
          fill(f, j, f + k, 0.0f);
          break;
        }
      }
    }
  }
  return out;
}

OcclusionCategory categorize(int n_missing, int n_joints) {
  if (n_joints < 1) throw Error("joint count must be positive");
  if (n_missing < 0 || n_missing > n_joints)
    throw Error("n_missing must lie in [0, n_joints]");
  if (n_missing == 0) return OcclusionCategory::kNone;
  if (3 * n_missing < n_joints) return OcclusionCategory::kMild;
  if (3 * n_missing <= 2 * n_joints) return OcclusionCategory::kIntermediate;
  return OcclusionCategory::kSevere;
}

std::string mask_to_json(const OcclusionMask& mask) {
  nlohmann::ordered_json doc;
  doc["seed"] = mask.seed;
  doc["n_missing"] = mask.n_missing_per_frame;
  doc["frames"] = mask.frames;
  doc["joints"] = mask.joints;
  nlohmann::json rows = nlohmann::json::array();
  for (int f = 0; f < mask.frames; ++f) {
    std::vector<int> runs;
    bool state = true;
    int run = 0;
    for (int j = 0; j < mask.joints; ++j) {
      if (mask.is_present(f, j) == state) {
        ++run;
      } else {
        runs.push_back(run);
        state = !state;
        run = 1;
      }
    }
    runs.push_back(run);
    rows.push_back(runs);
  }
  doc["present"] = std::move(rows);
  return doc.dump();
}

OcclusionMask mask_from_json(const std::string& text) {
  OcclusionMask mask;
  try {
    auto doc = nlohmann::json::parse(text);
    mask.seed = doc.at("seed").get<std::uint64_t>();
    mask.n_missing_per_frame = doc.at("n_missing").get<int>();
    const auto& rows = doc.at("present");
    mask.frames = static_cast<int>(rows.size());
    if (mask.frames < 1) throw Error("mask has no rows");
    int joints = 0;
    for (int r : rows[0]) joints += r;
    mask.joints = joints;
    if (doc.contains("frames") && doc["frames"].get<int>() != mask.frames)
      throw Error("mask frame count disagrees with its rows");
    if (doc.contains("joints") && doc["joints"].get<int>() != mask.joints)
      throw Error("mask joint count disagrees with its rows");
    mask.present.assign(static_cast<std::size_t>(mask.frames) * mask.joints, false);
    for (int f = 0; f < mask.frames; ++f) {
      int j = 0;
      bool state = true;
      for (int run : rows[f]) {
        if (run < 0) throw Error("negative run length in mask");
        for (int i = 0; i < run; ++i) {
          if (j >= mask.joints) throw Error("mask row longer than joint count");
          mask.set(f, j++, state);
        }
        state = !state;
      }
      if (j != mask.joints) throw Error("mask row shorter than joint count");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed mask JSON: ") + e.what());
  }
  return mask;
}

void save_mask(const OcclusionMask& mask, const std::filesystem::path& path) {
  write_file(path, mask_to_json(mask));
}

OcclusionMask load_mask(const std::filesystem::path& path) {
  return mask_from_json(read_file(path));
}

}  // namespace poselift::occlusion
