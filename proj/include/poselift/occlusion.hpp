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
#include <string>
#include <utility>

#include "poselift/pose_core.hpp"

namespace poselift::occlusion {

enum class Fallback { kZeroFill, kWholeSequenceSearch };

struct GuidanceConfig {
  int f_past = 3;
  int f_future = 3;
  Fallback fallback = Fallback::kWholeSequenceSearch;

  void check() const;
};

enum class OcclusionCategory { kNone, kMild, kIntermediate, kSevere };

std::string to_string(OcclusionCategory category);
std::string to_string(Fallback fallback);
Fallback parse_fallback(const std::string& name);  // "whole" | "zero"

// Zeroes exactly n_missing_per_frame joints per frame (all three channels),
// drawn uniformly without replacement with a fresh draw for every frame.
// For a fixed seed the dropped set for n is a subset of the set for n + 1.
std::pair<PoseSequence2D, OcclusionMask> inject_occlusion(
    const PoseSequence2D& seq, int n_missing_per_frame, std::uint64_t seed);

// Confidence attached to a joint copied from `gap` frames away: negative gaps
// are past frames, positive gaps future frames. Clamped to [0, 1].
double confidence_for_gap(int gap, int f_past, int f_future);

// Per-frame search window after boundary sliding. The total span
// f_past + f_future + 1 is preserved where the sequence is long enough.
struct FrameWindow {
  int past = 0;
  int future = 0;
};
FrameWindow slid_window(int frame, int n_frames, const GuidanceConfig& cfg);

// Fills every missing (frame, joint) from the temporally nearest present
// observation of the same joint. Present entries are copied verbatim.
PoseSequence2D guide_sequence(const PoseSequence2D& seq, const OcclusionMask& mask,
                              const GuidanceConfig& cfg);

// Missing joints become exact (0, 0, 0); present entries are copied.
PoseSequence2D zero_fill(const PoseSequence2D& seq, const OcclusionMask& mask);

OcclusionCategory categorize(int n_missing, int n_joints);

// Mask JSON with run-length-encoded rows. Each row alternates run lengths
// starting with a run of present joints (which may have length 0).
std::string mask_to_json(const OcclusionMask& mask);
OcclusionMask mask_from_json(const std::string& text);
void save_mask(const OcclusionMask& mask, const std::filesystem::path& path);
OcclusionMask load_mask(const std::filesystem::path& path);

}  // namespace poselift::occlusion
