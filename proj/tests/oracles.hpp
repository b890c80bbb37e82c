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

// Independent reference implementations used as test oracles. They are
// deliberately naive and share no code with the library beyond data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "poselift/occlusion.hpp"
#include "poselift/pose_core.hpp"

namespace oracle {

using poselift::OcclusionMask;
using poselift::PoseSequence2D;
using poselift::PoseSequence3D;

// Search window of frame f: a span of f_past + f_future + 1 frames placed
// as centrally as the boundaries allow, truncated to the sequence.
struct Window {
  int past;
  int future;
};

inline Window window_for(int f, int n, int f_past, int f_future) {
  const int span = f_past + f_future + 1;
  if (n <= span) return {f, n - 1 - f};
  const int start = std::clamp(f - f_past, 0, n - span);
  return {f - start, start + span - 1 - f};
}

// Exhaustive scan over every frame; nearest |gap| wins, ties go to the past.
inline PoseSequence2D guide(const PoseSequence2D& seq, const OcclusionMask& mask,
                            const poselift::occlusion::GuidanceConfig& cfg) {
  const int n = seq.frames();
  PoseSequence2D out = seq;
  for (int f = 0; f < n; ++f) {
    const Window w = window_for(f, n, cfg.f_past, cfg.f_future);
    for (int j = 0; j < seq.joints(); ++j) {
      if (mask.is_present(f, j)) continue;
      int best = -1;
      int best_dist = 0;
      int best_any = -1;
      int best_any_dist = 0;
      for (int g = 0; g < n; ++g) {
        if (!mask.is_present(g, j)) continue;
        const int d = std::abs(g - f);
        auto better = [&](int cur, int cur_d) {
          return cur < 0 || d < cur_d || (d == cur_d && g < f && cur > f);
        };
        if (better(best_any, best_any_dist)) {
          best_any = g;
          best_any_dist = d;
        }
        const bool inside = g >= f - w.past && g <= f + w.future;
        if (inside && better(best, best_dist)) {
          best = g;
          best_dist = d;
        }
      }
      float x = 0.0f, y = 0.0f, c = 0.0f;
      if (best >= 0) {
        x = seq.at(best, j, 0);
        y = seq.at(best, j, 1);
        // Start at 1 and subtract 1/window once per frame of distance.
        const int denom = best < f ? w.past : w.future;
        double conf = 1.0;
        for (int k = 0; k < best_dist; ++k) conf -= 1.0 / denom;
        c = static_cast<float>(std::max(0.0, conf));
      } else if (cfg.fallback == poselift::occlusion::Fallback::kWholeSequenceSearch && best_any >= 0) {
        x = seq.at(best_any, j, 0);
        y = seq.at(best_any, j, 1);
      }
      out.at(f, j, 0) = x;
      out.at(f, j, 1) = y;
      out.at(f, j, 2) = c;
    }
  }
  return out;
}

// Per-entry confidence computed in double precision, for tolerance checks.
inline double confidence(const OcclusionMask& mask, int f, int j, const poselift::occlusion::GuidanceConfig& cfg) {
  const int n = mask.frames;
  const Window w = window_for(f, n, cfg.f_past, cfg.f_future);
  if (mask.is_present(f, j)) return 1.0;
  for (int k = 1; k <= std::max(w.past, w.future); ++k) {
    if (k <= w.past && mask.is_present(f - k, j)) return 1.0 - static_cast<double>(k) / w.past;
    if (k <= w.future && mask.is_present(f + k, j)) return 1.0 - static_cast<double>(k) / w.future;
  }
  return 0.0;
}

inline OcclusionMask random_mask(int frames, int joints, double p_missing, std::mt19937_64& rng) {
  OcclusionMask m = OcclusionMask::all_present(frames, joints);
  std::bernoulli_distribution miss(p_missing);
  for (int f = 0; f < frames; ++f)
    for (int j = 0; j < joints; ++j)
      if (miss(rng)) m.set(f, j, false);
  return m;
}

inline PoseSequence2D random_sequence2d(int frames, int joints, std::mt19937_64& rng) {
  PoseSequence2D s(frames, joints);
  std::uniform_real_distribution<float> pos(-1.0f, 1.0f);
  for (int f = 0; f < frames; ++f)
    for (int j = 0; j < joints; ++j) {
      s.at(f, j, 0) = pos(rng);
      s.at(f, j, 1) = pos(rng);
      s.at(f, j, 2) = 1.0f;
    }
  return s;
}

inline PoseSequence3D random_sequence3d(int frames, int joints, std::mt19937_64& rng, double scale = 300.0) {
  PoseSequence3D s(frames, joints);
  std::normal_distribution<float> pos(0.0f, static_cast<float>(scale));
  for (int f = 0; f < frames; ++f)
    for (int j = 1; j < joints; ++j)
      for (int c = 0; c < 3; ++c) s.at(f, j, c) = pos(rng);
  return s;
}

// Plain loops over (frame, joint) for MPJPE.
inline double mpjpe(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  const std::size_t n = a.size() / 3;
  for (std::size_t p = 0; p < n; ++p) {
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) sq += (a[p * 3 + c] - b[p * 3 + c]) * (a[p * 3 + c] - b[p * 3 + c]);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(n);
}

inline double pck(const std::vector<double>& a, const std::vector<double>& b, double threshold) {
  const std::size_t n = a.size() / 3;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n; ++p) {
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) sq += (a[p * 3 + c] - b[p * 3 + c]) * (a[p * 3 + c] - b[p * 3 + c]);
    if (std::sqrt(sq) < threshold) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

// Scalar AMSGrad recurrence in double precision.
struct ScalarAmsGrad {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0, vmax = 0.0;
  int t = 0;
  double step(double theta, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    vmax = std::max(vmax, v);
    const double m_hat = m / (1.0 - std::pow(b1, t));
    const double v_hat = vmax / (1.0 - std::pow(b2, t));
    return theta - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
};

// Standard normal CDF via a long Taylor series of erf at 64-bit.
inline double phi(double x) {
  const double z = x / std::sqrt(2.0);
  double term = z, sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= -z * z / n;
    sum += term / (2 * n + 1);
  }
  return 0.5 * (1.0 + 2.0 / std::sqrt(M_PI) * sum);
}

}  // namespace oracle
