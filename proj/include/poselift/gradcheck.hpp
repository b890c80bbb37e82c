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
#include <vector>

#include "poselift/model.hpp"
#include "poselift/nn.hpp"

namespace poselift::gradcheck {

struct CaseResult {
  std::string name;
  nn::GradCheckReport report;
};

inline constexpr double kPrimitiveTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;

// Finite-difference checks of every differentiable primitive and block.
std::vector<CaseResult> primitive_suite(std::uint64_t seed, double tol = kPrimitiveTolerance);

// t=9, j=5, M=8, h=2 model of the given variant.
model::ModelConfig tiny_config(model::Variant variant = model::Variant::kDTF);

// End-to-end check of the MPJPE loss of a whole model against a random target.
CaseResult model_check(const model::ModelConfig& cfg, std::uint64_t seed, double tol = kModelTolerance);

}  // namespace poselift::gradcheck
