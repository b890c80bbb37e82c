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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "poselift/model.hpp"
#include "poselift/training.hpp"

namespace poselift {

// Layout: "PLCKv001" | u32le header length | JSON header | f32le payload.
// The header records the model config, seed, optimizer step and a manifest
// of (name, section, shape, offset) entries with offsets counted in floats.
// Sections are "param", "m", "v" and "v_max".
inline constexpr std::string_view kCheckpointMagic = "PLCKv001";

struct Checkpoint {
  model::DtfModel model;
  training::OptimizerState state;
  std::optional<training::TrainConfig> train_config;
};

std::string encode_checkpoint(const model::DtfModel& model, const training::OptimizerState& state,
                              const std::optional<training::TrainConfig>& train_config = std::nullopt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const model::DtfModel& model, const training::OptimizerState& state,
                     const std::filesystem::path& path,
                     const std::optional<training::TrainConfig>& train_config = std::nullopt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also checks the stored model config against `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const model::ModelConfig& expected);

}  // namespace poselift
