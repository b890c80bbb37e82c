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

#include "json.hpp"
#include "poselift/model.hpp"
#include "poselift/occlusion.hpp"
#include "poselift/training.hpp"

namespace poselift {

// JSON forms of the configuration structs. Readers start from the defaults,
// override the keys present and reject any key they do not know.
nlohmann::ordered_json to_json(const model::ModelConfig& cfg);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const occlusion::GuidanceConfig& cfg);
occlusion::GuidanceConfig guidance_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const training::TrainConfig& cfg);
training::TrainConfig train_config_from_json(const nlohmann::json& j);

// Throws when `j` is not an object or holds a key outside `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context);

}  // namespace poselift
