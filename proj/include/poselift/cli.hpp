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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "poselift/model.hpp"
#include "poselift/training.hpp"

namespace poselift::cli {

inline constexpr const char* kRunConfigVersion = "poselift-run/1";

// Everything `poselift train` needs, read from one JSON file.
struct RunConfig {
  std::string version = kRunConfigVersion;
  model::ModelConfig model;
  std::uint64_t model_seed = 0;
  training::TrainConfig train;
  std::filesystem::path data_dir;
  std::string train_split = "train";
  std::string eval_split = "test";
  std::filesystem::path checkpoint;  // written at the end (and periodically)
  std::filesystem::path log;         // line-delimited JSON, one record per step
  std::optional<std::filesystem::path> resume;
  int checkpoint_every = 0;

  nlohmann::ordered_json to_json() const;
  // Relative paths are resolved against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

// Exit codes: 0 success, 1 runtime error, 2 usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace poselift::cli
