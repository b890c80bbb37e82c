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

#include "poselift/config.hpp"

#include <algorithm>

namespace poselift {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!j.is_object()) throw Error(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
    if (!known) throw Error(context + ": unknown key '" + key + "'");
  }
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out, const std::string& context) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(context + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::ordered_json to_json(const model::ModelConfig& c) {
  nlohmann::ordered_json j;
  j["variant"] = model::to_string(c.variant);
  j["frames"] = c.frames;
  j["joints"] = c.joints;
  j["root_index"] = c.root_index;
  j["mvg_layers"] = c.mvg_layers;
  j["srm_layers"] = c.srm_layers;
  j["ifm_layers"] = c.ifm_layers;
  j["embed_dim"] = c.embed_dim;
  j["n_heads"] = c.n_heads;
  j["spatial_heads"] = c.spatial_heads;
  j["mlp_ratio"] = c.mlp_ratio;
  j["output_scale_mm"] = c.output_scale_mm;
  return j;
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "model config";
  reject_unknown_keys(j, {"variant", "frames", "joints", "root_index", "mvg_layers", "srm_layers", "ifm_layers",
                          "embed_dim", "n_heads", "spatial_heads", "mlp_ratio", "output_scale_mm"},
                      ctx);
  model::ModelConfig c;
  if (j.contains("variant")) {
    std::string v;
    read_if(j, "variant", v, ctx);
    c.variant = model::parse_variant(v);
  }
  read_if(j, "frames", c.frames, ctx);
  read_if(j, "joints", c.joints, ctx);
  read_if(j, "root_index", c.root_index, ctx);
  read_if(j, "mvg_layers", c.mvg_layers, ctx);
  read_if(j, "srm_layers", c.srm_layers, ctx);
  read_if(j, "ifm_layers", c.ifm_layers, ctx);
  read_if(j, "embed_dim", c.embed_dim, ctx);
  read_if(j, "n_heads", c.n_heads, ctx);
  read_if(j, "spatial_heads", c.spatial_heads, ctx);
  read_if(j, "mlp_ratio", c.mlp_ratio, ctx);
  read_if(j, "output_scale_mm", c.output_scale_mm, ctx);
  c.check();
  return c;
}

nlohmann::ordered_json to_json(const occlusion::GuidanceConfig& c) {
  nlohmann::ordered_json j;
  j["f_past"] = c.f_past;
  j["f_future"] = c.f_future;
  j["fallback"] = occlusion::to_string(c.fallback);
  return j;
}

occlusion::GuidanceConfig guidance_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "guidance config";
  reject_unknown_keys(j, {"f_past", "f_future", "fallback"}, ctx);
  occlusion::GuidanceConfig c;
  read_if(j, "f_past", c.f_past, ctx);
  read_if(j, "f_future", c.f_future, ctx);
  if (j.contains("fallback")) {
    std::string f;
    read_if(j, "fallback", f, ctx);
    c.fallback = occlusion::parse_fallback(f);
  }
  c.check();
  return c;
}

nlohmann::ordered_json to_json(const training::TrainConfig& c) {
  nlohmann::ordered_json j;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["lr_decay"] = c.lr_decay;
  j["seed"] = c.seed;
  j["occlusion_mode"] = training::to_string(c.occlusion_mode);
  j["n_missing_per_frame"] = c.n_missing_per_frame;
  j["n_missing_max"] = c.n_missing_max;
  j["guidance"] = to_json(c.guidance);
  j["full_sequence_loss"] = c.full_sequence_loss;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["eval_every"] = c.eval_every;
  j["eval_n_missing"] = c.eval_n_missing;
  j["eval_seed"] = c.eval_seed;
  return j;
}

training::TrainConfig train_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "train config";
  reject_unknown_keys(j, {"batch_size", "steps", "learning_rate", "lr_decay", "seed", "occlusion_mode",
                          "n_missing_per_frame", "n_missing_max", "guidance", "full_sequence_loss", "beta1",
                          "beta2", "epsilon", "eval_every", "eval_n_missing", "eval_seed"},
                      ctx);
  training::TrainConfig c;
  read_if(j, "batch_size", c.batch_size, ctx);
  read_if(j, "steps", c.steps, ctx);
  read_if(j, "learning_rate", c.learning_rate, ctx);
  read_if(j, "lr_decay", c.lr_decay, ctx);
  read_if(j, "seed", c.seed, ctx);
  if (j.contains("occlusion_mode")) {
    std::string m;
    read_if(j, "occlusion_mode", m, ctx);
    c.occlusion_mode = training::parse_occlusion_mode(m);
  }
  read_if(j, "n_missing_per_frame", c.n_missing_per_frame, ctx);
  read_if(j, "n_missing_max", c.n_missing_max, ctx);
  if (j.contains("guidance")) c.guidance = guidance_config_from_json(j.at("guidance"));
  read_if(j, "full_sequence_loss", c.full_sequence_loss, ctx);
  read_if(j, "beta1", c.beta1, ctx);
  read_if(j, "beta2", c.beta2, ctx);
  read_if(j, "epsilon", c.epsilon, ctx);
  read_if(j, "eval_every", c.eval_every, ctx);
  read_if(j, "eval_n_missing", c.eval_n_missing, ctx);
  read_if(j, "eval_seed", c.eval_seed, ctx);
  c.check();
  return c;
}

}  // namespace poselift
