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

#include "poselift/checkpoint.hpp"

#include "poselift/config.hpp"

namespace poselift {

namespace {

constexpr const char* kSections[] = {"param", "m", "v", "v_max"};

std::vector<int> shape_of(const nn::Tensor<float>& t) { return {t.shape.begin(), t.shape.end()}; }

}  // namespace

std::string encode_checkpoint(const model::DtfModel& model, const training::OptimizerState& state,
                              const std::optional<training::TrainConfig>& train_config) {
  const auto& params = model.params();
  const bool has_state = !state.m.empty();
  if (has_state && (state.m.size() != params.size() || state.v.size() != params.size() ||
                    state.v_max.size() != params.size()))
    throw Error("optimizer state does not match the model");

  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  std::string payload;
  std::size_t offset = 0;
  for (int s = 0; s < (has_state ? 4 : 1); ++s) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto& t = params.tensors[p];
      std::span<const float> data;
      switch (s) {
        case 0: data = t.data; break;
        case 1: data = state.m[p]; break;
        case 2: data = state.v[p]; break;
        default: data = state.v_max[p]; break;
      }
      if (data.size() != t.size()) throw Error("optimizer state shape mismatch for " + params.names[p]);
      manifest.push_back({{"name", params.names[p]}, {"section", kSections[s]}, {"shape", shape_of(t)},
                          {"offset", offset}});
      append_f32le(payload, data);
      offset += data.size();
    }
  }

  nlohmann::ordered_json header;
  header["format"] = "poselift-checkpoint";
  header["version"] = 1;
  header["model"] = to_json(model.config());
  header["seed"] = model.seed();
  header["step"] = state.step;
  if (train_config) header["train"] = to_json(*train_config);
  header["payload_floats"] = offset;
  header["manifest"] = manifest;
  const std::string text = header.dump();

  std::string out(kCheckpointMagic);
  append_u32le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 4) throw Error("checkpoint: truncated file");
  const std::string_view magic = bytes.substr(0, kCheckpointMagic.size());
  if (magic != kCheckpointMagic) {
    if (magic.substr(0, 5) == "PLCKv") throw Error("checkpoint: unknown format version");
    throw Error("checkpoint: bad magic");
  }
  const std::uint32_t header_len = read_u32le(bytes.substr(kCheckpointMagic.size(), 4));
  const std::size_t header_start = kCheckpointMagic.size() + 4;
  if (bytes.size() < header_start + header_len) throw Error("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_start, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: corrupt header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(header_start + header_len);

  try {
    if (header.value("format", std::string()) != "poselift-checkpoint") throw Error("checkpoint: not a checkpoint header");
    if (header.at("version").get<int>() != 1)
      throw Error("checkpoint: version mismatch (file has " + header.at("version").dump() + ", expected 1)");
    const model::ModelConfig cfg = model_config_from_json(header.at("model"));
    const auto seed = header.at("seed").get<std::uint64_t>();
    const auto payload_floats = header.at("payload_floats").get<std::size_t>();
    if (payload.size() != payload_floats * 4) throw Error("checkpoint: payload length mismatch");

    Checkpoint ck{model::DtfModel::build(cfg, seed), {}, std::nullopt};
    if (header.contains("train")) ck.train_config = train_config_from_json(header.at("train"));
    auto& params = ck.model.params();
    const auto& manifest = header.at("manifest");
    if (!manifest.is_array()) throw Error("checkpoint: corrupt manifest");
    const std::size_t n = params.size();
    const bool has_state = manifest.size() == 4 * n;
    if (manifest.size() != n && !has_state)
      throw Error("checkpoint: corrupt manifest (entry count does not match the model)");
    if (has_state) {
      ck.state = training::OptimizerState::zeros_like(params);
      ck.state.step = header.at("step").get<std::int64_t>();
    }

    for (std::size_t e = 0; e < manifest.size(); ++e) {
      const auto& entry = manifest[e];
      const std::size_t s = e / n;
      const std::size_t p = e % n;
      const auto& t = params.tensors[p];
      if (entry.at("name").get<std::string>() != params.names[p] || entry.at("section").get<std::string>() != kSections[s])
        throw Error("checkpoint: corrupt manifest (unexpected entry '" + entry.at("name").get<std::string>() + "')");
      if (entry.at("shape").get<std::vector<int>>() != shape_of(t))
        throw Error("checkpoint: corrupt manifest (shape mismatch for " + params.names[p] +
                    ", model expects " + nn::shape_string(t) + ")");
      const auto off = entry.at("offset").get<std::size_t>();
      if (off > payload_floats || t.size() > payload_floats - off)
        throw Error("checkpoint: corrupt manifest (offset overflow for " + params.names[p] + ")");
      std::span<float> dst;
      switch (s) {
        case 0: dst = params.tensors[p].data; break;
        case 1: dst = ck.state.m[p]; break;
        case 2: dst = ck.state.v[p]; break;
        default: dst = ck.state.v_max[p]; break;
      }
      read_f32le(payload.substr(off * 4, t.size() * 4), dst);
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: corrupt header: ") + e.what());
  }
}

void save_checkpoint(const model::DtfModel& model, const training::OptimizerState& state,
                     const std::filesystem::path& path, const std::optional<training::TrainConfig>& train_config) {
  write_file(path, encode_checkpoint(model, state, train_config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("missing checkpoint: " + path.string());
  return decode_checkpoint(read_file(path));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const model::ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  const auto& got = ck.model.config();
  if (got.joints != expected.joints)
    throw Error("checkpoint: dimension mismatch (file has j=" + std::to_string(got.joints) + ", expected j=" +
                std::to_string(expected.joints) + ")");
  if (!(got == expected)) throw Error("checkpoint: model config differs from the expected config");
  return ck;
}

}  // namespace poselift
