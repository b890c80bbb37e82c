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

#include "poselift/model.hpp"

#include <cmath>
#include <random>

namespace poselift::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSVG: return "SVG";
    case Variant::kDVG: return "DVG";
    case Variant::kTVG: return "TVG";
    case Variant::kDTF: return "DTF";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "SVG" || name == "svg") return Variant::kSVG;
  if (name == "DVG" || name == "dvg") return Variant::kDVG;
  if (name == "TVG" || name == "tvg") return Variant::kTVG;
  if (name == "DTF" || name == "dtf") return Variant::kDTF;
  throw Error("unknown model variant '" + name + "' (expected SVG|DVG|TVG|DTF)");
}

int ModelConfig::n_views() const {
  switch (variant) {
    case Variant::kSVG: return 1;
    case Variant::kTVG: return 3;
    default: return 2;
  }
}

void ModelConfig::check() const {
  if (frames < 1) throw Error("model frames must be >= 1");
  if (joints < 2) throw Error("model joints must be >= 2");
  if (root_index < 0 || root_index >= joints) throw Error("model root_index out of range");
  if (mvg_layers < 1) throw Error("mvg_layers must be >= 1");
  if (srm_layers < 0) throw Error("srm_layers must be >= 0");
  if (has_fusion() && ifm_layers < 0) throw Error("ifm_layers must be >= 0");
  if (embed_dim < 1) throw Error("embed_dim must be >= 1");
  if (n_heads < 1 || embed_dim % n_heads != 0)
    throw Error("embed_dim " + std::to_string(embed_dim) + " is not divisible by n_heads " +
                std::to_string(n_heads));
  if (spatial_heads < 1 || 3 % spatial_heads != 0) throw Error("spatial_heads must divide 3");
  if (!(mlp_ratio > 0.0)) throw Error("mlp_ratio must be positive");
  if (!(output_scale_mm > 0.0)) throw Error("output_scale_mm must be positive");
}

namespace {

class Builder {
 public:
  Builder(ParameterSet<float>* params, std::uint64_t seed) : params_(params), rng_(seed) {}

  int tensor(const std::string& name, std::vector<int> shape, float fill) {
    if (!params_) return next_++;
    return params_->add(name, nn::Tensor<float>(std::move(shape), fill));
  }

  // Fan-in scaled uniform weights, zero bias.
  LinearIdx linear(const std::string& name, int in, int out) {
    LinearIdx idx;
    if (params_) {
      nn::Tensor<float> w({in, out});
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& x : w.data) x = static_cast<float>(dist(rng_));
      idx.weight = params_->add(name + ".weight", std::move(w));
    } else {
      idx.weight = next_++;
    }
    idx.bias = tensor(name + ".bias", {out}, 0.0f);
    return idx;
  }

  LayerNormIdx layer_norm(const std::string& name, int width) {
    return {tensor(name + ".gamma", {width}, 1.0f), tensor(name + ".beta", {width}, 0.0f)};
  }

  AttentionIdx attention(const std::string& name, int width) {
    return {linear(name + ".query", width, width), linear(name + ".key", width, width),
            linear(name + ".value", width, width), linear(name + ".output", width, width)};
  }

  MlpIdx mlp(const std::string& name, int in, int hidden, int out) {
    return {linear(name + ".fc1", in, hidden), linear(name + ".fc2", hidden, out)};
  }

 private:
  ParameterSet<float>* params_;
  std::mt19937_64 rng_;
  int next_ = 0;
};

int hidden_width(double ratio, int width) {
  return std::max(1, static_cast<int>(std::lround(ratio * width)));
}

}  // namespace

Layout make_layout(const ModelConfig& cfg, ParameterSet<float>* params, std::uint64_t seed) {
  cfg.check();
  Builder b(params, seed);
  Layout layout;
  const int K = cfg.n_views();
  const int M = cfg.embed_dim;
  for (int k = 0; k < K; ++k) {
    const std::string p = "view" + std::to_string(k);
    ViewIdx v;
    v.ln_input = b.layer_norm(p + ".mvg.ln_input", 3);
    v.spatial_embed = b.tensor(p + ".mvg.spatial_embed", {cfg.frames, cfg.joints, 3}, 0.0f);
    for (int l = 0; l < cfg.mvg_layers; ++l) {
      const std::string q = p + ".mvg.layer" + std::to_string(l);
      TransformerLayerIdx layer;
      layer.ln_attn = b.layer_norm(q + ".ln_attn", 3);
      layer.attn = b.attention(q + ".attn", 3);
      layer.ln_mlp = b.layer_norm(q + ".ln_mlp", 3);
      layer.mlp = b.mlp(q + ".mlp", 3, hidden_width(cfg.mlp_ratio, 3), 3);
      v.mvg.push_back(layer);
    }
    v.ln_output = b.layer_norm(p + ".mvg.ln_output", 3);
    v.temporal_proj = b.linear(p + ".temporal_proj", cfg.joints * 3, M);
    v.temporal_embed = b.tensor(p + ".temporal_embed", {cfg.frames, M}, 0.0f);
    for (int l = 0; l < cfg.srm_layers; ++l) {
      const std::string q = p + ".srm.layer" + std::to_string(l);
      v.srm.push_back({b.layer_norm(q + ".ln", M), b.attention(q + ".attn", M)});
    }
    if (cfg.has_fusion()) {
      for (int l = 0; l < cfg.ifm_layers; ++l) {
        const std::string q = p + ".mca.layer" + std::to_string(l);
        v.mca.push_back({b.layer_norm(q + ".ln", M), b.attention(q + ".attn", M)});
      }
    }
    layout.views.push_back(std::move(v));
  }
  for (int l = 0; l < cfg.srm_layers; ++l) {
    const std::string q = "cvr.layer" + std::to_string(l);
    layout.cvr.push_back(
        {b.layer_norm(q + ".ln", K * M), b.mlp(q + ".mlp", K * M, hidden_width(cfg.mlp_ratio, K * M), K * M)});
  }
  if (cfg.has_fusion()) {
    layout.fvr = {b.layer_norm("fvr.ln", K * M),
                  b.mlp("fvr.mlp", K * M, hidden_width(cfg.mlp_ratio, K * M), M)};
  }
  layout.head_ln = b.layer_norm("head.ln", M);
  layout.head = b.linear("head", M, cfg.joints * 3);
  return layout;
}

DtfModel DtfModel::build(const ModelConfig& cfg, std::uint64_t seed) {
  DtfModel m;
  m.cfg_ = cfg;
  m.seed_ = seed;
  m.layout_ = make_layout(cfg, &m.params_, seed);
  return m;
}

DtfModel::Prediction DtfModel::predict(const PoseSequence2D& guided) const {
  nn::Tape<float> tape;
  Bound<float> b = bind(tape, cfg_, layout_, params_, false);
  nn::Var input = tape.constant(input_tensor<float>(guided, cfg_));
  ForwardVars<float> out = model_forward(tape, b, input);
  const auto& seq = tape.value(out.sequence);
  const auto& central = tape.value(out.central);
  return {PoseSequence3D(cfg_.frames, cfg_.joints, seq.data),
          PoseSequence3D(1, cfg_.joints, central.data)};
}

}  // namespace poselift::model
