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

#include "poselift/nn.hpp"
#include "poselift/pose_core.hpp"

namespace poselift::model {

// SVG: one view, no fusion. DVG: two views averaged, no fusion.
// DTF: two views with cross-view fusion. TVG: three views with fusion.
enum class Variant { kSVG, kDVG, kTVG, kDTF };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kDTF;
  int frames = 27;
  int joints = 17;
  int root_index = 0;
  int mvg_layers = 4;
  int srm_layers = 2;
  int ifm_layers = 1;
  int embed_dim = 64;
  int n_heads = 8;
  // Heads of the joint-axis attention over 3-wide tokens; must divide 3.
  int spatial_heads = 1;
  double mlp_ratio = 2.0;
  // The regression head predicts in units of output_scale_mm millimetres.
  double output_scale_mm = 1000.0;

  int n_views() const;
  bool has_fusion() const { return variant == Variant::kDTF || variant == Variant::kTVG; }
  int central_index() const { return frames / 2; }
  void check() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<nn::Tensor<T>> tensors;

  int add(std::string name, nn::Tensor<T> value) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(value));
    return static_cast<int>(tensors.size()) - 1;
  }
  std::size_t size() const { return tensors.size(); }
  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw Error("no parameter named '" + name + "'");
  }
  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }
  bool operator==(const ParameterSet&) const = default;
};

// Indices into a ParameterSet.
struct LinearIdx {
  int weight = -1;
  int bias = -1;
};
struct LayerNormIdx {
  int gamma = -1;
  int beta = -1;
};
struct AttentionIdx {
  LinearIdx query, key, value, output;
};
struct MlpIdx {
  LinearIdx fc1, fc2;
};
struct TransformerLayerIdx {  // pre-norm attention + pre-norm MLP
  LayerNormIdx ln_attn;
  AttentionIdx attn;
  LayerNormIdx ln_mlp;
  MlpIdx mlp;
};
struct AttentionLayerIdx {  // pre-norm attention only
  LayerNormIdx ln;
  AttentionIdx attn;
};
struct MlpLayerIdx {  // pre-norm MLP
  LayerNormIdx ln;
  MlpIdx mlp;
};

struct ViewIdx {
  LayerNormIdx ln_input;
  int spatial_embed = -1;  // [t x j x 3]
  std::vector<TransformerLayerIdx> mvg;
  LayerNormIdx ln_output;
  LinearIdx temporal_proj;  // j*3 -> M
  int temporal_embed = -1;  // [t x M]
  std::vector<AttentionLayerIdx> srm;
  std::vector<AttentionLayerIdx> mca;  // one per fusion layer
};

struct Layout {
  std::vector<ViewIdx> views;
  std::vector<MlpLayerIdx> cvr;  // one per SRM layer, over the K*M concat
  MlpLayerIdx fvr;               // K*M -> M, fusion variants only
  LayerNormIdx head_ln;
  LinearIdx head;  // M -> j*3
};

class DtfModel {
 public:
  static DtfModel build(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const Layout& layout() const { return layout_; }
  ParameterSet<float>& params() { return params_; }
  const ParameterSet<float>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.element_count(); }

  struct Prediction {
    PoseSequence3D sequence;  // t frames, root-relative mm
    PoseSequence3D central;   // one frame, row central_index() of sequence
  };
  Prediction predict(const PoseSequence2D& guided) const;

 private:
  ModelConfig cfg_;
  std::uint64_t seed_ = 0;
  Layout layout_;
  ParameterSet<float> params_;
};

// Parameter-free architecture description; same layout the model builds.
Layout make_layout(const ModelConfig& cfg, ParameterSet<float>* params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Differentiable forward pass, templated on precision.

template <typename T>
struct Bound {
  const ModelConfig& cfg;
  const Layout& layout;
  std::vector<nn::Var> vars;  // one per parameter

  nn::Var at(int i) const { return vars.at(i); }
  nn::LinearVars linear(const LinearIdx& p) const { return {at(p.weight), at(p.bias)}; }
  nn::MlpVars mlp(const MlpIdx& p) const { return {linear(p.fc1), linear(p.fc2)}; }
  nn::AttentionVars attention(const AttentionIdx& p) const {
    return {linear(p.query), linear(p.key), linear(p.value), linear(p.output)};
  }
};

// Binds every parameter as a leaf (trainable) or a constant.
template <typename T>
Bound<T> bind(nn::Tape<T>& tape, const ModelConfig& cfg, const Layout& layout,
              const ParameterSet<T>& params, bool trainable) {
  Bound<T> b{cfg, layout, {}};
  b.vars.reserve(params.size());
  for (const auto& t : params.tensors) b.vars.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  return b;
}

template <typename T>
nn::Var layer_norm(nn::Tape<T>& tape, const Bound<T>& b, nn::Var x, const LayerNormIdx& p) {
  return nn::layer_norm(tape, x, b.at(p.gamma), b.at(p.beta));
}

// Multi-view generator for view k. P is [t*j x 3]; returns [t*j x 3].
template <typename T>
nn::Var mvg_forward(nn::Tape<T>& tape, const Bound<T>& b, int view, nn::Var P) {
  const ModelConfig& cfg = b.cfg;
  const ViewIdx& v = b.layout.views.at(view);
  const nn::AttentionConfig spatial{cfg.spatial_heads, 3};
  if (tape.value(P).rows() != cfg.frames * cfg.joints || tape.value(P).cols() != 3)
    throw Error("mvg_forward: input must be [frames*joints x 3]");
  nn::Var x = nn::add(tape, layer_norm(tape, b, P, v.ln_input), b.at(v.spatial_embed));
  for (const auto& layer : v.mvg) {
    nn::Var h = layer_norm(tape, b, x, layer.ln_attn);
    x = nn::add(tape, x,
                nn::multi_head_attention(tape, h, h, b.attention(layer.attn), spatial, cfg.frames));
    h = layer_norm(tape, b, x, layer.ln_mlp);
    x = nn::add(tape, x, nn::mlp_block(tape, h, b.mlp(layer.mlp)));
  }
  return nn::add(tape, P, layer_norm(tape, b, x, v.ln_output));
}

// Flattens each frame's j x 3 block, projects to M and adds E_tp.
template <typename T>
nn::Var temporal_embed(nn::Tape<T>& tape, const Bound<T>& b, int view, nn::Var spatial) {
  const ModelConfig& cfg = b.cfg;
  const ViewIdx& v = b.layout.views.at(view);
  nn::Var flat = nn::reshape(tape, spatial, {cfg.frames, cfg.joints * 3});
  return nn::add(tape, nn::linear(tape, flat, b.linear(v.temporal_proj)), b.at(v.temporal_embed));
}

// Self-refinement: per-view temporal self-attention, then an MLP over the
// concatenated views whose output is split back per view.
template <typename T>
std::vector<nn::Var> srm_forward(nn::Tape<T>& tape, const Bound<T>& b, std::vector<nn::Var> views) {
  const ModelConfig& cfg = b.cfg;
  const int K = cfg.n_views();
  if (static_cast<int>(views.size()) != K) throw Error("srm_forward: view count differs from config");
  const nn::AttentionConfig temporal{cfg.n_heads, cfg.embed_dim};
  for (int l = 0; l < cfg.srm_layers; ++l) {
    for (int k = 0; k < K; ++k) {
      const auto& p = b.layout.views[k].srm[l];
      nn::Var h = layer_norm(tape, b, views[k], p.ln);
      views[k] = nn::add(tape, views[k], nn::multi_head_attention(tape, h, h, b.attention(p.attn), temporal));
    }
    const auto& c = b.layout.cvr[l];
    nn::Var z = K == 1 ? views[0] : nn::concat_cols(tape, views);
    z = nn::add(tape, z, nn::mlp_block(tape, layer_norm(tape, b, z, c.ln), b.mlp(c.mlp)));
    for (int k = 0; k < K; ++k)
      views[k] = K == 1 ? z : nn::slice_cols(tape, z, k * cfg.embed_dim, cfg.embed_dim);
  }
  return views;
}

// Information fusion: each view queries its cyclic partner through
// cross-view attention, then the updated views are concatenated and mapped
// back to M.
template <typename T>
nn::Var ifm_forward(nn::Tape<T>& tape, const Bound<T>& b, std::vector<nn::Var> views) {
  const ModelConfig& cfg = b.cfg;
  if (!cfg.has_fusion()) throw Error("ifm_forward: variant " + to_string(cfg.variant) + " has no fusion module");
  const int K = cfg.n_views();
  if (static_cast<int>(views.size()) != K) throw Error("ifm_forward: view count differs from config");
  const nn::AttentionConfig temporal{cfg.n_heads, cfg.embed_dim};
  for (int l = 0; l < cfg.ifm_layers; ++l) {
    std::vector<nn::Var> normed(K);
    for (int k = 0; k < K; ++k) normed[k] = layer_norm(tape, b, views[k], b.layout.views[k].mca[l].ln);
    std::vector<nn::Var> next(K);
    for (int k = 0; k < K; ++k) {
      const auto& p = b.layout.views[k].mca[l];
      next[k] = nn::add(tape, views[k],
                        nn::multi_head_attention(tape, normed[k], normed[(k + 1) % K],
                                                 b.attention(p.attn), temporal));
    }
    views = std::move(next);
  }
  nn::Var z = nn::concat_cols(tape, views);
  return nn::mlp_block(tape, layer_norm(tape, b, z, b.layout.fvr.ln), b.mlp(b.layout.fvr.mlp));
}

template <typename T>
struct ForwardVars {
  nn::Var sequence;  // [t x j*3], root-relative mm
  nn::Var central;   // [1 x j*3]
};

// Full network. P is the guided input as [t*j x 3].
template <typename T>
ForwardVars<T> model_forward(nn::Tape<T>& tape, const Bound<T>& b, nn::Var P) {
  const ModelConfig& cfg = b.cfg;
  const int K = cfg.n_views();
  std::vector<nn::Var> views(K);
  for (int k = 0; k < K; ++k) views[k] = temporal_embed(tape, b, k, mvg_forward(tape, b, k, P));
  views = srm_forward(tape, b, std::move(views));
  nn::Var fused = cfg.has_fusion() ? ifm_forward(tape, b, views) : nn::mean_of(tape, views);
  nn::Var out = nn::linear(tape, layer_norm(tape, b, fused, b.layout.head_ln), b.linear(b.layout.head));
  out = nn::scale(tape, out, static_cast<T>(cfg.output_scale_mm));
  out = nn::subtract_root(tape, out, cfg.joints, cfg.root_index);
  return {out, nn::slice_rows(tape, out, cfg.central_index(), 1)};
}

// [t*j x 3] tensor from a 2D sequence, checked against the config.
template <typename T>
nn::Tensor<T> input_tensor(const PoseSequence2D& seq, const ModelConfig& cfg) {
  if (seq.frames() != cfg.frames || seq.joints() != cfg.joints)
    throw Error("input sequence is " + std::to_string(seq.frames()) + "x" + std::to_string(seq.joints()) +
                ", model expects " + std::to_string(cfg.frames) + "x" + std::to_string(cfg.joints));
  nn::Tensor<T> t({cfg.frames * cfg.joints, 3});
  std::copy(seq.data().begin(), seq.data().end(), t.data.begin());
  return t;
}

}  // namespace poselift::model
