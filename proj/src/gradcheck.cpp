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

#include "poselift/gradcheck.hpp"

#include <random>

#include "poselift/parallel.hpp"

namespace poselift::gradcheck {

namespace {

using nn::Tape;
using nn::Tensor;
using nn::Var;
using Leaves = std::span<const Var>;

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}
  Tensor<double> normal(std::vector<int> shape, double sd = 1.0) {
    Tensor<double> t(std::move(shape));
    std::normal_distribution<double> d(0.0, sd);
    for (auto& x : t.data) x = d(rng_);
    return t;
  }

 private:
  std::mt19937_64 rng_;
};

// Probes an arbitrary-shaped output through fixed random weights.
struct Probe {
  Tensor<double> weights;
  Var operator()(Tape<double>& tape, Var out) const { return nn::weighted_sum(tape, out, weights); }
};

CaseResult run(const std::string& name, const nn::ScalarFunction& f, const std::vector<Tensor<double>>& params,
               double tol) {
  return {name, nn::gradient_check(f, params, 1e-5, tol)};
}

}  // namespace

std::vector<CaseResult> primitive_suite(std::uint64_t seed, double tol) {
  Random r(seed);
  std::vector<CaseResult> out;

  {
    Probe p{r.normal({4, 3})};
    out.push_back(run("matmul", [p](Tape<double>& t, Leaves v) { return p(t, nn::matmul(t, v[0], v[1])); },
                      {r.normal({4, 5}), r.normal({5, 3})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("add", [p](Tape<double>& t, Leaves v) { return p(t, nn::add(t, v[0], v[1])); },
                      {r.normal({3, 4}), r.normal({3, 4})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("add_bias", [p](Tape<double>& t, Leaves v) { return p(t, nn::add_bias(t, v[0], v[1])); },
                      {r.normal({3, 4}), r.normal({4})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("scale", [p](Tape<double>& t, Leaves v) { return p(t, nn::scale(t, v[0], -1.7)); },
                      {r.normal({3, 4})}, tol));
  }
  {
    Probe p{r.normal({2, 6})};
    out.push_back(run("reshape", [p](Tape<double>& t, Leaves v) { return p(t, nn::reshape(t, v[0], {2, 6})); },
                      {r.normal({4, 3})}, tol));
  }
  {
    Probe p{r.normal({5, 6})};
    Tensor<double> gamma = r.normal({6}, 0.5);
    for (auto& g : gamma.data) g += 1.0;
    out.push_back(run("layer_norm",
                      [p](Tape<double>& t, Leaves v) { return p(t, nn::layer_norm(t, v[0], v[1], v[2], 1e-5)); },
                      {r.normal({5, 6}), gamma, r.normal({6}, 0.5)}, tol));
  }
  {
    Probe p{r.normal({4, 5})};
    out.push_back(run("gelu", [p](Tape<double>& t, Leaves v) { return p(t, nn::gelu(t, v[0])); },
                      {r.normal({4, 5}, 1.5)}, tol));
  }
  {
    Probe p{r.normal({4, 6})};
    out.push_back(run("sdp_attention",
                      [p](Tape<double>& t, Leaves v) {
                        return p(t, nn::sdp_attention(t, v[0], v[1], v[2], 0.5, 2, 2));
                      },
                      {r.normal({4, 4}), r.normal({6, 4}), r.normal({6, 6})}, tol));
  }
  {
    Probe p{r.normal({3, 2})};
    out.push_back(run("slice_cols", [p](Tape<double>& t, Leaves v) { return p(t, nn::slice_cols(t, v[0], 1, 2)); },
                      {r.normal({3, 5})}, tol));
  }
  {
    Probe p{r.normal({3, 7})};
    out.push_back(run("concat_cols",
                      [p](Tape<double>& t, Leaves v) { return p(t, nn::concat_cols(t, {v[0], v[1]})); },
                      {r.normal({3, 3}), r.normal({3, 4})}, tol));
  }
  {
    Probe p{r.normal({2, 4})};
    out.push_back(run("slice_rows", [p](Tape<double>& t, Leaves v) { return p(t, nn::slice_rows(t, v[0], 2, 2)); },
                      {r.normal({5, 4})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("mean_of", [p](Tape<double>& t, Leaves v) { return p(t, nn::mean_of(t, {v[0], v[1], v[2]})); },
                      {r.normal({3, 4}), r.normal({3, 4}), r.normal({3, 4})}, tol));
  }
  {
    Probe p{r.normal({2, 12})};
    out.push_back(run("subtract_root",
                      [p](Tape<double>& t, Leaves v) { return p(t, nn::subtract_root(t, v[0], 4, 1)); },
                      {r.normal({2, 12})}, tol));
  }
  {
    const Tensor<double> target = r.normal({2, 12});
    out.push_back(run("mean_joint_distance",
                      [target](Tape<double>& t, Leaves v) { return nn::mean_joint_distance(t, v[0], target); },
                      {r.normal({2, 12})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("linear",
                      [p](Tape<double>& t, Leaves v) { return p(t, nn::linear(t, v[0], {v[1], v[2]})); },
                      {r.normal({3, 5}), r.normal({5, 4}), r.normal({4})}, tol));
  }
  {
    Probe p{r.normal({3, 4})};
    out.push_back(run("mlp_block",
                      [p](Tape<double>& t, Leaves v) {
                        return p(t, nn::mlp_block(t, v[0], {{v[1], v[2]}, {v[3], v[4]}}));
                      },
                      {r.normal({3, 4}), r.normal({4, 8}, 0.5), r.normal({8}, 0.5), r.normal({8, 4}, 0.5),
                       r.normal({4}, 0.5)},
                      tol));
  }
  {
    const nn::AttentionConfig cfg{2, 4};
    Probe p{r.normal({6, 4})};
    std::vector<Tensor<double>> params{r.normal({6, 4}), r.normal({6, 4})};
    for (int i = 0; i < 4; ++i) {
      params.push_back(r.normal({4, 4}, 0.5));
      params.push_back(r.normal({4}, 0.5));
    }
    out.push_back(run("multi_head_attention (cross)",
                      [p, cfg](Tape<double>& t, Leaves v) {
                        const nn::AttentionVars a{{v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}, {v[8], v[9]}};
                        return p(t, nn::multi_head_attention(t, v[0], v[1], a, cfg, 2));
                      },
                      params, tol));
  }
  return out;
}

model::ModelConfig tiny_config(model::Variant variant) {
  model::ModelConfig cfg;
  cfg.variant = variant;
  cfg.frames = 9;
  cfg.joints = 5;
  cfg.embed_dim = 8;
  cfg.n_heads = 2;
  return cfg;
}

CaseResult model_check(const model::ModelConfig& cfg, std::uint64_t seed, double tol) {
  const model::DtfModel m = model::DtfModel::build(cfg, seed);
  Random r(mix_seed(seed));
  // Non-zero embeddings and norm parameters so every path carries gradient.
  model::ParameterSet<double> params = m.params().cast<double>();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names[i];
    const bool zero_init = name.find("embed") != std::string::npos || name.find(".bias") != std::string::npos ||
                           name.find(".beta") != std::string::npos;
    if (zero_init)
      for (auto& x : params.tensors[i].data) x = r.normal({1}, 0.1).data[0];
    if (name.find(".gamma") != std::string::npos)
      for (auto& x : params.tensors[i].data) x = 1.0 + r.normal({1}, 0.1).data[0];
  }
  const Tensor<double> input = r.normal({cfg.frames * cfg.joints, 3}, 0.5);
  const Tensor<double> target = r.normal({cfg.frames, cfg.joints * 3}, 100.0);
  const model::Layout& layout = m.layout();

  auto f = [&cfg, &layout, input, target](Tape<double>& t, Leaves v) {
    model::Bound<double> b{cfg, layout, std::vector<Var>(v.begin(), v.end())};
    const model::ForwardVars<double> out = model::model_forward(t, b, t.constant(input));
    return nn::mean_joint_distance(t, out.sequence, target);
  };
  return {"model " + model::to_string(cfg.variant), nn::gradient_check(f, params.tensors, 1e-5, tol)};
}

}  // namespace poselift::gradcheck
