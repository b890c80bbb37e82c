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

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "poselift/gradcheck.hpp"
#include "poselift/model.hpp"

using namespace poselift;
using namespace poselift::model;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

ModelConfig small(Variant v, int frames = 5, int joints = 4) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.frames = frames;
  cfg.joints = joints;
  cfg.embed_dim = 8;
  cfg.n_heads = 2;
  cfg.mvg_layers = 2;
  return cfg;
}

// Parameters with every tensor randomized, including the zero-initialized ones.
ParameterSet<double> randomized(const DtfModel& m, std::uint64_t seed) {
  ParameterSet<double> p = m.params().cast<double>();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.3);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool gamma = p.names[i].find(".gamma") != std::string::npos;
    for (auto& x : p.tensors[i].data) x = gamma ? 1.0 + d(rng) : x + d(rng);
  }
  return p;
}

void zero(ParameterSet<double>& p, int index) {
  for (auto& x : p.tensors[index].data) x = 0.0;
}
void zero(ParameterSet<double>& p, const LinearIdx& l) {
  zero(p, l.weight);
  zero(p, l.bias);
}
void zero(ParameterSet<double>& p, const AttentionIdx& a) {
  zero(p, a.query);
  zero(p, a.key);
  zero(p, a.value);
  zero(p, a.output);
}
void zero(ParameterSet<double>& p, const MlpIdx& m) {
  zero(p, m.fc1);
  zero(p, m.fc2);
}

Tensor<double> random_tensor(std::vector<int> shape, std::mt19937_64& rng, double sd = 1.0) {
  Tensor<double> t(std::move(shape));
  std::normal_distribution<double> d(0.0, sd);
  for (auto& x : t.data) x = d(rng);
  return t;
}

std::vector<double> naive_ln(const std::vector<double>& x, const double* g, const double* b) {
  double mean = 0.0, var = 0.0;
  for (double v : x) mean += v / x.size();
  for (double v : x) var += (v - mean) * (v - mean) / x.size();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / std::sqrt(var + 1e-5) * g[i] + b[i];
  return out;
}

PoseSequence2D random_input(const ModelConfig& cfg, std::mt19937_64& rng) {
  PoseSequence2D s(cfg.frames, cfg.joints);
  std::uniform_real_distribution<float> pos(-1.0f, 1.0f), conf(0.0f, 1.0f);
  for (int f = 0; f < cfg.frames; ++f)
    for (int j = 0; j < cfg.joints; ++j) {
      s.at(f, j, 0) = pos(rng);
      s.at(f, j, 1) = pos(rng);
      s.at(f, j, 2) = conf(rng);
    }
  return s;
}

}  // namespace

TEST_CASE("variants have the expected view counts and parameter ordering") {
  CHECK(small(Variant::kSVG).n_views() == 1);
  CHECK(small(Variant::kDVG).n_views() == 2);
  CHECK(small(Variant::kDTF).n_views() == 2);
  CHECK(small(Variant::kTVG).n_views() == 3);
  for (int M : {8, 16, 64})
    for (int frames : {1, 9, 27}) {
      auto count = [&](Variant v) {
        ModelConfig cfg = small(v, frames, 17);
        cfg.embed_dim = M;
        return DtfModel::build(cfg, 1).parameter_count();
      };
      const auto svg = count(Variant::kSVG), dvg = count(Variant::kDVG), dtf = count(Variant::kDTF),
                 tvg = count(Variant::kTVG);
      CHECK(svg < dvg);
      CHECK(dvg < dtf);
      CHECK(dtf <= tvg);
    }
}

TEST_CASE("configuration errors") {
  ModelConfig cfg;
  cfg.embed_dim = 65;
  cfg.n_heads = 8;
  CHECK_THROWS_AS(DtfModel::build(cfg, 0), Error);
  ModelConfig no_layers;
  no_layers.mvg_layers = 0;
  CHECK_THROWS_AS(no_layers.check(), Error);
  CHECK(parse_variant("TVG") == Variant::kTVG);
  CHECK_THROWS_AS(parse_variant("XYZ"), Error);
}

TEST_CASE("build is deterministic in the seed") {
  const ModelConfig cfg = small(Variant::kDTF);
  CHECK(DtfModel::build(cfg, 5).params() == DtfModel::build(cfg, 5).params());
  CHECK_FALSE(DtfModel::build(cfg, 5).params() == DtfModel::build(cfg, 6).params());
}

TEST_CASE("forward shapes, root convention and central row") {
  ModelConfig cfg;
  cfg.frames = 27;
  cfg.joints = 17;
  cfg.mvg_layers = 1;
  cfg.srm_layers = 1;
  cfg.embed_dim = 16;
  cfg.n_heads = 2;
  const DtfModel m = DtfModel::build(cfg, 3);
  std::mt19937_64 rng(1);
  const PoseSequence2D in = random_input(cfg, rng);
  const auto out = m.predict(in);
  REQUIRE(out.sequence.frames() == 27);
  REQUIRE(out.sequence.joints() == 17);
  REQUIRE(out.central.frames() == 1);
  for (int f = 0; f < 27; ++f)
    for (int c = 0; c < 3; ++c) CHECK(out.sequence.at(f, 0, c) == 0.0f);
  for (int j = 0; j < 17; ++j)
    for (int c = 0; c < 3; ++c) CHECK(out.central.at(0, j, c) == out.sequence.at(13, j, c));
  const auto again = m.predict(in);
  CHECK(again.sequence == out.sequence);
  CHECK_THROWS_AS(m.predict(PoseSequence2D(26, 17)), Error);
}

TEST_CASE("even frame counts select row t/2") {
  const ModelConfig cfg = small(Variant::kDVG, 6, 4);
  const DtfModel m = DtfModel::build(cfg, 2);
  std::mt19937_64 rng(2);
  const auto out = m.predict(random_input(cfg, rng));
  for (int j = 0; j < 4; ++j)
    for (int c = 0; c < 3; ++c) CHECK(out.central.at(0, j, c) == out.sequence.at(3, j, c));
}

TEST_CASE("forward pass is finite over random models and inputs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Variant v = static_cast<Variant>(seed % 4);
    const ModelConfig cfg = small(v, 3 + static_cast<int>(seed % 5), 5);
    const DtfModel m = DtfModel::build(cfg, seed);
    PoseSequence2D in(cfg.frames, cfg.joints);
    std::uniform_real_distribution<float> pos(-10.0f, 10.0f), conf(0.0f, 1.0f);
    for (int f = 0; f < cfg.frames; ++f)
      for (int j = 0; j < cfg.joints; ++j) {
        in.at(f, j, 0) = pos(rng);
        in.at(f, j, 1) = pos(rng);
        in.at(f, j, 2) = conf(rng);
      }
    // Occasionally feed exact zero joints, as zero-filled input does.
    if (seed % 3 == 0)
      for (int c = 0; c < 3; ++c) in.at(0, 1, c) = 0.0f;
    const auto out = m.predict(in);
    bool finite = true;
    for (float x : out.sequence.data()) finite = finite && std::isfinite(x);
    CHECK(finite);
  }
}

TEST_CASE("MVG with zeroed blocks reduces to P + LN(LN(P) + E_sp)") {
  ModelConfig cfg = small(Variant::kSVG, 1, 2);
  cfg.mvg_layers = 1;
  const DtfModel m = DtfModel::build(cfg, 4);
  ParameterSet<double> p = randomized(m, 9);
  const ViewIdx& v = m.layout().views[0];
  zero(p, v.mvg[0].attn);
  zero(p, v.mvg[0].mlp);

  std::mt19937_64 rng(10);
  const Tensor<double> P = random_tensor({2, 3}, rng);
  Tape<double> tape;
  const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
  const auto out = tape.value(mvg_forward(tape, b, 0, tape.constant(P)));

  const auto& E = p.tensors[v.spatial_embed].data;
  for (int j = 0; j < 2; ++j) {
    const std::vector<double> row{P(j, 0), P(j, 1), P(j, 2)};
    std::vector<double> x = naive_ln(row, p.tensors[v.ln_input.gamma].data.data(), p.tensors[v.ln_input.beta].data.data());
    for (int c = 0; c < 3; ++c) x[c] += E[j * 3 + c];
    const std::vector<double> y =
        naive_ln(x, p.tensors[v.ln_output.gamma].data.data(), p.tensors[v.ln_output.beta].data.data());
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out(j, c) - (row[c] + y[c])) < 1e-12);
  }
}

TEST_CASE("two views with different spatial embeddings give different MVG outputs") {
  const ModelConfig cfg = small(Variant::kDTF);
  const DtfModel m = DtfModel::build(cfg, 4);
  const ParameterSet<double> p = randomized(m, 11);
  std::mt19937_64 rng(12);
  const Tensor<double> P = random_tensor({cfg.frames * cfg.joints, 3}, rng);
  Tape<double> tape;
  const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
  const auto a = tape.value(mvg_forward(tape, b, 0, tape.constant(P)));
  const auto c = tape.value(mvg_forward(tape, b, 1, tape.constant(P)));
  REQUIRE(a.shape == P.shape);
  int differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a.data[i] != c.data[i];
  CHECK(differing == static_cast<int>(a.size()));
}

TEST_CASE("SRM views are independent exactly when the CVR weights are zero") {
  const ModelConfig cfg = small(Variant::kDVG);
  const DtfModel m = DtfModel::build(cfg, 4);
  std::mt19937_64 rng(13);
  const Tensor<double> y0 = random_tensor({cfg.frames, cfg.embed_dim}, rng);
  const Tensor<double> y1 = random_tensor({cfg.frames, cfg.embed_dim}, rng);
  const Tensor<double> probe = random_tensor({cfg.frames, cfg.embed_dim}, rng);

  // Gradient of a probe of view 0's output with respect to view 1's input.
  auto cross_grad = [&](const ParameterSet<double>& p) {
    Tape<double> tape;
    const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
    const Var a = tape.leaf(y0), c = tape.leaf(y1);
    const auto out = srm_forward(tape, b, {a, c});
    REQUIRE(tape.value(out[0]).shape == y0.shape);
    tape.backward(nn::weighted_sum(tape, out[0], probe));
    double norm = 0.0;
    for (double g : tape.grad(c).data) norm += g * g;
    return std::sqrt(norm);
  };
  // Output of view 0 after perturbing view 1 by a finite step.
  auto view0 = [&](const ParameterSet<double>& p, double delta) {
    Tape<double> tape;
    const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
    Tensor<double> y1p = y1;
    for (auto& x : y1p.data) x += delta;
    return tape.value(srm_forward(tape, b, {tape.constant(y0), tape.constant(y1p)})[0]);
  };

  ParameterSet<double> p = randomized(m, 14);
  CHECK(cross_grad(p) > 1e-6);
  for (const auto& layer : m.layout().cvr) zero(p, layer.mlp);
  CHECK(cross_grad(p) == 0.0);
  CHECK(view0(p, 0.0).data == view0(p, 1e-3).data);
}

TEST_CASE("SRM accepts a single frame") {
  const ModelConfig cfg = small(Variant::kDTF, 1, 4);
  const DtfModel m = DtfModel::build(cfg, 4);
  std::mt19937_64 rng(15);
  const auto out = m.predict(random_input(cfg, rng));
  CHECK(out.sequence.frames() == 1);
}

TEST_CASE("IFM with identical views and zero MCA weights is the FVR MLP of the duplicated features") {
  const ModelConfig cfg = small(Variant::kDTF);
  const DtfModel m = DtfModel::build(cfg, 4);
  ParameterSet<double> p = randomized(m, 16);
  for (const auto& v : m.layout().views)
    for (const auto& l : v.mca) zero(p, l.attn);
  std::mt19937_64 rng(17);
  const Tensor<double> y = random_tensor({cfg.frames, cfg.embed_dim}, rng);
  Tape<double> tape;
  const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
  const auto out = tape.value(ifm_forward(tape, b, {tape.constant(y), tape.constant(y)}));
  REQUIRE(out.rows() == cfg.frames);
  REQUIRE(out.cols() == cfg.embed_dim);

  const auto& fvr = m.layout().fvr;
  const auto& W1 = p.tensors[fvr.mlp.fc1.weight];
  const auto& B1 = p.tensors[fvr.mlp.fc1.bias];
  const auto& W2 = p.tensors[fvr.mlp.fc2.weight];
  const auto& B2 = p.tensors[fvr.mlp.fc2.bias];
  const int M = cfg.embed_dim, H = W1.cols();
  for (int r = 0; r < cfg.frames; ++r) {
    std::vector<double> z(2 * M);
    for (int c = 0; c < M; ++c) z[c] = z[M + c] = y(r, c);
    z = naive_ln(z, p.tensors[fvr.ln.gamma].data.data(), p.tensors[fvr.ln.beta].data.data());
    std::vector<double> h(H);
    for (int k = 0; k < H; ++k) {
      double s = B1.data[k];
      for (int c = 0; c < 2 * M; ++c) s += z[c] * W1(c, k);
      h[k] = s * oracle::phi(s);
    }
    for (int c = 0; c < M; ++c) {
      double s = B2.data[c];
      for (int k = 0; k < H; ++k) s += h[k] * W2(k, c);
      CHECK(std::abs(out(r, c) - s) < 1e-10);
    }
  }
}

TEST_CASE("IFM is order sensitive and refused for non-fusion variants") {
  const ModelConfig cfg = small(Variant::kDTF);
  const DtfModel m = DtfModel::build(cfg, 4);
  const ParameterSet<double> p = randomized(m, 18);
  std::mt19937_64 rng(19);
  const Tensor<double> a = random_tensor({cfg.frames, cfg.embed_dim}, rng);
  const Tensor<double> c = random_tensor({cfg.frames, cfg.embed_dim}, rng);
  Tape<double> tape;
  const Bound<double> b = bind(tape, cfg, m.layout(), p, false);
  const auto ab = tape.value(ifm_forward(tape, b, {tape.constant(a), tape.constant(c)}));
  const auto ba = tape.value(ifm_forward(tape, b, {tape.constant(c), tape.constant(a)}));
  CHECK_FALSE(ab.data == ba.data);

  const ModelConfig dvg = small(Variant::kDVG);
  const DtfModel d = DtfModel::build(dvg, 4);
  Tape<double> t2;
  const Bound<double> bd = bind(t2, dvg, d.layout(), d.params().cast<double>(), false);
  CHECK_THROWS_AS(ifm_forward(t2, bd, {t2.constant(a), t2.constant(c)}), Error);
  CHECK_THROWS_AS(srm_forward(t2, bd, {t2.constant(a)}), Error);
}

TEST_CASE("fusion is wired: DTF and DVG from one seed diverge") {
  const DtfModel dtf = DtfModel::build(small(Variant::kDTF), 21);
  const DtfModel dvg = DtfModel::build(small(Variant::kDVG), 21);
  std::mt19937_64 rng(22);
  const PoseSequence2D in = random_input(dtf.config(), rng);
  CHECK_FALSE(dtf.predict(in).sequence == dvg.predict(in).sequence);
}

TEST_CASE("every parameter receives gradient except attention key biases") {
  for (Variant v : {Variant::kSVG, Variant::kDVG, Variant::kDTF, Variant::kTVG}) {
    const ModelConfig cfg = gradcheck::tiny_config(v);
    const DtfModel m = DtfModel::build(cfg, 30);
    const ParameterSet<double> p = randomized(m, 31);
    std::mt19937_64 rng(32);
    const Tensor<double> in = random_tensor({cfg.frames * cfg.joints, 3}, rng, 0.5);
    const Tensor<double> target = random_tensor({cfg.frames, cfg.joints * 3}, rng, 100.0);
    Tape<double> tape;
    const Bound<double> b = bind(tape, cfg, m.layout(), p, true);
    const auto out = model_forward(tape, b, tape.constant(in));
    tape.backward(nn::mean_joint_distance(tape, out.sequence, target));
    for (std::size_t i = 0; i < p.size(); ++i) {
      double norm = 0.0;
      for (double g : tape.grad(b.vars[i]).data) norm += std::abs(g);
      INFO(to_string(v) << " " << p.names[i] << " |grad|=" << norm);
      // Softmax is invariant to the key bias, so its gradient vanishes.
      if (p.names[i].find(".key.bias") != std::string::npos)
        CHECK(norm < 1e-9);
      else
        CHECK(norm > 1e-9);
    }
  }
}

TEST_CASE("end-to-end gradient check of the tiny models") {
  for (Variant v : {Variant::kSVG, Variant::kDVG, Variant::kDTF, Variant::kTVG}) {
    const auto r = gradcheck::model_check(gradcheck::tiny_config(v), 7);
    INFO(r.name << " rel " << r.report.max_rel_error);
    CHECK(r.report.max_rel_error < 1e-3);
  }
}
