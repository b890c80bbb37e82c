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

#include "poselift/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "poselift/checkpoint.hpp"
#include "poselift/config.hpp"
#include "poselift/gradcheck.hpp"
#include "poselift/metrics.hpp"
#include "poselift/occlusion.hpp"
#include "poselift/synth.hpp"

namespace poselift::cli {

namespace fs = std::filesystem;

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["model"] = poselift::to_json(model);
  j["model_seed"] = model_seed;
  j["train"] = poselift::to_json(train);
  j["data"] = {{"dir", data_dir.string()}, {"train_split", train_split}, {"eval_split", eval_split}};
  j["output"] = {{"checkpoint", checkpoint.string()}, {"log", log.string()}};
  if (resume) j["resume"] = resume->string();
  j["checkpoint_every"] = checkpoint_every;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown_keys(j, {"version", "model", "model_seed", "train", "data", "output", "resume", "checkpoint_every"},
                      "run config");
  if (!j.contains("version") || !j.at("version").is_string()) throw Error("run config: version string required");
  RunConfig c;
  c.version = j.at("version").get<std::string>();
  if (c.version != kRunConfigVersion)
    throw Error("run config: unsupported version '" + c.version + "' (expected " + kRunConfigVersion + ")");
  auto resolve = [&](const std::string& p) { return p.empty() || fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("model_seed")) c.model_seed = j.at("model_seed").get<std::uint64_t>();
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (!j.contains("data")) throw Error("run config: 'data' section required");
    const auto& d = j.at("data");
    reject_unknown_keys(d, {"dir", "train_split", "eval_split"}, "run config data");
    c.data_dir = resolve(d.at("dir").get<std::string>());
    if (d.contains("train_split")) c.train_split = d.at("train_split").get<std::string>();
    if (d.contains("eval_split")) c.eval_split = d.at("eval_split").get<std::string>();
    if (!j.contains("output")) throw Error("run config: 'output' section required");
    const auto& o = j.at("output");
    reject_unknown_keys(o, {"checkpoint", "log"}, "run config output");
    c.checkpoint = resolve(o.at("checkpoint").get<std::string>());
    if (o.contains("log")) c.log = resolve(o.at("log").get<std::string>());
    if (j.contains("resume") && !j.at("resume").is_null()) c.resume = resolve(j.at("resume").get<std::string>());
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("run config: ") + e.what());
  }
  if (c.checkpoint_every < 0) throw Error("run config: checkpoint_every must be >= 0");
  return c;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T>
std::vector<T> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "'" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

// A zero-filled joint carries (0, 0, 0); anything else counts as observed.
OcclusionMask infer_mask(const PoseSequence2D& seq) {
  OcclusionMask m = OcclusionMask::all_present(seq.frames(), seq.joints());
  for (int f = 0; f < seq.frames(); ++f)
    for (int j = 0; j < seq.joints(); ++j)
      if (seq.at(f, j, 0) == 0.0f && seq.at(f, j, 1) == 0.0f && seq.at(f, j, 2) == 0.0f) m.set(f, j, false);
  return m;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, j.dump(2) + "\n");
}

struct GuidanceFlags {
  int f_past = 3;
  int f_future = 3;
  std::string fallback = "whole";

  void add(CLI::App* app) {
    app->add_option("--f-past,--fp", f_past, "past frames searched for a missing joint")->capture_default_str();
    app->add_option("--f-future,--ff", f_future, "future frames searched for a missing joint")->capture_default_str();
    app->add_option("--fallback", fallback, "no observation in window: whole | zero")->capture_default_str();
  }
  occlusion::GuidanceConfig config() const {
    occlusion::GuidanceConfig g{f_past, f_future, occlusion::parse_fallback(fallback)};
    g.check();
    return g;
  }
};

Dataset load_split(const fs::path& dir, const std::string& split) {
  Dataset all = synth::load_dataset(dir);
  if (split.empty() || split == "all") return all;
  Dataset out = all.with_split(split);
  if (out.empty()) throw Error("dataset " + dir.string() + " has no '" + split + "' sequences");
  return out;
}

// synth ----------------------------------------------------------------------

struct SynthArgs {
  int n = 64;
  int frames = 81;
  std::string actions;
  std::uint64_t seed = 7;
  std::string out;
  double sigma = 0.01;
  double test_fraction = 0.25;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  std::vector<std::string> actions = a.actions.empty() ? synth::known_actions() : split_list(a.actions);
  synth::DatasetOptions opt;
  opt.sigma = a.sigma;
  opt.test_fraction = a.test_fraction;
  const synth::Manifest m = synth::make_dataset(a.n, actions, a.frames, a.out, a.seed, opt);
  std::size_t n_test = 0;
  for (const auto& e : m.entries) n_test += e.split == "test";
  out << "wrote " << m.entries.size() << " sequences (" << m.entries.size() - n_test << " train, " << n_test
      << " test) to " << a.out << "\n";
  return 0;
}

// occlude / guide ------------------------------------------------------------

struct OccludeArgs {
  std::string in;
  int n_missing = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string mask_out;
};

int run_occlude(const OccludeArgs& a, std::ostream& out) {
  const PoseSequence2D seq = load_sequence2d(a.in);
  auto [occluded, mask] = occlusion::inject_occlusion(seq, a.n_missing, a.seed);
  save_sequence(occluded, a.out);
  if (!a.mask_out.empty()) occlusion::save_mask(mask, a.mask_out);
  out << "occluded " << a.n_missing << " of " << seq.joints() << " joints per frame ("
      << occlusion::to_string(occlusion::categorize(a.n_missing, seq.joints())) << ") -> " << a.out << "\n";
  return 0;
}

struct GuideArgs {
  std::string in;
  std::string mask;
  std::string out;
  GuidanceFlags guidance;
};

int run_guide(const GuideArgs& a, std::ostream& out) {
  const PoseSequence2D seq = load_sequence2d(a.in);
  const OcclusionMask mask = a.mask.empty() ? infer_mask(seq) : occlusion::load_mask(a.mask);
  const PoseSequence2D guided = occlusion::guide_sequence(seq, mask, a.guidance.config());
  save_sequence(guided, a.out);
  std::size_t missing = 0;
  for (bool p : mask.present) missing += !p;
  out << "guided " << missing << " missing entries -> " << a.out << "\n";
  return 0;
}

// train ----------------------------------------------------------------------

int run_train(const std::string& config_path, std::ostream& out) {
  const fs::path path(config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("run config " + path.string() + ": " + e.what());
  }
  const RunConfig rc = RunConfig::from_json(j, path.parent_path());
  const Dataset train_data = load_split(rc.data_dir, rc.train_split);
  Dataset eval_data;
  if (rc.train.eval_every > 0) eval_data = load_split(rc.data_dir, rc.eval_split);

  std::optional<training::Trainer> trainer;
  if (rc.resume) {
    Checkpoint ck = load_checkpoint(*rc.resume, rc.model);
    out << "resuming from " << rc.resume->string() << " at step " << ck.state.step << "\n";
    trainer.emplace(std::move(ck.model), std::move(ck.state), train_data, rc.train, eval_data);
  } else {
    trainer.emplace(model::DtfModel::build(rc.model, rc.model_seed), train_data, rc.train, eval_data);
  }

  std::ofstream log;
  if (!rc.log.empty()) {
    if (rc.log.has_parent_path()) fs::create_directories(rc.log.parent_path());
    log.open(rc.log, rc.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw Error("cannot open log " + rc.log.string());
  }
  out << "training " << model::to_string(rc.model.variant) << " (" << trainer->model().parameter_count()
      << " parameters) on " << train_data.size() << " sequences, " << training::to_string(rc.train.occlusion_mode)
      << ", " << rc.train.steps << " steps\n";
  trainer->run_to_end([&](const training::StepLog& s) {
    if (log) log << s.to_json().dump() << "\n" << std::flush;
    if (rc.checkpoint_every > 0 && s.step % rc.checkpoint_every == 0)
      save_checkpoint(trainer->model(), trainer->state(), rc.checkpoint, rc.train);
    if (s.step == 1 || s.step % 100 == 0 || s.step == rc.train.steps) {
      out << "step " << s.step << " loss " << std::fixed << std::setprecision(3) << s.loss;
      if (s.eval_mpjpe_p1) out << " eval_p1 " << *s.eval_mpjpe_p1 << " eval_p2 " << *s.eval_mpjpe_p2;
      out << "\n" << std::defaultfloat;
    }
  });
  if (rc.checkpoint.has_parent_path()) fs::create_directories(rc.checkpoint.parent_path());
  save_checkpoint(trainer->model(), trainer->state(), rc.checkpoint, rc.train);
  out << "checkpoint -> " << rc.checkpoint.string() << "\n";
  return 0;
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  int n_missing = 0;
  std::uint64_t seed = 0;
  std::string mode = "guided";
  std::string out;
  GuidanceFlags guidance;
};

void print_row(std::ostream& out, const std::string& label, const metrics::MetricRow& r) {
  out << std::left << std::setw(12) << label << std::right << std::fixed << std::setprecision(2) << std::setw(10)
      << r.mpjpe_p1 << std::setw(10) << r.mpjpe_p2 << std::setw(9) << r.pck << std::setw(9) << r.auc << "\n"
      << std::defaultfloat;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = load_split(a.data, a.split);
  metrics::OcclusionSetting setting{a.n_missing, a.seed, metrics::parse_input_mode(a.mode), a.guidance.config()};
  metrics::EvalReport report = metrics::evaluate(ck.model, data, setting);
  report.model_identity = fs::path(a.checkpoint).filename().string() + " (" + report.model_identity + ", step " +
                          std::to_string(ck.state.step) + ")";
  out << std::left << std::setw(12) << "action" << std::right << std::setw(10) << "P1 mm" << std::setw(10)
      << "P2 mm" << std::setw(9) << "PCK %" << std::setw(9) << "AUC %" << "\n";
  for (const auto& [action, row] : report.per_action) print_row(out, action, row);
  print_row(out, "average", report.aggregate);
  if (!a.out.empty()) write_json(a.out, report.to_json());
  return 0;
}

// gradcheck ------------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double tol = gradcheck::kPrimitiveTolerance;
  double model_tol = gradcheck::kModelTolerance;
  std::string variants = "DTF";
};

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<gradcheck::CaseResult> results = gradcheck::primitive_suite(a.seed, a.tol);
  for (const auto& v : split_list(a.variants))
    results.push_back(gradcheck::model_check(gradcheck::tiny_config(model::parse_variant(v)), a.seed, a.model_tol));
  bool all = true;
  out << std::left << std::setw(30) << "check" << std::right << std::setw(14) << "max rel err" << std::setw(10)
      << "tol" << std::setw(10) << "entries" << "  result\n";
  for (const auto& r : results) {
    all = all && r.report.passed();
    out << std::left << std::setw(30) << r.name << std::right << std::scientific << std::setprecision(3)
        << std::setw(14) << r.report.max_rel_error << std::setw(10) << std::setprecision(0) << r.report.tolerance
        << std::defaultfloat << std::setw(10) << r.report.n_checked << "  " << (r.report.passed() ? "ok" : "FAIL")
        << "\n";
  }
  return all ? 0 : 1;
}

// compare --------------------------------------------------------------------

struct CompareArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string n_missing = "4,6,8,10,12,14,16";
  std::string seeds = "1";
  std::string out;
  std::string csv;
  GuidanceFlags guidance;
};

int run_compare(const CompareArgs& a, std::ostream& out) {
  const std::vector<int> sweep = parse_number_list<int>(a.n_missing, "--n-missing");
  const std::vector<std::uint64_t> seeds = parse_number_list<std::uint64_t>(a.seeds, "--seeds");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = load_split(a.data, a.split);
  const occlusion::GuidanceConfig g = a.guidance.config();

  struct Row {
    int n_missing;
    std::string mode;
    double p1 = 0.0, p2 = 0.0;
  };
  std::vector<Row> rows;
  for (int n : sweep) {
    for (auto mode : {metrics::InputMode::kZeroFill, metrics::InputMode::kGuided}) {
      Row row{n, mode == metrics::InputMode::kZeroFill ? "NOG" : "guided"};
      for (std::uint64_t s : seeds) {
        const auto report = metrics::evaluate(ck.model, data, {n, s, mode, g});
        row.p1 += report.aggregate.mpjpe_p1 / static_cast<double>(seeds.size());
        row.p2 += report.aggregate.mpjpe_p2 / static_cast<double>(seeds.size());
      }
      rows.push_back(row);
      out << "n_missing " << std::setw(2) << n << "  " << std::left << std::setw(7) << row.mode << std::right
          << std::fixed << std::setprecision(2) << " P1 " << row.p1 << "  P2 " << row.p2 << "\n"
          << std::defaultfloat;
    }
  }

  if (!a.out.empty()) {
    nlohmann::ordered_json j;
    j["checkpoint"] = fs::path(a.checkpoint).filename().string();
    j["seeds"] = seeds;
    j["guidance"] = to_json(g);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"n_missing", r.n_missing}, {"mode", r.mode}, {"mpjpe_p1", r.p1}, {"mpjpe_p2", r.p2}});
    write_json(a.out, j);
  }
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "n_missing,mode,mpjpe_p1,mpjpe_p2\n" << std::setprecision(10);
    for (const auto& r : rows) csv << r.n_missing << "," << r.mode << "," << r.p1 << "," << r.p2 << "\n";
    if (fs::path(a.csv).has_parent_path()) fs::create_directories(fs::path(a.csv).parent_path());
    write_file(a.csv, csv.str());
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"poselift: occlusion-guided 2D-to-3D pose lifting"};
  app.name("poselift");
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic paired 2D/3D dataset");
  synth_cmd->add_option("--n", synth_args.n, "number of sequences")->capture_default_str();
  synth_cmd->add_option("--frames", synth_args.frames, "frames per sequence")->capture_default_str();
  synth_cmd->add_option("--actions", synth_args.actions, "comma-separated action labels (default: all)");
  synth_cmd->add_option("--seed", synth_args.seed, "dataset seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--sigma", synth_args.sigma, "2D detector noise (normalized units)")->capture_default_str();
  synth_cmd->add_option("--test-fraction", synth_args.test_fraction, "fraction of clips in the test split")
      ->capture_default_str();

  OccludeArgs occlude_args;
  std::vector<std::string> occlude_pos;
  auto* occlude_cmd = app.add_subcommand("occlude", "zero out random joints of a 2D sequence");
  occlude_cmd->add_option("paths", occlude_pos, "IN.pseq2d OUT.pseq2d [OUT.mask.json]")->expected(0, 3);
  occlude_cmd->add_option("--in", occlude_args.in, "input .pseq2d");
  occlude_cmd->add_option("--n-missing", occlude_args.n_missing, "joints removed per frame")->required();
  occlude_cmd->add_option("--seed", occlude_args.seed, "mask seed")->capture_default_str();
  occlude_cmd->add_option("--out", occlude_args.out, "output .pseq2d");
  occlude_cmd->add_option("--mask-out", occlude_args.mask_out, "write the mask as JSON");

  GuideArgs guide_args;
  std::vector<std::string> guide_pos;
  auto* guide_cmd = app.add_subcommand("guide", "fill missing joints by occlusion guidance");
  guide_cmd->add_option("paths", guide_pos, "IN.pseq2d [MASK.json] OUT.pseq2d")->expected(0, 3);
  guide_cmd->add_option("--in", guide_args.in, "input .pseq2d");
  guide_cmd->add_option("--mask", guide_args.mask, "mask JSON (default: zero entries are missing)");
  guide_cmd->add_option("--out", guide_args.out, "output .pseq2d");
  guide_args.guidance.add(guide_cmd);

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
  train_cmd->add_option("--config", train_config, "run config JSON")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset directory")->required();
  eval_cmd->add_option("--split", eval_args.split, "train | test | all")->capture_default_str();
  eval_cmd->add_option("--n-missing", eval_args.n_missing, "joints removed per frame")->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "occlusion seed")->capture_default_str();
  eval_cmd->add_option("--mode", eval_args.mode, "guided | zero_fill | clean")->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "report JSON");
  eval_args.guidance.add(eval_cmd);

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc_cmd->add_option("--seed", gc_args.seed, "seed for random inputs")->capture_default_str();
  gc_cmd->add_option("--tol", gc_args.tol, "primitive tolerance")->capture_default_str();
  gc_cmd->add_option("--model-tol", gc_args.model_tol, "end-to-end tolerance")->capture_default_str();
  gc_cmd->add_option("--variants", gc_args.variants, "comma-separated model variants")->capture_default_str();

  CompareArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "zero-filled (NOG) vs guided input over a missing-joint sweep");
  cmp_cmd->add_option("--checkpoint", cmp_args.checkpoint, "checkpoint file")->required();
  cmp_cmd->add_option("--data", cmp_args.data, "dataset directory")->required();
  cmp_cmd->add_option("--split", cmp_args.split, "train | test | all")->capture_default_str();
  cmp_cmd->add_option("--n-missing", cmp_args.n_missing, "comma-separated sweep")->capture_default_str();
  cmp_cmd->add_option("--seeds", cmp_args.seeds, "comma-separated occlusion seeds")->capture_default_str();
  cmp_cmd->add_option("--out", cmp_args.out, "comparison JSON");
  cmp_cmd->add_option("--csv", cmp_args.csv, "plot-ready CSV");
  cmp_args.guidance.add(cmp_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth_args, out);
    if (*occlude_cmd) {
      if (!occlude_pos.empty()) {
        if (occlude_pos.size() < 2 || !occlude_args.in.empty() || !occlude_args.out.empty())
          throw CLI::ValidationError("occlude", "give IN OUT [MASK] positionally or via --in/--out");
        occlude_args.in = occlude_pos[0];
        occlude_args.out = occlude_pos[1];
        if (occlude_pos.size() == 3) occlude_args.mask_out = occlude_pos[2];
      }
      if (occlude_args.in.empty() || occlude_args.out.empty())
        throw CLI::ValidationError("occlude", "input and output paths are required");
      return run_occlude(occlude_args, out);
    }
    if (*guide_cmd) {
      if (!guide_pos.empty()) {
        if (guide_pos.size() < 2 || !guide_args.in.empty() || !guide_args.out.empty())
          throw CLI::ValidationError("guide", "give IN [MASK] OUT positionally or via --in/--mask/--out");
        guide_args.in = guide_pos.front();
        guide_args.out = guide_pos.back();
        if (guide_pos.size() == 3) guide_args.mask = guide_pos[1];
      }
      if (guide_args.in.empty() || guide_args.out.empty())
        throw CLI::ValidationError("guide", "input and output paths are required");
      return run_guide(guide_args, out);
    }
    if (*train_cmd) return run_train(train_config, out);
    if (*eval_cmd) return run_eval(eval_args, out);
    if (*gc_cmd) return run_gradcheck(gc_args, out);
    if (*cmp_cmd) return run_compare(cmp_args, out);
  } catch (const CLI::ParseError& e) {
    err << "poselift: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "poselift: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace poselift::cli
