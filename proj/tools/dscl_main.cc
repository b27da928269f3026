// Copyright 2026 The DSCL Authors. All Rights Reserved.
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

// Command-line front end: generate, train, eval, ablate, bench, gradcheck,
// dump-groups.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dscl/ablation.h"
#include "dscl/bench.h"
#include "dscl/checkpoint.h"
#include "dscl/errors.h"
#include "dscl/eval.h"
#include "dscl/gradcheck_suite.h"
#include "dscl/manifest.h"
#include "dscl/pipeline.h"
#include "dscl/rng.h"
#include "dscl/run_config.h"
#include "dscl/synth.h"
#include "dscl/tensor_io.h"
#include "dscl/train.h"

namespace fs = std::filesystem;
using namespace dscl;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

// Config file plus per-key flag overrides.
struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "key = value run configuration file");
    for (const std::string& key : run_config_keys()) {
      cmd->add_option("--" + key, overrides[key], "override '" + key + "' from the config file");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg = path.empty() ? RunConfig{} : read_run_config(path);
    for (const auto& [key, value] : overrides)
      if (!value.empty()) apply_setting(cfg, key, value);
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int cmd_generate(const ConfigFlags& flags, std::size_t count, const std::string& out) {
  const RunConfig cfg = flags.resolve();
  cfg.synth.validate();
  const auto scenes = generate_scenes(cfg.synth, cfg.train.seed, count);
  save_dataset(out, scenes, cfg.synth.classes, cfg.train.seed);
  std::cout << "wrote " << scenes.size() << " scenes to " << out << "\n";
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& manifest, const std::string& out) {
  RunConfig cfg = flags.resolve();
  cfg.train.validate();
  const Dataset data = load_dataset(manifest);
  const TrainResult r = train(cfg.train, data.scenes, data.classes);
  const fs::path dir = out.empty() ? cfg.out_dir : fs::path(out);
  fs::create_directories(dir);
  cfg.synth.classes = data.classes;
  save_checkpoint(dir / "checkpoint.bin", r.state, cfg);
  write_metrics_csv(dir / "metrics.csv", r.metrics);
  std::cout << "trained " << r.state.step << " steps, mode " << mode_name(cfg.train.mode) << "\n";
  if (!r.metrics.empty()) {
    const MetricsRow& last = r.metrics.back();
    std::cout << "final loss " << fixed4(last.loss_total);
    if (last.miou_refined) std::cout << ", mIoU " << fixed4(*last.miou_refined);
    std::cout << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest, const std::string& out) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  const Dataset data = load_dataset(manifest);
  const EvalResult e = evaluate(cp.state, data.scenes, data.classes, cp.config.train);
  std::ostringstream csv;
  csv << "class,iou_base,iou_refined\n";
  for (int k = 0; k < data.classes; ++k) {
    const auto& b = e.base.per_class[k];
    const auto& r = e.refined.per_class[k];
    std::cout << "class " << k << ": base " << (b ? fixed4(*b) : "n/a") << ", refined " << (r ? fixed4(*r) : "n/a")
              << "\n";
    csv << k << ',' << (b ? format_double(*b) : "") << ',' << (r ? format_double(*r) : "") << '\n';
  }
  std::cout << "mIoU base " << fixed4(e.base.miou) << "\n";
  std::cout << "mIoU refined " << fixed4(e.refined.miou) << "\n";
  csv << "mean," << format_double(e.base.miou) << ',' << format_double(e.refined.miou) << '\n';
  if (!out.empty()) write_text(out, csv.str());
  return 0;
}

int cmd_ablate(const ConfigFlags& flags, const std::string& seeds_text, std::size_t jobs) {
  const RunConfig cfg = flags.resolve();
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : split(seeds_text, ',')) {
    try {
      seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + s + "'");
    }
  }
  const AblationTable t = run_ablation(cfg, seeds, jobs);
  write_text(cfg.out_dir / "ablation.csv", ablation_csv(t));
  for (const AblationSummary& s : t.summary) {
    std::cout << mode_name(s.mode) << ": median mIoU base "
              << (s.median_base ? fixed4(*s.median_base) : "n/a") << ", refined "
              << (s.median_refined ? fixed4(*s.median_refined) : "n/a");
    if (s.aborted) std::cout << " (" << s.aborted << " of " << s.runs << " runs aborted)";
    std::cout << "\n";
  }
  for (const AblationCell& c : t.cells)
    if (!c.error.empty()) std::cerr << "aborted " << mode_name(c.mode) << " seed " << c.seed << ": " << c.error << "\n";
  return 0;
}

int cmd_bench(const std::string& sizes_text, const std::string& groups_text, std::size_t repeats,
              const std::string& out) {
  std::vector<BenchSize> sizes;
  for (const std::string& s : split(sizes_text, ',')) sizes.push_back(parse_bench_size(s));
  std::vector<std::size_t> groups;
  for (const std::string& g : split(groups_text, ',')) {
    try {
      groups.push_back(std::stoull(g));
    } catch (const std::exception&) {
      throw ConfigError("bad group count '" + g + "'");
    }
  }
  const auto records = bench_contrast(sizes, groups, repeats);
  write_text(out, bench_csv(records));
  for (const BenchRecord& r : records) {
    std::cout << r.size.label() << " " << variant_name(r.variant);
    if (r.variant == BenchVariant::kGrouped) std::cout << " G=" << r.groups;
    std::cout << ": " << r.median_seconds << " s/iter, " << r.pairs << " pairs\n";
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  bool ok = true;
  for (const GradCheckCase& c : run_gradcheck(seed, tol)) {
    std::cout << c.term << ": max rel error " << c.report.max_rel_error << (c.report.pass ? " ok" : " FAIL") << "\n";
    for (const ParamError& p : c.report.params) {
      std::cout << "  " << p.name << " " << p.max_rel_error << " (index " << p.worst_index << ")\n";
    }
    ok = ok && c.report.pass;
  }
  return ok ? 0 : kExitNumerical;
}

int cmd_dump_groups(const std::string& checkpoint, const std::string& manifest, const std::string& image_id,
                    const std::string& out) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  const Dataset data = load_dataset(manifest);
  std::size_t idx = data.ids.size();
  for (std::size_t i = 0; i < data.ids.size(); ++i)
    if (data.ids[i] == image_id) idx = i;
  if (idx == data.ids.size()) throw ConfigError("no image '" + image_id + "' in " + manifest);

  TrainConfig cfg = cp.config.train;
  if (cfg.mode == AblationMode::kBaseline) cfg.mode = AblationMode::kM1;
  const FeatureMap f = encode(cp.state.encoder, data.scenes[idx].image);
  const auto st = analyze_batch({f}, {data.scenes[idx].labels}, cp.state.cam.base, cfg, derive_seed(cfg.seed, 0xd0));
  const GroupSet& g = st[0].groups;

  std::vector<std::uint16_t> assign(g.assignment.begin(), g.assignment.end());
  const fs::path dir = out;
  fs::create_directories(dir);
  write_tensor(dir / (image_id + "_groups.dst"), Tensor({f.height, f.width}, std::move(assign)));

  std::ostringstream csv;
  csv << "group,class,size";
  for (std::size_t j = 0; j < g.prototypes.dim(1); ++j) csv << ",p" << j;
  csv << "\n";
  const auto sizes = g.sizes();
  for (std::size_t u = 0; u < g.groups; ++u) {
    csv << u << ',' << g.group_class[u] << ',' << sizes[u];
    for (std::size_t j = 0; j < g.prototypes.dim(1); ++j) csv << ',' << format_double(g.prototypes.at(u, j));
    csv << "\n";
  }
  write_text(dir / (image_id + "_groups.csv"), csv.str());
  std::cout << "wrote " << g.groups << " groups for " << image_id << " to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-stream contrastive learning on synthetic scenes"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, train_flags, ablate_flags;
  std::size_t count = 200;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "write synthetic scenes and a manifest");
  gen_flags.attach(gen);
  gen->add_option("--count", count, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string manifest, train_out;
  auto* tr = app.add_subcommand("train", "train on a manifest; writes checkpoint.bin and metrics.csv");
  train_flags.attach(tr);
  tr->add_option("--manifest", manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", train_out, "output directory (default: out_dir from the config)");

  std::string checkpoint, eval_manifest, eval_out;
  auto* ev = app.add_subcommand("eval", "score a checkpoint's pseudo labels against ground truth");
  ev->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("--manifest", eval_manifest)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "per-class IoU CSV");

  std::string seeds = "0,1,2,3,4";
  std::size_t jobs = 1;
  auto* ab = app.add_subcommand("ablate", "train every mode on every seed; writes ablation.csv");
  ablate_flags.attach(ab);
  ab->add_option("--seeds", seeds, "comma-separated seeds (at least three)");
  ab->add_option("--jobs", jobs, "runs trained in parallel")->check(CLI::PositiveNumber);

  std::string sizes = "32x32,32x64,64x64", groups = "3", bench_out = "bench.csv";
  std::size_t repeats = 5;
  auto* be = app.add_subcommand("bench", "time grouped against pixel-by-pixel contrast; writes bench.csv");
  be->add_option("--sizes", sizes, "comma-separated WxH or N");
  be->add_option("--groups", groups, "comma-separated group counts");
  be->add_option("--repeats", repeats)->check(CLI::Range(3, 1000));
  be->add_option("--out", bench_out, "CSV path");

  std::uint64_t gc_seed = 0;
  double tol = 1e-4;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every loss term");
  gc->add_option("--seed", gc_seed);
  gc->add_option("--tol", tol)->check(CLI::PositiveNumber);

  std::string dg_checkpoint, dg_manifest, image_id, dg_out = ".";
  auto* dg = app.add_subcommand("dump-groups", "write one image's group assignment and prototypes");
  dg->add_option("--checkpoint", dg_checkpoint)->required()->check(CLI::ExistingFile);
  dg->add_option("--manifest", dg_manifest)->required()->check(CLI::ExistingFile);
  dg->add_option("--image-id", image_id)->required();
  dg->add_option("--out", dg_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) return cmd_generate(gen_flags, count, gen_out);
    if (*tr) return cmd_train(train_flags, manifest, train_out);
    if (*ev) return cmd_eval(checkpoint, eval_manifest, eval_out);
    if (*ab) return cmd_ablate(ablate_flags, seeds, jobs);
    if (*be) return cmd_bench(sizes, groups, repeats, bench_out);
    if (*gc) return cmd_gradcheck(gc_seed, tol);
    if (*dg) return cmd_dump_groups(dg_checkpoint, dg_manifest, image_id, dg_out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
