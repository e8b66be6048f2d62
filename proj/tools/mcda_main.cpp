/* Copyright 2026 The mcda Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// mcda: source-free test-time adaptation for optic disc/cup segmentation.
//
//   mcda synth        --preset synthetic-target --count 32 --out data/target
//   mcda pretrain     [--config cfg.json] [--dataset DIR|PRESET] --out runs/src
//   mcda pseudo-label --checkpoint runs/src/source.ckpt [--dataset ...]
//   mcda adapt        --checkpoint runs/src/source.ckpt [--alpha 100 --beta 1]
//   mcda evaluate     --checkpoint adapted.ckpt [--baseline source.ckpt]
//   mcda ablate       --checkpoint runs/src/source.ckpt [--sweep alpha]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcda/adaptation.hpp"
#include "mcda/errors.hpp"
#include "mcda/experiment.hpp"
#include "mcda/metrics.hpp"
#include "mcda/network.hpp"
#include "mcda/plot.hpp"
#include "mcda/serialization.hpp"

namespace fs = std::filesystem;
using namespace mcda;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> output_root;
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  bool force = false;
  bool verbose = false;
};

struct TrainFlags {
  std::optional<int> ce_epochs, dice_epochs, epochs, batch_size;
  std::optional<double> lr, alpha, beta;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)");
  cmd->add_option("--out", f.out, "Run directory (default <output root>/<command>)");
  cmd->add_option("--output-root", f.output_root,
                  std::string("Parent of default run directories (env ") + kOutputRootEnv + ")");
  cmd->add_option("--dataset", f.dataset, "Dataset directory or synthetic preset name");
  cmd->add_option("--seed", f.seed, "Seed for data, initialisation and shuffling");
  cmd->add_option("--count", f.count, "Number of images drawn from a synthetic preset");
  cmd->add_flag("--force", f.force, "Use a fresh sibling when the run directory exists");
  cmd->add_flag("-v,--verbose", f.verbose, "Per-epoch progress on stderr");
}

void add_adapt_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--alpha", t.alpha, "Boundary consistency weight");
  cmd->add_option("--beta", t.beta, "Feature consistency weight");
  cmd->add_option("--lr", t.lr, "Adam learning rate");
  cmd->add_option("--epochs", t.epochs, "Passes over the test set");
  cmd->add_option("--batch-size", t.batch_size, "Images per step");
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig c = f.config ? load_experiment_config(*f.config) : ExperimentConfig{};
  if (f.seed) {
    c.dataset.seed = *f.seed;
    c.pretrain.seed = *f.seed;
    c.adaptation.seed = *f.seed;
  }
  if (f.output_root) c.output_dir = *f.output_root;
  return c;
}

void apply_adapt_flags(const TrainFlags& t, ExperimentConfig& c) {
  if (t.alpha) c.adaptation.weights.alpha = *t.alpha;
  if (t.beta) c.adaptation.weights.beta = *t.beta;
  if (t.lr) c.adaptation.adam.lr = *t.lr;
  if (t.epochs) c.adaptation.epochs = *t.epochs;
  if (t.batch_size) c.adaptation.batch_size = *t.batch_size;
}

// Source preset draws use the dataset seed, target draws seed + 1.
std::uint64_t target_seed(const ExperimentConfig& c) { return c.dataset.seed + 1; }

fs::path run_path(const CommonFlags& f, const ExperimentConfig& c, const std::string& cmd) {
  if (f.out) return *f.out;
  return default_output_root(c.output_dir) / cmd;
}

bool wants(const ExperimentConfig& c, const std::string& format) {
  return std::find(c.report_formats.begin(), c.report_formats.end(), format) !=
         c.report_formats.end();
}

ModelParams load_matching_checkpoint(const std::string& path, const ArchConfig& arch) {
  if (!fs::exists(path)) throw ConfigError("checkpoint " + path + " does not exist");
  ModelParams p = load_checkpoint(path);
  if (!(p.arch == arch)) {
    throw ConfigError("checkpoint " + path + " was written for architecture " +
                      to_json_string(p.arch) + " but the config specifies " +
                      to_json_string(arch));
  }
  return p;
}

void check_sizes(const ArchConfig& arch, int h, int w, const std::string& name) {
  if (h != arch.input_height || w != arch.input_width) {
    throw ConfigError("image " + name + " is " + std::to_string(h) + "x" + std::to_string(w) +
                      " but arch.input_height x arch.input_width is " +
                      std::to_string(arch.input_height) + "x" +
                      std::to_string(arch.input_width));
  }
}

// The library records bare checkpoint file names; the run directory keeps
// them under checkpoints/.
void relativize(RunRecord& r) {
  auto rel = [](std::string& p) {
    if (!p.empty()) p = (fs::path("checkpoints") / p).generic_string();
  };
  for (auto& p : r.checkpoints) rel(p);
  for (auto& e : r.epochs) rel(e.checkpoint);
}

Json epoch_line(const std::string& kind, const EpochRecord& e) {
  Json j = e;
  j["event"] = kind + "_epoch";
  return j;
}

void progress(bool verbose, const EpochRecord& e) {
  if (!verbose) return;
  std::fprintf(stderr, "epoch %d", e.epoch);
  for (const auto& [k, v] : e.losses) std::fprintf(stderr, " %s=%.5g", k.c_str(), v);
  if (e.metrics) std::fprintf(stderr, " dice=%.2f", e.metrics->avg_dice());
  std::fprintf(stderr, "\n");
}

std::vector<Planes> images_only(const std::vector<std::pair<std::string, Planes>>& named) {
  std::vector<Planes> out;
  out.reserve(named.size());
  for (const auto& [_, img] : named) out.push_back(img);
  return out;
}

// ---- commands ----

struct SynthFlags {
  std::string preset = "synthetic-source";
  std::optional<std::string> domain;
  int count = 32;
  std::uint64_t seed = 0;
  std::string out;
  bool no_masks = false;
  bool force = false;
};

int cmd_synth(const SynthFlags& f) {
  DomainParams dp = domain_preset(f.preset);
  if (f.domain) {
    std::ifstream in(*f.domain);
    if (!in) throw ConfigError("cannot read domain file " + *f.domain);
    read_json(Json::parse(in), "domain", dp);
  }
  validate_domain(dp);
  if (f.count <= 0) throw ConfigError("--count must be positive");
  RunDirectory run(f.out, f.force);
  write_dataset(synth_dataset(dp, static_cast<std::size_t>(f.count), f.seed), run.staging());
  if (f.no_masks) fs::remove_all(run.staging() / "masks");
  run.write_text("domain.json", to_json_string(dp, 2) + "\n");
  run.commit();
  std::printf("%s\n", run.path().string().c_str());
  return 0;
}

int cmd_pretrain(const CommonFlags& f, const TrainFlags& t) {
  ExperimentConfig c = resolve_config(f);
  if (f.dataset) c.dataset.source = *f.dataset;
  if (f.count) c.dataset.source_count = *f.count;
  if (t.ce_epochs) c.pretrain.schedule.ce_epochs = *t.ce_epochs;
  if (t.dice_epochs) c.pretrain.schedule.dice_epochs = *t.dice_epochs;
  if (t.lr) c.pretrain.optimizer.lr = *t.lr;
  if (t.batch_size) c.pretrain.batch_size = *t.batch_size;
  validate(c);

  auto data = resolve_labeled(c.dataset.source, c.dataset.seed, c.dataset.source_count);
  for (const auto& s : data) check_sizes(c.arch, s.image.height(), s.image.width(), s.name);

  RunDirectory run(run_path(f, c, "pretrain"), f.force);
  run.write_text("config.json", to_json_string(c, 2) + "\n");
  JsonlLog log(run.staging() / "log.jsonl");
  TrainOptions opts;
  opts.checkpoint_dir = run.staging() / "checkpoints";
  fs::create_directories(*opts.checkpoint_dir);
  opts.on_epoch = [&](const EpochRecord& e) {
    log.write(epoch_line("pretrain", e));
    progress(f.verbose, e);
  };
  TrainResult res = pretrain(data, c.arch, c.pretrain, opts);
  save_checkpoint(res.params, run.staging() / "source.ckpt", "pretrain");
  relativize(res.record);
  run.write_text("record.json", to_json_string(res.record, 2) + "\n");
  Json summary{{"command", "pretrain"},
               {"checkpoint", "source.ckpt"},
               {"dataset", c.dataset.source},
               {"samples", data.size()},
               {"epochs", res.record.epochs.size()},
               {"wall_clock_seconds", res.record.wall_clock_seconds}};
  if (!res.record.epochs.empty()) summary["final_losses"] = res.record.epochs.back().losses;
  run.write_text("summary.json", summary.dump(2) + "\n");
  run.commit();
  std::printf("%s\n", (run.path() / "source.ckpt").string().c_str());
  return 0;
}

int cmd_pseudo_label(const CommonFlags& f, const std::string& checkpoint) {
  ExperimentConfig c = resolve_config(f);
  if (f.dataset) c.dataset.target = *f.dataset;
  if (f.count) c.dataset.target_count = *f.count;
  validate(c);
  ModelParams params = load_matching_checkpoint(checkpoint, c.arch);
  auto named = resolve_images(c.dataset.target, target_seed(c), c.dataset.target_count);
  for (const auto& [n, img] : named) check_sizes(c.arch, img.height(), img.width(), n);

  RunDirectory run(run_path(f, c, "pseudo-label"), f.force);
  run.write_text("config.json", to_json_string(c, 2) + "\n");
  auto labels = generate_pseudo_labels(params, images_only(named),
                                       c.adaptation.pseudo_threshold, checkpoint);
  fs::create_directories(run.staging() / "masks");
  Json empty = Json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    save_mask(labels[i].hard, run.staging() / "masks" / (named[i].first + ".png"));
    if (labels[i].empty_disc()) empty.push_back(named[i].first);
  }
  Json summary{{"command", "pseudo-label"},
               {"source_checkpoint", checkpoint},
               {"threshold", c.adaptation.pseudo_threshold},
               {"images", labels.size()},
               {"empty_disc", empty}};
  run.write_text("summary.json", summary.dump(2) + "\n");
  run.commit();
  std::printf("%s\n", run.path().string().c_str());
  return 0;
}

int cmd_adapt(const CommonFlags& f, const TrainFlags& t, const std::string& checkpoint) {
  ExperimentConfig c = resolve_config(f);
  if (f.dataset) c.dataset.target = *f.dataset;
  if (f.count) c.dataset.target_count = *f.count;
  apply_adapt_flags(t, c);
  validate(c);
  ModelParams source = load_matching_checkpoint(checkpoint, c.arch);
  auto named = resolve_images(c.dataset.target, target_seed(c), c.dataset.target_count);
  for (const auto& [n, img] : named) check_sizes(c.arch, img.height(), img.width(), n);

  RunDirectory run(run_path(f, c, "adapt"), f.force);
  run.write_text("config.json", to_json_string(c, 2) + "\n");
  JsonlLog log(run.staging() / "log.jsonl");
  TrainOptions opts;
  // Labels, when the target has them, are only used for per-epoch reporting.
  if (resolves_to_labeled(c.dataset.target)) {
    opts.eval_set = resolve_labeled(c.dataset.target, target_seed(c), c.dataset.target_count);
  }
  opts.checkpoint_dir = run.staging() / "checkpoints";
  fs::create_directories(*opts.checkpoint_dir);
  opts.on_epoch = [&](const EpochRecord& e) {
    log.write(epoch_line("adapt", e));
    progress(f.verbose, e);
  };
  const auto images = images_only(named);
  auto labels = generate_pseudo_labels(source, images, c.adaptation.pseudo_threshold, checkpoint);
  TrainResult res = adapt(source, images, labels, c.adaptation, opts);
  for (const auto& w : res.record.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  save_checkpoint(res.params, run.staging() / "adapted.ckpt", "adapt");
  relativize(res.record);
  run.write_text("record.json", to_json_string(res.record, 2) + "\n");

  Json summary{{"command", "adapt"},
               {"checkpoint", "adapted.ckpt"},
               {"source_checkpoint", checkpoint},
               {"dataset", c.dataset.target},
               {"images", images.size()},
               {"alpha", c.adaptation.weights.alpha},
               {"beta", c.adaptation.weights.beta},
               {"warnings", res.record.warnings},
               {"wall_clock_seconds", res.record.wall_clock_seconds}};
  std::vector<std::pair<std::string, MetricsReport>> rows;
  if (res.record.initial_metrics) {
    summary["before"] = *res.record.initial_metrics;
    rows.emplace_back("w/o adaptation", *res.record.initial_metrics);
  }
  if (!res.record.epochs.empty() && res.record.epochs.back().metrics) {
    summary["after"] = *res.record.epochs.back().metrics;
    rows.emplace_back("MCDA", *res.record.epochs.back().metrics);
  }
  run.write_text("summary.json", summary.dump(2) + "\n");
  if (rows.size() == 2 && wants(c, "txt")) run.write_text("table.txt", format_metrics_table(rows));
  run.commit();
  std::printf("%s\n", (run.path() / "adapted.ckpt").string().c_str());
  return 0;
}

int cmd_evaluate(const CommonFlags& f, const std::string& checkpoint,
                 const std::optional<std::string>& baseline) {
  ExperimentConfig c = resolve_config(f);
  if (f.dataset) c.dataset.target = *f.dataset;
  if (f.count) c.dataset.target_count = *f.count;
  validate(c);
  if (!resolves_to_labeled(c.dataset.target) && fs::is_directory(c.dataset.target)) {
    throw ConfigError("evaluation set " + c.dataset.target +
                      " has no masks/ directory; evaluate needs labels");
  }
  auto data = resolve_labeled(c.dataset.target, target_seed(c), c.dataset.target_count);
  for (const auto& s : data) check_sizes(c.arch, s.image.height(), s.image.width(), s.name);

  std::vector<std::pair<std::string, std::string>> models;
  if (baseline) {
    models = {{"w/o adaptation", *baseline}, {"MCDA", checkpoint}};
  } else {
    models = {{fs::path(checkpoint).stem().string(), checkpoint}};
  }
  std::vector<std::pair<std::string, MetricsReport>> rows;
  Json doc{{"command", "evaluate"}, {"dataset", c.dataset.target}, {"rows", Json::array()}};
  for (const auto& [label, path] : models) {
    ModelParams p = load_matching_checkpoint(path, c.arch);
    rows.emplace_back(label, evaluate(p, data, c.adaptation.seg_threshold));
    doc["rows"].push_back(Json{{"label", label}, {"checkpoint", path}, {"metrics", rows.back().second}});
  }
  const std::string table = format_metrics_table(rows);

  RunDirectory run(run_path(f, c, "evaluate"), f.force);
  run.write_text("config.json", to_json_string(c, 2) + "\n");
  if (wants(c, "json")) run.write_text("metrics.json", doc.dump(2) + "\n");
  if (wants(c, "txt")) run.write_text("table.txt", table);
  run.commit();
  std::fputs(table.c_str(), stdout);
  return 0;
}

Json ablation_doc(const AblationTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back(Json{{"L_Tseg", r.losses.tseg},
                        {"L_bc", r.losses.bc},
                        {"L_fc", r.losses.fc},
                        {"metrics", r.metrics},
                        {"record", r.record}});
  }
  auto sweep = [](const std::vector<SweepPoint>& s) {
    Json a = Json::array();
    for (const auto& p : s) a.push_back(Json{{"value", p.value}, {"metrics", p.metrics}});
    return a;
  };
  return Json{{"baseline", t.baseline},
              {"rows", rows},
              {"alpha_sweep", sweep(t.alpha_sweep)},
              {"beta_sweep", sweep(t.beta_sweep)}};
}

int cmd_ablate(const CommonFlags& f, const TrainFlags& t, const std::string& checkpoint,
               const std::string& sweep_name) {
  ExperimentConfig c = resolve_config(f);
  if (f.dataset) c.dataset.target = *f.dataset;
  if (f.count) c.dataset.target_count = *f.count;
  apply_adapt_flags(t, c);
  validate(c);
  const Sweep sweep = parse_sweep(sweep_name);
  ModelParams source = load_matching_checkpoint(checkpoint, c.arch);
  auto data = resolve_labeled(c.dataset.target, target_seed(c), c.dataset.target_count);
  for (const auto& s : data) check_sizes(c.arch, s.image.height(), s.image.width(), s.name);

  RunDirectory run(run_path(f, c, "ablate"), f.force);
  run.write_text("config.json", to_json_string(c, 2) + "\n");
  TrainOptions opts;
  opts.verbose = f.verbose;
  AblationTable table = ablation_suite(source, data, c.adaptation, sweep, opts);

  const std::string text = format_ablation_table(table);
  if (wants(c, "json")) run.write_text("ablation.json", ablation_doc(table).dump(2) + "\n");
  if (wants(c, "txt")) run.write_text("ablation.txt", text);
  auto emit_sweep = [&](const std::string& stem, const std::string& symbol,
                        const std::vector<SweepPoint>& s) {
    if (s.empty()) return;
    if (wants(c, "txt")) run.write_text(stem + ".txt", format_sweep_table(symbol, s));
    if (wants(c, "svg")) run.write_text(stem + ".svg", svg_sweep_plot(symbol, s));
  };
  emit_sweep("alpha_sweep", "alpha", table.alpha_sweep);
  emit_sweep("beta_sweep", "beta", table.beta_sweep);
  run.commit();
  std::fputs(text.c_str(), stdout);
  if (!table.alpha_sweep.empty()) std::fputs(format_sweep_table("alpha", table.alpha_sweep).c_str(), stdout);
  if (!table.beta_sweep.empty()) std::fputs(format_sweep_table("beta", table.beta_sweep).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-free test-time adaptation for optic disc and cup segmentation"};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic dataset directory");
  s->add_option("--preset", synth.preset, "synthetic-source or synthetic-target");
  s->add_option("--domain", synth.domain, "JSON overrides of the preset's domain parameters");
  s->add_option("--count", synth.count, "Number of images");
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--out", synth.out, "Dataset directory")->required();
  s->add_flag("--no-masks", synth.no_masks, "Write images only");
  s->add_flag("--force", synth.force, "Use a fresh sibling when --out exists");

  CommonFlags common;
  TrainFlags train;
  std::string checkpoint;
  std::optional<std::string> baseline;
  std::string sweep = "none";

  auto* pre = app.add_subcommand("pretrain", "Train the source model");
  add_common(pre, common);
  pre->add_option("--ce-epochs", train.ce_epochs, "Epochs with BCE on the boundary head");
  pre->add_option("--dice-epochs", train.dice_epochs, "Epochs with Dice on the boundary head");
  pre->add_option("--lr", train.lr, "Adam learning rate");
  pre->add_option("--batch-size", train.batch_size, "Images per step");

  auto* pl = app.add_subcommand("pseudo-label", "Write frozen pseudo labels for the target set");
  add_common(pl, common);
  pl->add_option("--checkpoint", checkpoint, "Source checkpoint")->required();

  auto* ad = app.add_subcommand("adapt", "Adapt a source checkpoint to the target set");
  add_common(ad, common);
  add_adapt_flags(ad, train);
  ad->add_option("--checkpoint", checkpoint, "Source checkpoint")->required();

  auto* ev = app.add_subcommand("evaluate", "Dice and ASD on a labeled set");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "Checkpoint to score")->required();
  ev->add_option("--baseline", baseline, "Unadapted checkpoint for a paired comparison");

  auto* ab = app.add_subcommand("ablate", "Loss ablation table and weight sweeps");
  add_common(ab, common);
  add_adapt_flags(ab, train);
  ab->add_option("--checkpoint", checkpoint, "Source checkpoint")->required();
  ab->add_option("--sweep", sweep, "none, alpha, beta or both");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*pre) return cmd_pretrain(common, train);
    if (*pl) return cmd_pseudo_label(common, checkpoint);
    if (*ad) return cmd_adapt(common, train, checkpoint);
    if (*ev) return cmd_evaluate(common, checkpoint, baseline);
    if (*ab) return cmd_ablate(common, train, checkpoint, sweep);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const LoadError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
