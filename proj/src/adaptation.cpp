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

#include "mcda/adaptation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "mcda/serialization.hpp"

namespace mcda {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

bool all_finite(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

Planes scaled(const Planes& p, double k) {
  Planes out = p;
  for (double& v : out.data()) v *= k;
  return out;
}

void add_scaled(Planes& acc, const Planes& p, double k) {
  if (acc.empty()) {
    acc = scaled(p, k);
    return;
  }
  require_same_shape(acc, p, "gradient accumulation");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += k * p.data()[i];
}

std::string checkpoint_name(const std::string& stem, int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_epoch%04d.ckpt", stem.c_str(), epoch);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

bool PseudoLabel::empty_disc() const { return !tight_bbox(hard, kDisc).has_value(); }

void validate(const PretrainConfig& c) {
  if (c.schedule.ce_epochs < 0 || c.schedule.dice_epochs < 0) {
    throw ConfigError("schedule epochs must be >= 0");
  }
  if (c.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(c.optimizer.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

void validate(const AdaptationConfig& c) {
  validate_weights(c.weights);
  if (c.optimizer != "adam") {
    throw ConfigError("unsupported optimizer '" + c.optimizer + "' (only adam)");
  }
  if (!(c.adam.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (c.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(c.seg_threshold > 0.0 && c.seg_threshold < 1.0) ||
      !(c.pseudo_threshold > 0.0 && c.pseudo_threshold < 1.0)) {
    throw ConfigError("thresholds must lie in (0,1)");
  }
}

TrainResult pretrain(const std::vector<AnnotatedSample>& source_dataset,
                     const ArchConfig& arch, const PretrainConfig& config,
                     const TrainOptions& options) {
  validate(config);
  if (source_dataset.empty()) throw ConfigError("pretrain needs a non-empty dataset");
  SegNet net(arch);
  for (const auto& s : source_dataset) {
    if (s.image.height() != arch.input_height || s.image.width() != arch.input_width) {
      throw ShapeError("sample " + s.name + " is " + s.image.shape_string() +
                       " but the network expects " + std::to_string(arch.input_height) +
                       "x" + std::to_string(arch.input_width));
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result{net.init(config.seed), {}};
  result.record.kind = "pretrain";
  result.record.config_json = to_json_string(config);
  ModelParams& params = result.params;
  Adam adam(config.optimizer, params.values.size());
  std::vector<float> grads(params.values.size());
  std::mt19937_64 rng(mix_seed(config.seed, 0x5eed, 1));

  const std::size_t N = source_dataset.size();
  const std::size_t B = std::min<std::size_t>(config.batch_size, N);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  const int total_epochs = config.schedule.total();

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double seg_sum = 0.0, bnd_sum = 0.0;
    BoundaryLossKind kind = BoundaryLossKind::kBce;
    for (std::size_t start = 0, batch = 0; start < N; start += B, ++batch) {
      const std::size_t end = std::min(N, start + B);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(grads.begin(), grads.end(), 0.f);
      double batch_seg = 0.0, batch_bnd = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const AnnotatedSample sample =
            config.augment ? source_augment(source_dataset[idx],
                                            mix_seed(config.seed, epoch, idx),
                                            config.augment_config)
                           : source_dataset[idx];
        SegNet::TracePtr trace;
        const ModelOutput out = net.forward(params, sample.image, trace);
        SourceLoss loss = source_loss(out, sample, epoch, config.schedule);
        kind = loss.boundary_kind;
        batch_seg += loss.seg * inv_b;
        batch_bnd += loss.boundary * inv_b;
        OutputGrad g{scaled(loss.grad.seg_probs, inv_b),
                     scaled(loss.grad.boundary_probs, inv_b), {}};
        net.backward(params, *trace, g, grads);
      }
      if (!all_finite({batch_seg, batch_bnd})) {
        throw TrainingError("non-finite source loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch) + " (seg=" +
                            std::to_string(batch_seg) + ", boundary=" +
                            std::to_string(batch_bnd) + ")");
      }
      adam.step(params.values, grads);
      seg_sum += batch_seg * static_cast<double>(end - start);
      bnd_sum += batch_bnd * static_cast<double>(end - start);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.boundary_kind = to_string(kind);
    rec.losses["seg"] = seg_sum / static_cast<double>(N);
    rec.losses["boundary"] = bnd_sum / static_cast<double>(N);
    rec.losses["total"] = rec.losses["seg"] + rec.losses["boundary"];
    if (!options.eval_set.empty()) rec.metrics = evaluate(params, options.eval_set);
    const bool last = epoch + 1 == total_epochs;
    if (options.checkpoint_dir &&
        (last || (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0))) {
      const auto path = *options.checkpoint_dir / checkpoint_name("source", epoch + 1);
      save_checkpoint(params, path, "pretrain epoch " + std::to_string(epoch + 1));
      rec.checkpoint = path.filename().string();
      result.record.checkpoints.push_back(rec.checkpoint);
    }
    if (options.verbose) {
      std::fprintf(stderr, "[pretrain] epoch %d/%d %s seg=%.4f boundary=%.4f%s\n", epoch + 1,
                   total_epochs, rec.boundary_kind.c_str(), rec.losses["seg"],
                   rec.losses["boundary"],
                   rec.metrics ? (" dice=" + std::to_string(rec.metrics->avg_dice())).c_str()
                               : "");
    }
    if (options.on_epoch) options.on_epoch(rec);
    result.record.epochs.push_back(std::move(rec));
  }
  result.record.wall_clock_seconds = seconds_since(t0);
  return result;
}

std::vector<PseudoLabel> generate_pseudo_labels(const ModelParams& source_params,
                                                const std::vector<Planes>& test_images,
                                                double threshold,
                                                const std::string& source_id) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  SegNet net(source_params.arch);
  std::vector<PseudoLabel> out;
  out.reserve(test_images.size());
  for (const auto& img : test_images) {
    PseudoLabel p;
    p.soft = net.forward(source_params, img).seg_probs;
    p.hard = Planes(p.soft.channels(), p.soft.height(), p.soft.width());
    for (std::size_t i = 0; i < p.soft.size(); ++i) {
      p.hard.data()[i] = p.soft.data()[i] > threshold ? 1.0 : 0.0;
    }
    p.source = source_id;
    out.push_back(std::move(p));
  }
  return out;
}

TrainResult adapt(const ModelParams& source_params, const std::vector<Planes>& test_images,
                  const std::vector<PseudoLabel>& pseudo_labels, const AdaptationConfig& config,
                  const TrainOptions& options) {
  validate(config);
  if (test_images.size() != pseudo_labels.size()) {
    throw ConfigError("one pseudo label is required per test image");
  }
  if (test_images.empty()) throw ConfigError("adapt needs at least one test image");
  SegNet net(source_params.arch);
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result{source_params.clone(), {}};
  RunRecord& record = result.record;
  record.kind = "adapt";
  record.config_json = to_json_string(config);
  ModelParams& params = result.params;

  const std::size_t N = test_images.size();
  std::size_t B = static_cast<std::size_t>(config.batch_size);
  if (B > N) {
    record.warnings.push_back("batch_size " + std::to_string(B) + " exceeds test-set size " +
                              std::to_string(N) + "; clamped");
    if (options.verbose) std::fprintf(stderr, "warning: %s\n", record.warnings.back().c_str());
    B = N;
  }

  std::vector<std::optional<BoundingBox>> boxes(N);
  for (std::size_t i = 0; i < N; ++i) boxes[i] = tight_bbox(pseudo_labels[i].hard, kDisc);

  if (!options.eval_set.empty()) record.initial_metrics = evaluate(params, options.eval_set);

  Adam adam(config.adam, params.values.size());
  std::vector<float> grads(params.values.size());
  std::mt19937_64 rng(mix_seed(config.seed, 0xada7, 2));
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  const double alpha = config.weights.alpha, beta = config.weights.beta;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double tseg_sum = 0.0, bc_sum = 0.0, fc_sum = 0.0;
    std::size_t swapped_count = 0;
    for (std::size_t start = 0, batch = 0; start < N; start += B, ++batch) {
      const std::size_t end = std::min(N, start + B);
      const std::size_t bsz = end - start;
      const double inv_b = 1.0 / static_cast<double>(bsz);
      // Host partner per batch slot, excluding self unless the batch is 1.
      std::vector<std::size_t> partner(bsz);
      for (std::size_t k = 0; k < bsz; ++k) {
        if (bsz == 1) {
          partner[k] = k;
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, bsz - 2);
          const std::size_t r = pick(rng);
          partner[k] = r >= k ? r + 1 : r;
        }
      }
      std::fill(grads.begin(), grads.end(), 0.f);
      double b_tseg = 0.0, b_bc = 0.0, b_fc = 0.0;
      for (std::size_t k = 0; k < bsz; ++k) {
        const std::size_t i = order[start + k];
        const std::size_t j = order[start + partner[k]];
        const PseudoLabel& pl = pseudo_labels[i];
        const Planes& target = config.soft_pseudo_labels ? pl.soft : pl.hard;

        SegNet::TracePtr trace;
        const ModelOutput out = net.forward(params, test_images[i], trace);
        const LossGrad tseg =
            pseudo_label_loss_grad(out.seg_probs, target, config.tseg_positive_only);
        const BoundaryConsistency bc =
            boundary_consistency_loss_grad(out.boundary_probs, out.seg_probs);

        FeatureConsistency fc;
        SegNet::TracePtr trace_new;
        if (i != j && boxes[i] && boxes[j]) {
          const Planes swapped =
              replace_background(test_images[i], *boxes[i], test_images[j], *boxes[j]);
          const ModelOutput out_new = net.forward(params, swapped, trace_new);
          fc = feature_consistency_loss_grad(out, out_new, config.seg_threshold);
          ++swapped_count;
        }

        b_tseg += tseg.value * inv_b;
        b_bc += bc.value * inv_b;
        b_fc += fc.value * inv_b;

        OutputGrad g;
        g.seg_probs = scaled(tseg.grad, inv_b);
        if (alpha != 0.0) {
          add_scaled(g.seg_probs, bc.grad_seg, alpha * inv_b);
          g.boundary_probs = scaled(bc.grad_boundary, alpha * inv_b);
        }
        if (beta != 0.0 && trace_new) g.features = scaled(fc.grad_features_orig, beta * inv_b);
        net.backward(params, *trace, g, grads);
        if (beta != 0.0 && trace_new) {
          OutputGrad g_new;
          g_new.features = scaled(fc.grad_features_swapped, beta * inv_b);
          net.backward(params, *trace_new, g_new, grads);
        }
      }
      const double b_total = total_adaptation_loss({b_tseg, b_bc, b_fc}, config.weights);
      if (!all_finite({b_tseg, b_bc, b_fc, b_total})) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "non-finite adaptation loss at epoch %d, batch %zu: L_Tseg=%g L_bc=%g "
                      "L_fc=%g total=%g",
                      epoch, batch, b_tseg, b_bc, b_fc, b_total);
        throw TrainingError(buf);
      }
      adam.step(params.values, grads);
      tseg_sum += b_tseg * static_cast<double>(bsz);
      bc_sum += b_bc * static_cast<double>(bsz);
      fc_sum += b_fc * static_cast<double>(bsz);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    const double n = static_cast<double>(N);
    rec.losses["L_Tseg"] = tseg_sum / n;
    rec.losses["L_bc"] = bc_sum / n;
    rec.losses["L_fc"] = fc_sum / n;
    rec.losses["alpha_L_bc"] = alpha * bc_sum / n;
    rec.losses["beta_L_fc"] = beta * fc_sum / n;
    rec.losses["total"] =
        total_adaptation_loss({tseg_sum / n, bc_sum / n, fc_sum / n}, config.weights);
    rec.losses["swapped_pairs"] = static_cast<double>(swapped_count);
    if (!options.eval_set.empty()) rec.metrics = evaluate(params, options.eval_set);
    if (options.checkpoint_dir) {
      const auto path = *options.checkpoint_dir / checkpoint_name("adapted", epoch + 1);
      save_checkpoint(params, path, "adapt epoch " + std::to_string(epoch + 1));
      rec.checkpoint = path.filename().string();
      record.checkpoints.push_back(rec.checkpoint);
    }
    if (options.verbose) {
      std::fprintf(stderr, "[adapt] epoch %d/%d L_Tseg=%.4f L_bc=%.5f L_fc=%.4f total=%.4f%s\n",
                   epoch + 1, config.epochs, rec.losses["L_Tseg"], rec.losses["L_bc"],
                   rec.losses["L_fc"], rec.losses["total"],
                   rec.metrics ? (" dice=" + std::to_string(rec.metrics->avg_dice())).c_str()
                               : "");
    }
    if (options.on_epoch) options.on_epoch(rec);
    record.epochs.push_back(std::move(rec));
  }
  record.wall_clock_seconds = seconds_since(t0);
  return result;
}

Sweep parse_sweep(const std::string& name) {
  if (name == "none") return Sweep::kNone;
  if (name == "alpha") return Sweep::kAlpha;
  if (name == "beta") return Sweep::kBeta;
  if (name == "both") return Sweep::kBoth;
  throw ConfigError("unknown sweep '" + name + "' (none, alpha, beta, both)");
}

AblationTable ablation_suite(const ModelParams& source_params,
                             const std::vector<AnnotatedSample>& test_set,
                             const AdaptationConfig& config, Sweep sweep,
                             const TrainOptions& options) {
  validate(config);
  std::vector<Planes> images;
  for (const auto& s : test_set) images.push_back(s.image);
  const auto pseudo = generate_pseudo_labels(source_params, images, config.pseudo_threshold);

  TrainOptions run_opts;
  run_opts.verbose = options.verbose;

  AblationTable table;
  table.baseline = evaluate(source_params, test_set);
  const LossSelection combos[] = {
      {true, false, false}, {true, true, false}, {true, false, true}, {true, true, true}};
  for (const auto& sel : combos) {
    AdaptationConfig c = config;
    if (!sel.bc) c.weights.alpha = 0.0;
    if (!sel.fc) c.weights.beta = 0.0;
    TrainResult r = adapt(source_params, images, pseudo, c, run_opts);
    table.rows.push_back({sel, evaluate(r.params, test_set), std::move(r.record)});
  }
  auto run_sweep = [&](const std::vector<double>& grid, bool is_alpha) {
    std::vector<SweepPoint> pts;
    for (double v : grid) {
      AdaptationConfig c = config;
      c.weights.alpha = is_alpha ? v : 0.0;
      c.weights.beta = is_alpha ? 0.0 : v;
      TrainResult r = adapt(source_params, images, pseudo, c, run_opts);
      pts.push_back({v, evaluate(r.params, test_set)});
    }
    return pts;
  };
  if (sweep == Sweep::kAlpha || sweep == Sweep::kBoth) table.alpha_sweep = run_sweep(kAlphaGrid, true);
  if (sweep == Sweep::kBeta || sweep == Sweep::kBoth) table.beta_sweep = run_sweep(kBetaGrid, false);
  return table;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_ablation_table(const AblationTable& t) {
  std::ostringstream os;
  const char* yes = "yes";
  const char* no = "no";
  os << "L_Tseg | L_bc | L_fc | " << pad("Optic disc segmentation", 33) << " | "
     << pad("Optic cup segmentation", 33) << " | Avg\n";
  os << "       |      |      | " << pad("Dice [%]", 15) << " | " << pad("ASD (pixel)", 15)
     << " | " << pad("Dice [%]", 15) << " | " << pad("ASD (pixel)", 15) << " | "
     << pad("Dice", 8) << " | ASD\n";
  os << std::string(140, '-') << "\n";
  for (const auto& row : t.rows) {
    os << pad(row.losses.tseg ? yes : no, 6) << " | " << pad(row.losses.bc ? yes : no, 4)
       << " | " << pad(row.losses.fc ? yes : no, 4) << " | ";
    for (int c : {kDisc, kCup}) {
      const auto& m = row.metrics.classes[c];
      os << pad(fmt("%6.2f", m.dice_mean) + " +- " + fmt("%5.2f", m.dice_std), 15) << " | "
         << pad(fmt("%6.2f", m.asd_mean) + " +- " + fmt("%5.2f", m.asd_std), 15) << " | ";
    }
    os << pad(fmt("%8.2f", row.metrics.avg_dice()), 8) << " | "
       << fmt("%.2f", row.metrics.avg_asd()) << "\n";
  }
  return os.str();
}

std::string format_sweep_table(const std::string& symbol, const std::vector<SweepPoint>& sweep) {
  std::ostringstream os;
  os << pad(symbol, 15);
  for (const auto& p : sweep) os << " | " << pad(fmt("%g", p.value), 6);
  os << "\n" << std::string(15 + sweep.size() * 9, '-') << "\n";
  auto line = [&](const std::string& label, auto get) {
    os << pad(label, 15);
    for (const auto& p : sweep) os << " | " << pad(fmt("%6.2f", get(p.metrics)), 6);
    os << "\n";
  };
  line("Optic disc[%]", [](const MetricsReport& m) { return m.classes[kDisc].dice_mean; });
  line("Optic cup[%]", [](const MetricsReport& m) { return m.classes[kCup].dice_mean; });
  line("Avg[%]", [](const MetricsReport& m) { return m.avg_dice(); });
  return os.str();
}

}  // namespace mcda
