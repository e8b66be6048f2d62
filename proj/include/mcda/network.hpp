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

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcda/planes.hpp"

namespace mcda {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Encoder-decoder shape. Each encoder level halves the resolution, so the
// bottleneck stride is 2^levels.
struct ArchConfig {
  std::string backbone = "unet-lite";
  int in_channels = 3;
  int num_classes = 2;
  std::vector<int> encoder_channels{16, 32, 64, 128};
  // Channel count of the feature tap (the decoder's last activation).
  int feature_channels = 32;
  std::string feature_tap = "decoder-penultimate";
  // Per-pixel layer norm over channels after every 3x3 conv, or "none".
  std::string norm = "none";
  int input_height = 64;
  int input_width = 64;

  int total_stride() const { return 1 << encoder_channels.size(); }
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

// Throws ShapeError when the input size is not divisible by the total stride
// or any field is out of range.
void validate_arch(const ArchConfig& arch);

// Flat parameter vector plus the architecture that interprets it. Copies are
// independent, so a copy is a snapshot.
struct ModelParams {
  ArchConfig arch;
  std::vector<float> values;

  ModelParams clone() const { return *this; }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Per-pixel sigmoid class probabilities, sigmoid boundary probabilities and
// the feature tap, all at input resolution.
struct ModelOutput {
  Planes seg_probs;
  Planes boundary_probs;
  Planes features;
};

// Upstream gradients with respect to the three outputs. Empty members count
// as zero.
struct OutputGrad {
  Planes seg_probs;
  Planes boundary_probs;
  Planes features;
};

class SegNet {
 public:
  explicit SegNet(ArchConfig arch);
  ~SegNet();
  SegNet(SegNet&&) noexcept;
  SegNet& operator=(SegNet&&) noexcept;

  const ArchConfig& arch() const { return arch_; }
  std::size_t parameter_count() const;

  // He-normal weights, zero biases.
  ModelParams init(std::uint64_t seed) const;

  // Activations kept for a backward pass.
  class Trace;
  struct TraceDeleter {
    void operator()(Trace* t) const;
  };
  using TracePtr = std::unique_ptr<Trace, TraceDeleter>;

  ModelOutput forward(const ModelParams& params, const Planes& image) const;
  ModelOutput forward(const ModelParams& params, const Planes& image,
                      TracePtr& trace) const;

  // Accumulates d(loss)/d(params) into `grads` (same length as
  // params.values).
  void backward(const ModelParams& params, const Trace& trace,
                const OutputGrad& grad, std::span<float> grads) const;

  // Half-width of the input window that can influence one output pixel.
  int receptive_radius() const;

  // Parameter index range of each head, for tests.
  std::pair<std::size_t, std::size_t> boundary_head_range() const;
  std::pair<std::size_t, std::size_t> seg_head_range() const;
  std::pair<std::size_t, std::size_t> encoder_range() const;

 private:
  struct Layout;
  ArchConfig arch_;
  std::unique_ptr<Layout> layout_;
};

void check_params(const SegNet& net, const ModelParams& params);

// Self-describing checkpoint: magic, format version, JSON architecture
// header, raw little-endian float32 parameters and a CRC32 trailer.
std::vector<std::uint8_t> serialize_params(const ModelParams& params,
                                           const std::string& note = "");
ModelParams deserialize_params(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path,
                     const std::string& note = "");
ModelParams load_checkpoint(const std::filesystem::path& path);

// ---- optimizer ----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig cfg, std::size_t n);
  void step(std::span<float> params, std::span<const float> grads);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace mcda
