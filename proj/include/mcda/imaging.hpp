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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcda/planes.hpp"

namespace mcda {

// Class channel layout shared by masks, boundaries and network outputs.
inline constexpr int kDisc = 0;
inline constexpr int kCup = 1;
inline constexpr int kNumClasses = 2;
inline constexpr int kImageChannels = 3;
inline constexpr int kMinImageSide = 8;

// Labelmap encoding of a two-class mask.
inline constexpr std::uint8_t kLabelBackground = 0;
inline constexpr std::uint8_t kLabelDisc = 128;
inline constexpr std::uint8_t kLabelCup = 255;

// Half-open pixel rectangle [top, bottom) x [left, right).
struct BoundingBox {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;

  int height() const { return bottom - top; }
  int width() const { return right - left; }
  bool valid_for(int image_height, int image_width) const {
    return 0 <= top && top < bottom && bottom <= image_height && 0 <= left &&
           left < right && right <= image_width;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Image (3 x H x W in [0,1]), class mask (2 x H x W binary) and the boundary
// labels derived from the mask.
struct AnnotatedSample {
  std::string name;
  Planes image;
  Planes mask;
  Planes boundary;
};

// Throws ShapeError / ConfigError when the invariants of the types fail.
void validate_raster(const Planes& image);
void validate_class_mask(const Planes& mask, bool require_nested = true);

// Builds a sample and derives its boundary channel.
AnnotatedSample make_sample(std::string name, Planes image, Planes mask);

// ---- file I/O ----

Planes load_image(const std::filesystem::path& path);
void save_image(const Planes& image, const std::filesystem::path& path);

// Labelmap {0, 128, 255} -> disc = value >= 128, cup = value == 255.
Planes decode_labelmap(const std::vector<std::uint8_t>& gray, int height,
                       int width);
std::vector<std::uint8_t> encode_labelmap(const Planes& mask);

Planes load_mask(const std::filesystem::path& path);
void save_mask(const Planes& mask, const std::filesystem::path& path);

AnnotatedSample load_sample(const std::filesystem::path& image_path,
                            const std::filesystem::path& mask_path);

// Dataset directory layout: images/*.png with optional masks/*.png sharing
// stems. Samples are returned in stem order.
bool dataset_has_masks(const std::filesystem::path& dir);
std::vector<AnnotatedSample> load_labeled_dataset(
    const std::filesystem::path& dir);
std::vector<std::pair<std::string, Planes>> load_unlabeled_images(
    const std::filesystem::path& dir);
void write_dataset(const std::vector<AnnotatedSample>& samples,
                   const std::filesystem::path& dir);

// ---- geometry ----

// Minimal rectangle around the nonzero pixels of one channel.
std::optional<BoundingBox> tight_bbox(const Planes& mask, int channel = 0);

Planes crop(const Planes& image, const BoundingBox& box);

// Bilinear resize with half-pixel centers and edge clamping.
Planes resize_bilinear(const Planes& image, int out_height, int out_width);

// Copy of `host` whose `host_box` region holds the `target_box` crop of
// `target`, bilinearly resized to the host box.
Planes replace_background(const Planes& target, const BoundingBox& target_box,
                          const Planes& host, const BoundingBox& host_box);

// ---- source-domain augmentation ----

struct AugmentConfig {
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double rotate_prob = 0.5;
  double max_rotate_deg = 20.0;
  double elastic_prob = 0.3;
  int elastic_grid = 4;
  double elastic_magnitude = 2.0;
  double contrast_prob = 0.5;
  double contrast_min = 0.7;
  double contrast_max = 1.3;
  double noise_prob = 0.5;
  double noise_sigma_max = 0.03;
  double erase_prob = 0.3;
  double erase_area_min = 0.02;
  double erase_area_max = 0.08;

  // All probabilities zero: every draw is the identity.
  static AugmentConfig none();
};

// One concrete draw of the random transforms.
struct AugmentParams {
  bool hflip = false;
  bool vflip = false;
  double rotate_deg = 0.0;
  // elastic_grid x elastic_grid control-point displacements in pixels, row
  // major; empty when elastic deformation is off.
  int elastic_grid = 0;
  std::vector<double> elastic_dy;
  std::vector<double> elastic_dx;
  double contrast = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::optional<BoundingBox> erase_box;
  std::array<double, 3> erase_fill{0.0, 0.0, 0.0};

  bool is_identity() const;
};

AugmentParams draw_augment(const AugmentConfig& config, int height, int width,
                           std::uint64_t seed);

// Geometric transforms hit image, mask and boundary alike; the mask is
// resampled nearest-neighbor and the boundary recomputed from it.
AnnotatedSample apply_augment(const AnnotatedSample& sample,
                              const AugmentParams& params);

AnnotatedSample source_augment(const AnnotatedSample& sample,
                               std::uint64_t seed,
                               const AugmentConfig& config = {});

// ---- synthetic fundus-like data ----

enum class BackgroundTexture { kFlat, kBlotches, kStripes };

struct DomainParams {
  std::string name = "custom";
  int size = 64;
  // Disc semi-axes in pixels.
  double disc_radius_min = 18.0;
  double disc_radius_max = 24.0;
  // Cup semi-axes as a fraction of the disc's.
  double cup_ratio_min = 0.45;
  double cup_ratio_max = 0.7;
  // Max offset of the disc center from the image center.
  double center_jitter = 4.0;
  // Max offset of the cup center from the disc center, as a disc fraction.
  double cup_offset = 0.15;
  std::array<double, 3> background_rgb{0.55, 0.25, 0.12};
  std::array<double, 3> disc_rgb{0.85, 0.6, 0.35};
  std::array<double, 3> cup_rgb{0.98, 0.88, 0.7};
  // Per-image jitter added uniformly in [-j, j] to each palette entry.
  double palette_jitter = 0.04;
  // Scales every color about the image mean.
  double contrast = 1.0;
  // Width (pixels) of the soft transition at each tissue edge.
  double edge_softness = 1.0;
  BackgroundTexture texture = BackgroundTexture::kBlotches;
  double texture_amplitude = 0.06;
  int vessel_count = 4;
  double vessel_darkness = 0.25;
  double blur_sigma = 0.6;
  double noise_sigma = 0.02;
};

DomainParams synthetic_source_preset();
DomainParams synthetic_target_preset();
// Accepts "synthetic-source" / "synthetic-target"; ConfigError otherwise.
DomainParams domain_preset(const std::string& name);
bool is_domain_preset(const std::string& name);

void validate_domain(const DomainParams& params);

// Sample `index` depends only on (params, seed, index).
AnnotatedSample synth_sample(const DomainParams& params, std::uint64_t seed,
                             std::size_t index);
std::vector<AnnotatedSample> synth_dataset(const DomainParams& params,
                                           std::size_t n, std::uint64_t seed);

// Separable Gaussian blur with replicate borders.
Planes gaussian_blur(const Planes& image, double sigma);

}  // namespace mcda
