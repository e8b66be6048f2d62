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

#include "mcda/imaging.hpp"

#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <random>

#include "mcda/errors.hpp"
#include "mcda/metrics.hpp"
#include "test_support.hpp"

namespace mcda {
namespace {

using testing::TempDir;

void write_gray_png(const std::filesystem::path& p, int h, int w,
                    const std::vector<std::uint8_t>& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = w;
  img.height = h;
  img.format = PNG_FORMAT_GRAY;
  ASSERT_TRUE(png_image_write_to_file(&img, p.c_str(), 0, bytes.data(), 0, nullptr));
}

Planes gray_image(int h, int w, double v) { return Planes(kImageChannels, h, w, v); }

TEST(Labelmap, AllZeroIsBackground) {
  const Planes m = decode_labelmap(std::vector<std::uint8_t>(64, 0), 8, 8);
  for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(Labelmap, CupBlockSetsCupAndDisc) {
  std::vector<std::uint8_t> g(64, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 3; x < 6; ++x) g[y * 8 + x] = 255;
  g[0] = 128;
  const Planes m = decode_labelmap(g, 8, 8);
  EXPECT_EQ(m.at(kDisc, 3, 4), 1.0);
  EXPECT_EQ(m.at(kCup, 3, 4), 1.0);
  EXPECT_EQ(m.at(kDisc, 0, 0), 1.0);
  EXPECT_EQ(m.at(kCup, 0, 0), 0.0);
  EXPECT_EQ(encode_labelmap(m), g);
}

TEST(Labelmap, UnexpectedValueNamesIt) {
  TempDir dir("labelmap");
  std::vector<std::uint8_t> g(64, 0);
  g[9] = 77;
  write_gray_png(dir / "m.png", 8, 8, g);
  save_image(gray_image(8, 8, 0.5), dir / "i.png");
  try {
    load_sample(dir / "i.png", dir / "m.png");
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("unexpected label value 77"), std::string::npos);
  }
}

TEST(LoadSample, DimensionMismatchIsLoadError) {
  TempDir dir("mismatch");
  save_image(gray_image(8, 8, 0.2), dir / "i.png");
  write_gray_png(dir / "m.png", 8, 10, std::vector<std::uint8_t>(80, 0));
  EXPECT_THROW(load_sample(dir / "i.png", dir / "m.png"), LoadError);
}

TEST(LoadSample, RoundTripThroughFiles) {
  const auto s = synth_dataset(synthetic_source_preset(), 1, 4).front();
  TempDir dir("roundtrip");
  save_image(s.image, dir / "i.png");
  save_mask(s.mask, dir / "m.png");
  const AnnotatedSample back = load_sample(dir / "i.png", dir / "m.png");
  EXPECT_EQ(back.mask, s.mask);
  EXPECT_EQ(back.boundary, s.boundary);
  for (std::size_t i = 0; i < s.image.size(); ++i) {
    EXPECT_NEAR(back.image.data()[i], s.image.data()[i], 0.5 / 255.0 + 1e-12);
  }
}

TEST(Augment, IdentityDrawLeavesSampleUnchanged) {
  const auto s = synth_dataset(synthetic_source_preset(), 1, 8).front();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AnnotatedSample out = source_augment(s, seed, AugmentConfig::none());
    EXPECT_EQ(out.image, s.image);
    EXPECT_EQ(out.mask, s.mask);
    EXPECT_EQ(out.boundary, s.boundary);
  }
}

TEST(Augment, HorizontalFlipIsAnInvolution) {
  const auto s = synth_dataset(synthetic_source_preset(), 1, 9).front();
  AugmentParams flip;
  flip.hflip = true;
  const AnnotatedSample once = apply_augment(s, flip);
  EXPECT_NE(once.mask, s.mask);
  const AnnotatedSample twice = apply_augment(once, flip);
  EXPECT_EQ(twice.image, s.image);
  for (int c = 0; c < kNumClasses; ++c) {
    EXPECT_EQ(dice_score(twice.mask.channel(c), s.mask.channel(c)), 1.0);
  }
}

TEST(Augment, NoiseOnlyLeavesLabels) {
  const auto s = synth_dataset(synthetic_source_preset(), 1, 10).front();
  AugmentParams noise;
  noise.noise_sigma = 0.03;
  noise.noise_seed = 99;
  const AnnotatedSample out = apply_augment(s, noise);
  EXPECT_NE(out.image, s.image);
  EXPECT_EQ(out.mask, s.mask);
  EXPECT_EQ(out.boundary, s.boundary);
}

TEST(Augment, DeterministicUnderSeed) {
  const auto s = synth_dataset(synthetic_source_preset(), 1, 12).front();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AnnotatedSample a = source_augment(s, seed);
    const AnnotatedSample b = source_augment(s, seed);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.mask, b.mask);
    validate_class_mask(a.mask);
  }
}

TEST(TightBbox, EmptyIsNone) { EXPECT_FALSE(tight_bbox(Planes(1, 9, 9)).has_value()); }

TEST(TightBbox, SinglePixel) {
  Planes m(1, 10, 10);
  m.at(0, 3, 5) = 1.0;
  const auto b = tight_bbox(m);
  ASSERT_TRUE(b);
  EXPECT_EQ(*b, (BoundingBox{3, 5, 4, 6}));
}

TEST(TightBbox, MatchesBruteForceScan) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Planes m(1, 12, 15);
    std::uniform_int_distribution<int> ry(0, 11), rx(0, 14);
    const int blobs = 1 + trial % 3;
    for (int k = 0; k < blobs; ++k) {
      const int y = ry(rng), x = rx(rng);
      for (int dy = 0; dy < 2 && y + dy < 12; ++dy)
        for (int dx = 0; dx < 2 && x + dx < 15; ++dx) m.at(0, y + dy, x + dx) = 1.0;
    }
    int top = 99, left = 99, bottom = -1, right = -1;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 15; ++x)
        if (m.at(0, y, x) != 0.0) {
          top = std::min(top, y);
          left = std::min(left, x);
          bottom = std::max(bottom, y + 1);
          right = std::max(right, x + 1);
        }
    EXPECT_EQ(*tight_bbox(m), (BoundingBox{top, left, bottom, right}));
  }
}

TEST(ReplaceBackground, FullHostBoxIsEntirelyTheResizedCrop) {
  std::mt19937_64 rng(2);
  const Planes target = testing::random_planes(rng, 3, 16, 16);
  const Planes host = testing::random_planes(rng, 3, 12, 12);
  const BoundingBox tbox{2, 3, 10, 9};
  const Planes out = replace_background(target, tbox, host, BoundingBox{0, 0, 12, 12});
  EXPECT_EQ(out, resize_bilinear(crop(target, tbox), 12, 12));
}

TEST(ReplaceBackground, SameSizeCropIsPastedVerbatimAndHostKept) {
  std::mt19937_64 rng(3);
  const Planes target = testing::random_planes(rng, 3, 16, 16);
  const Planes host = testing::random_planes(rng, 3, 16, 16);
  const BoundingBox tbox{1, 2, 6, 9}, hbox{8, 5, 13, 12};
  const Planes out = replace_background(target, tbox, host, hbox);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const bool inside = y >= hbox.top && y < hbox.bottom && x >= hbox.left && x < hbox.right;
        const double want = inside ? target.at(c, tbox.top + y - hbox.top, tbox.left + x - hbox.left)
                                   : host.at(c, y, x);
        EXPECT_EQ(out.at(c, y, x), want);
      }
}

// Half-pixel-center bilinear interpolation written out directly.
double bilinear_oracle(const Planes& src, int c, int oy, int ox, int out_h, int out_w) {
  const double sy = std::clamp((oy + 0.5) * src.height() / out_h - 0.5, 0.0, src.height() - 1.0);
  const double sx = std::clamp((ox + 0.5) * src.width() / out_w - 0.5, 0.0, src.width() - 1.0);
  const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
  const int y1 = std::min(y0 + 1, src.height() - 1), x1 = std::min(x0 + 1, src.width() - 1);
  const double wy = sy - y0, wx = sx - x0;
  return (1 - wy) * ((1 - wx) * src.at(c, y0, x0) + wx * src.at(c, y0, x1)) +
         wy * ((1 - wx) * src.at(c, y1, x0) + wx * src.at(c, y1, x1));
}

TEST(ReplaceBackground, CheckerboardUpscaleMatchesBilinearOracle) {
  Planes target(3, 8, 8);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) target.at(c, y, x) = (y + x) % 2 ? 1.0 : 0.0;
  const Planes host(3, 16, 16, 0.3);
  const BoundingBox tbox{2, 2, 6, 6}, hbox{4, 4, 12, 12};
  const Planes out = replace_background(target, tbox, host, hbox);
  const Planes cropped = crop(target, tbox);
  const int probes[9][2] = {{0, 0}, {0, 7}, {7, 0}, {7, 7}, {3, 4}, {1, 2}, {5, 6}, {2, 5}, {6, 1}};
  for (const auto& p : probes) {
    const double want = bilinear_oracle(cropped, 1, p[0], p[1], 8, 8);
    EXPECT_NEAR(out.at(1, hbox.top + p[0], hbox.left + p[1]), want, 1e-12);
  }
}

TEST(ReplaceBackground, OnePixelBoxReplicates) {
  std::mt19937_64 rng(4);
  const Planes target = testing::random_planes(rng, 3, 8, 8);
  const Planes host(3, 8, 8, 0.0);
  const Planes out = replace_background(target, {3, 3, 4, 4}, host, {1, 1, 5, 6});
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 6; ++x) EXPECT_EQ(out.at(2, y, x), target.at(2, 3, 3));
}

TEST(Synth, CupInsideDiscAndDeterministic) {
  for (const auto& preset : {synthetic_source_preset(), synthetic_target_preset()}) {
    const auto a = synth_dataset(preset, 12, 42);
    const auto b = synth_dataset(preset, 12, 42);
    ASSERT_EQ(a.size(), 12u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].image, b[i].image);
      EXPECT_EQ(a[i].mask, b[i].mask);
      EXPECT_NO_THROW(validate_class_mask(a[i].mask, true));
      EXPECT_EQ(a[i].image.height(), 64);
      EXPECT_TRUE(tight_bbox(a[i].mask, kCup).has_value());
    }
  }
  EXPECT_TRUE(synth_dataset(synthetic_source_preset(), 0, 1).empty());
}

TEST(Synth, PresetsDiffer) {
  const DomainParams s = synthetic_source_preset(), t = synthetic_target_preset();
  EXPECT_NE(s.background_rgb, t.background_rgb);
  EXPECT_NE(s.contrast, t.contrast);
  EXPECT_NE(s.blur_sigma, t.blur_sigma);
  EXPECT_NE(s.texture, t.texture);
  EXPECT_EQ(domain_preset("synthetic-target").name, "synthetic-target");
  EXPECT_THROW(domain_preset("synthetic-other"), ConfigError);
}

TEST(Synth, RadiusBeyondImageIsParameterError) {
  DomainParams p = synthetic_source_preset();
  p.disc_radius_max = 40;
  EXPECT_THROW(synth_dataset(p, 1, 0), ConfigError);
}

TEST(Dataset, WriteAndReload) {
  TempDir dir("dataset");
  const auto samples = synth_dataset(synthetic_target_preset(), 3, 5);
  write_dataset(samples, dir.path());
  EXPECT_TRUE(dataset_has_masks(dir.path()));
  const auto back = load_labeled_dataset(dir.path());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].name, samples[i].name);
    EXPECT_EQ(back[i].mask, samples[i].mask);
  }
  EXPECT_EQ(load_unlabeled_images(dir.path()).size(), 3u);
}

}  // namespace
}  // namespace mcda
