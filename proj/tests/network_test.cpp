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

#include "mcda/network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "mcda/errors.hpp"
#include "mcda/imaging.hpp"
#include "test_support.hpp"

namespace mcda {
namespace {

using testing::random_planes;
using testing::TempDir;

ArchConfig arch_of(int h, int w) {
  ArchConfig a;
  a.input_height = h;
  a.input_width = w;
  return a;
}

TEST(SegNet, OutputContract) {
  SegNet net(ArchConfig{});
  const ModelParams p = net.init(1);
  EXPECT_EQ(p.values.size(), net.parameter_count());
  std::mt19937_64 rng(1);
  const Planes img = random_planes(rng, 3, 64, 64);
  const ModelOutput out = net.forward(p, img);
  EXPECT_EQ(out.seg_probs.channels(), 2);
  EXPECT_EQ(out.boundary_probs.channels(), 2);
  EXPECT_EQ(out.features.channels(), ArchConfig{}.feature_channels);
  for (const Planes* o : {&out.seg_probs, &out.boundary_probs, &out.features}) {
    EXPECT_EQ(o->height(), 64);
    EXPECT_EQ(o->width(), 64);
  }
  for (double v : out.seg_probs.data()) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  const ModelOutput again = net.forward(p, img);
  EXPECT_EQ(again.seg_probs, out.seg_probs);
  EXPECT_EQ(again.features, out.features);
}

TEST(SegNet, IndivisibleSizeFailsAtConstruction) {
  EXPECT_THROW(SegNet(arch_of(60, 64)), ShapeError);
  EXPECT_THROW(SegNet(arch_of(64, 72)), ShapeError);
  EXPECT_NO_THROW(SegNet(arch_of(48, 80)));
}

TEST(SegNet, WrongImageSizeIsShapeError) {
  SegNet net(ArchConfig{});
  EXPECT_THROW(net.forward(net.init(0), Planes(3, 32, 32)), ShapeError);
}

TEST(SegNet, ReceptiveFieldProbe) {
  const ArchConfig arch = arch_of(224, 224);
  SegNet net(arch);
  const ModelParams p = net.init(3);
  const int r = net.receptive_radius();
  ASSERT_LT(10 + r + 1, 224);
  std::mt19937_64 rng(3);
  const Planes a = random_planes(rng, 3, 224, 224);
  Planes far = a, near = a;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224; ++x)
        if (std::max(std::abs(y - 10), std::abs(x - 10)) > r) far.at(c, y, x) = 1.0 - a.at(c, y, x);
  near.at(0, 14, 14) = 1.0 - a.at(0, 14, 14);
  const ModelOutput oa = net.forward(p, a), of = net.forward(p, far), on = net.forward(p, near);
  bool near_changed = false;
  for (int c = 0; c < oa.features.channels(); ++c) {
    EXPECT_EQ(oa.features.at(c, 10, 10), of.features.at(c, 10, 10)) << "channel " << c;
    near_changed |= oa.features.at(c, 10, 10) != on.features.at(c, 10, 10);
  }
  for (int c = 0; c < 2; ++c) EXPECT_EQ(oa.seg_probs.at(c, 10, 10), of.seg_probs.at(c, 10, 10));
  EXPECT_TRUE(near_changed);
}

TEST(SegNet, SegmentationIgnoresBoundaryHead) {
  SegNet net(ArchConfig{});
  ModelParams p = net.init(4);
  std::mt19937_64 rng(4);
  const Planes img = random_planes(rng, 3, 64, 64);
  const ModelOutput before = net.forward(p, img);
  const auto [lo, hi] = net.boundary_head_range();
  ASSERT_LT(lo, hi);
  for (std::size_t i = lo; i < hi; ++i) p.values[i] = 0.f;
  const ModelOutput after = net.forward(p, img);
  EXPECT_EQ(after.seg_probs, before.seg_probs);
  EXPECT_EQ(after.features, before.features);
  EXPECT_NE(after.boundary_probs, before.boundary_probs);
}

TEST(SegNet, EveryOutputReachesTheEncoder) {
  SegNet net(ArchConfig{});
  const ModelParams p = net.init(5);
  std::mt19937_64 rng(5);
  const Planes img = random_planes(rng, 3, 64, 64);
  SegNet::TracePtr trace;
  const ModelOutput out = net.forward(p, img, trace);
  const auto [lo, hi] = net.encoder_range();
  for (int which = 0; which < 3; ++which) {
    OutputGrad g;
    const Planes& o = which == 0 ? out.seg_probs : which == 1 ? out.boundary_probs : out.features;
    Planes up = random_planes(rng, o.channels(), o.height(), o.width(), -1, 1);
    (which == 0 ? g.seg_probs : which == 1 ? g.boundary_probs : g.features) = up;
    std::vector<float> grads(p.values.size(), 0.f);
    net.backward(p, *trace, g, grads);
    double norm = 0;
    for (std::size_t i = lo; i < hi; ++i) norm += std::abs(grads[i]);
    EXPECT_GT(norm, 0.0) << "output " << which;
  }
}

// Float32 network: the directional derivative is compared loosely.
TEST(SegNet, BackwardMatchesDirectionalDerivative) {
  SegNet net(ArchConfig{});
  ModelParams p = net.init(6);
  std::mt19937_64 rng(6);
  const Planes img = random_planes(rng, 3, 64, 64);
  const Planes ws = random_planes(rng, 2, 64, 64, -1, 1);
  const Planes wf = random_planes(rng, ArchConfig{}.feature_channels, 64, 64, -1, 1);
  auto objective = [&](const ModelParams& q) {
    const ModelOutput o = net.forward(q, img);
    double acc = 0;
    for (std::size_t i = 0; i < ws.size(); ++i) acc += ws.data()[i] * o.seg_probs.data()[i];
    for (std::size_t i = 0; i < wf.size(); ++i) acc += 1e-2 * wf.data()[i] * o.features.data()[i];
    return acc;
  };
  SegNet::TracePtr trace;
  net.forward(p, img, trace);
  OutputGrad g{ws, {}, wf};
  for (auto& v : g.features.data()) v *= 1e-2;
  std::vector<float> grads(p.values.size(), 0.f);
  net.backward(p, *trace, g, grads);

  std::normal_distribution<double> n(0, 1);
  std::vector<double> dir(p.values.size());
  double norm = 0;
  for (auto& d : dir) {
    d = n(rng);
    norm += d * d;
  }
  double dot = 0;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    dir[i] /= std::sqrt(norm);
    dot += dir[i] * grads[i];
  }
  // Large enough to swamp float rounding, small enough to rarely cross a
  // ReLU kink.
  const double h = 3e-3;
  ModelParams up = p, down = p;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    up.values[i] += static_cast<float>(h * dir[i]);
    down.values[i] -= static_cast<float>(h * dir[i]);
  }
  const double numeric = (objective(up) - objective(down)) / (2 * h);
  EXPECT_LT(testing::rel_error(dot, numeric), 1e-2) << dot << " vs " << numeric;
}

TEST(Checkpoint, RoundTripIsExact) {
  SegNet net(ArchConfig{});
  const ModelParams p = net.init(7);
  TempDir dir("ckpt");
  save_checkpoint(p, dir / "a.ckpt", "note");
  const ModelParams back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back, p);
  std::mt19937_64 rng(7);
  const Planes img = random_planes(rng, 3, 64, 64);
  EXPECT_EQ(net.forward(back, img).seg_probs, net.forward(p, img).seg_probs);
}

TEST(Checkpoint, CorruptionIsLoadError) {
  SegNet net(ArchConfig{});
  const std::vector<std::uint8_t> good = serialize_params(net.init(8));
  EXPECT_EQ(deserialize_params(good), net.init(8));

  auto expect_error = [](std::vector<std::uint8_t> bytes, const std::string& needle) {
    try {
      deserialize_params(bytes);
      ADD_FAILURE() << "expected LoadError containing " << needle;
    } catch (const LoadError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  expect_error(flipped, "checksum");
  auto version = good;
  version[8] = static_cast<std::uint8_t>(kCheckpointVersion + 1);
  expect_error(version, "version");
  auto magic = good;
  magic[0] = 'X';
  expect_error(magic, "magic");
  expect_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 100), "truncated");
  auto extra = good;
  extra.push_back(0);
  expect_error(extra, "trailing");
}

TEST(Checkpoint, MissingFileIsLoadError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), LoadError);
}

TEST(Checkpoint, ParameterCountMismatch) {
  SegNet net(ArchConfig{});
  ModelParams p = net.init(9);
  p.values.pop_back();
  EXPECT_THROW(check_params(net, p), ConfigError);
}

TEST(Adam, ZeroLearningRateLeavesParams) {
  std::vector<float> params{1.f, -2.f, 3.f}, grads{0.5f, 0.1f, -4.f};
  const auto before = params;
  AdamConfig cfg;
  cfg.lr = 0.0;
  Adam adam(cfg, 3);
  adam.step(params, grads);
  EXPECT_EQ(params, before);
}

TEST(Adam, FirstStepMovesByLr) {
  std::vector<float> params{1.f, -2.f}, grads{0.5f, -3.f};
  Adam adam(AdamConfig{}, 2);
  adam.step(params, grads);
  EXPECT_NEAR(params[0], 1.f - 1e-3f, 1e-6);
  EXPECT_NEAR(params[1], -2.f + 1e-3f, 1e-6);
}

}  // namespace
}  // namespace mcda
