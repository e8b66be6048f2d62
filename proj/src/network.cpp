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

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>

namespace mcda {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(std::size_t(c_) * h_ * w_, 0.f) {}
  std::size_t plane() const { return std::size_t(h) * w; }
  float* ch(int i) { return v.data() + i * plane(); }
  const float* ch(int i) const { return v.data() + i * plane(); }
};

// A convolution, optionally followed by a per-pixel layer norm over its
// output channels (gamma, beta stored after the bias).
struct ConvSpec {
  int in = 0, out = 0, k = 3, stride = 1;
  std::size_t w_off = 0, b_off = 0;
  bool norm = false;
  std::size_t fan_in() const { return std::size_t(in) * k * k; }
  std::size_t gamma_off() const { return b_off + out; }
  std::size_t beta_off() const { return b_off + 2 * out; }
  std::size_t count() const { return fan_in() * out + out + (norm ? 2 * out : 0); }
};

// Cached activations of one convolution.
struct ConvCache {
  std::vector<float> col;  // im2col buffer (empty for 1x1 convs)
  int in_h = 0, in_w = 0;
  std::vector<float> xhat, invstd;  // norm only
};

constexpr float kNormEps = 1e-5f;

void norm_forward_inplace(const float* p, const ConvSpec& s, Tensor& y, ConvCache& cache) {
  const std::size_t N = y.plane();
  std::vector<float> mean(N, 0.f), var(N, 0.f);
  for (int c = 0; c < y.c; ++c) {
    const float* r = y.ch(c);
    for (std::size_t i = 0; i < N; ++i) mean[i] += r[i];
  }
  for (float& m : mean) m /= static_cast<float>(y.c);
  for (int c = 0; c < y.c; ++c) {
    const float* r = y.ch(c);
    for (std::size_t i = 0; i < N; ++i) {
      const float d = r[i] - mean[i];
      var[i] += d * d;
    }
  }
  cache.invstd.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    cache.invstd[i] = 1.f / std::sqrt(var[i] / static_cast<float>(y.c) + kNormEps);
  }
  cache.xhat.resize(y.v.size());
  for (int c = 0; c < y.c; ++c) {
    float* r = y.ch(c);
    float* xh = cache.xhat.data() + c * N;
    const float gamma = p[s.gamma_off() + c], beta = p[s.beta_off() + c];
    for (std::size_t i = 0; i < N; ++i) {
      xh[i] = (r[i] - mean[i]) * cache.invstd[i];
      r[i] = gamma * xh[i] + beta;
    }
  }
}

// Returns d(pre-norm activation); accumulates gamma and beta gradients.
Tensor norm_backward(const float* p, float* g, const ConvSpec& s, const ConvCache& cache,
                     const Tensor& dy) {
  const std::size_t N = dy.plane();
  const float C = static_cast<float>(dy.c);
  std::vector<float> sum_d(N, 0.f), sum_dx(N, 0.f);
  Tensor dxhat(dy.c, dy.h, dy.w);
  for (int c = 0; c < dy.c; ++c) {
    const float* d = dy.ch(c);
    const float* xh = cache.xhat.data() + c * N;
    float* dh = dxhat.ch(c);
    const float gamma = p[s.gamma_off() + c];
    float dg = 0.f, db = 0.f;
    for (std::size_t i = 0; i < N; ++i) {
      dg += d[i] * xh[i];
      db += d[i];
      dh[i] = d[i] * gamma;
      sum_d[i] += dh[i];
      sum_dx[i] += dh[i] * xh[i];
    }
    g[s.gamma_off() + c] += dg;
    g[s.beta_off() + c] += db;
  }
  for (int c = 0; c < dy.c; ++c) {
    const float* xh = cache.xhat.data() + c * N;
    float* dh = dxhat.ch(c);
    for (std::size_t i = 0; i < N; ++i) {
      dh[i] = cache.invstd[i] / C * (C * dh[i] - sum_d[i] - xh[i] * sum_dx[i]);
    }
  }
  return dxhat;
}

int conv_out_size(int n, const ConvSpec& s) {
  const int pad = s.k / 2;
  return (n + 2 * pad - s.k) / s.stride + 1;
}

void im2col(const Tensor& x, const ConvSpec& s, int oh, int ow,
            std::vector<float>& col) {
  const int pad = s.k / 2;
  const std::size_t N = std::size_t(oh) * ow;
  col.assign(s.fan_in() * N, 0.f);
  for (int ci = 0; ci < s.in; ++ci) {
    const float* src = x.ch(ci);
    for (int ky = 0; ky < s.k; ++ky) {
      for (int kx = 0; kx < s.k; ++kx) {
        float* row = col.data() + ((ci * s.k + ky) * s.k + kx) * N;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride - pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          float* dst = row + std::size_t(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride - pad + kx;
            if (ix >= 0 && ix < x.w) dst[ox] = src[iy * x.w + ix];
          }
        }
      }
    }
  }
}

void col2im(const std::vector<float>& col, const ConvSpec& s, int oh, int ow,
            Tensor& dx) {
  const int pad = s.k / 2;
  const std::size_t N = std::size_t(oh) * ow;
  for (int ci = 0; ci < s.in; ++ci) {
    float* dst = dx.ch(ci);
    for (int ky = 0; ky < s.k; ++ky) {
      for (int kx = 0; kx < s.k; ++kx) {
        const float* row = col.data() + ((ci * s.k + ky) * s.k + kx) * N;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride - pad + ky;
          if (iy < 0 || iy >= dx.h) continue;
          const float* src = row + std::size_t(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride - pad + kx;
            if (ix >= 0 && ix < dx.w) dst[iy * dx.w + ix] += src[ox];
          }
        }
      }
    }
  }
}

Tensor conv_forward(const float* p, const ConvSpec& s, const Tensor& x,
                    ConvCache& cache) {
  const int oh = conv_out_size(x.h, s), ow = conv_out_size(x.w, s);
  const std::size_t N = std::size_t(oh) * ow;
  cache.in_h = x.h;
  cache.in_w = x.w;
  Tensor y(s.out, oh, ow);
  ConstRowMap W(p + s.w_off, s.out, static_cast<Eigen::Index>(s.fan_in()));
  RowMap Y(y.v.data(), s.out, static_cast<Eigen::Index>(N));
  if (s.k == 1 && s.stride == 1) {
    cache.col.clear();
    ConstRowMap X(x.v.data(), s.in, static_cast<Eigen::Index>(N));
    Y.noalias() = W * X;
  } else {
    im2col(x, s, oh, ow, cache.col);
    ConstRowMap X(cache.col.data(), static_cast<Eigen::Index>(s.fan_in()),
                  static_cast<Eigen::Index>(N));
    Y.noalias() = W * X;
  }
  for (int o = 0; o < s.out; ++o) {
    const float b = p[s.b_off + o];
    float* row = y.ch(o);
    for (std::size_t i = 0; i < N; ++i) row[i] += b;
  }
  if (s.norm) norm_forward_inplace(p, s, y, cache);
  return y;
}

// Returns d(input); accumulates weight and bias gradients into g.
Tensor conv_backward(const float* p, float* g, const ConvSpec& s,
                     const Tensor& x_if_1x1, const ConvCache& cache,
                     const Tensor& dy_out) {
  Tensor dz;
  if (s.norm) dz = norm_backward(p, g, s, cache, dy_out);
  const Tensor& dy = s.norm ? dz : dy_out;
  const std::size_t N = std::size_t(dy.h) * dy.w;
  ConstRowMap W(p + s.w_off, s.out, static_cast<Eigen::Index>(s.fan_in()));
  RowMap dW(g + s.w_off, s.out, static_cast<Eigen::Index>(s.fan_in()));
  ConstRowMap dY(dy.v.data(), s.out, static_cast<Eigen::Index>(N));
  for (int o = 0; o < s.out; ++o) {
    const float* row = dy.ch(o);
    float acc = 0.f;
    for (std::size_t i = 0; i < N; ++i) acc += row[i];
    g[s.b_off + o] += acc;
  }
  Tensor dx(s.in, cache.in_h, cache.in_w);
  if (s.k == 1 && s.stride == 1) {
    ConstRowMap X(x_if_1x1.v.data(), s.in, static_cast<Eigen::Index>(N));
    dW.noalias() += dY * X.transpose();
    RowMap dX(dx.v.data(), s.in, static_cast<Eigen::Index>(N));
    dX.noalias() = W.transpose() * dY;
  } else {
    ConstRowMap X(cache.col.data(), static_cast<Eigen::Index>(s.fan_in()),
                  static_cast<Eigen::Index>(N));
    dW.noalias() += dY * X.transpose();
    std::vector<float> dcol(s.fan_in() * N);
    RowMap dC(dcol.data(), static_cast<Eigen::Index>(s.fan_in()),
              static_cast<Eigen::Index>(N));
    dC.noalias() = W.transpose() * dY;
    col2im(dcol, s, dy.h, dy.w, dx);
  }
  return dx;
}

void relu_inplace(Tensor& t) {
  for (float& v : t.v) v = v > 0.f ? v : 0.f;
}

// dy masked by the post-activation output.
void relu_backward_inplace(Tensor& dy, const Tensor& out) {
  for (std::size_t i = 0; i < dy.v.size(); ++i) {
    if (out.v[i] <= 0.f) dy.v[i] = 0.f;
  }
}

Tensor upsample_nearest2(const Tensor& x) {
  Tensor y(x.c, x.h * 2, x.w * 2);
  for (int c = 0; c < x.c; ++c) {
    const float* s = x.ch(c);
    float* d = y.ch(c);
    for (int yy = 0; yy < y.h; ++yy) {
      for (int xx = 0; xx < y.w; ++xx) d[yy * y.w + xx] = s[(yy / 2) * x.w + xx / 2];
    }
  }
  return y;
}

Tensor upsample_nearest2_backward(const Tensor& dy) {
  Tensor dx(dy.c, dy.h / 2, dy.w / 2);
  for (int c = 0; c < dy.c; ++c) {
    const float* s = dy.ch(c);
    float* d = dx.ch(c);
    for (int yy = 0; yy < dy.h; ++yy) {
      for (int xx = 0; xx < dy.w; ++xx) d[(yy / 2) * dx.w + xx / 2] += s[yy * dy.w + xx];
    }
  }
  return dx;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor y(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.v.size());
  return y;
}

// Half-pixel-center linear interpolation table from n_in to n_out samples.
struct Interp {
  std::vector<int> i0, i1;
  std::vector<float> w;
  Interp(int n_in, int n_out) : i0(n_out), i1(n_out), w(n_out) {
    const double scale = static_cast<double>(n_in) / n_out;
    for (int i = 0; i < n_out; ++i) {
      const double f = std::clamp((i + 0.5) * scale - 0.5, 0.0, n_in - 1.0);
      i0[i] = static_cast<int>(f);
      i1[i] = std::min(i0[i] + 1, n_in - 1);
      w[i] = static_cast<float>(f - i0[i]);
    }
  }
};

Tensor bilinear_resize(const Tensor& x, int oh, int ow) {
  Interp iy(x.h, oh), ix(x.w, ow);
  Tensor y(x.c, oh, ow);
  for (int c = 0; c < x.c; ++c) {
    const float* s = x.ch(c);
    float* d = y.ch(c);
    for (int yy = 0; yy < oh; ++yy) {
      const float* r0 = s + iy.i0[yy] * x.w;
      const float* r1 = s + iy.i1[yy] * x.w;
      const float wy = iy.w[yy];
      for (int xx = 0; xx < ow; ++xx) {
        const float wx = ix.w[xx];
        const float top = r0[ix.i0[xx]] * (1 - wx) + r0[ix.i1[xx]] * wx;
        const float bot = r1[ix.i0[xx]] * (1 - wx) + r1[ix.i1[xx]] * wx;
        d[yy * ow + xx] = top * (1 - wy) + bot * wy;
      }
    }
  }
  return y;
}

Tensor bilinear_resize_backward(const Tensor& dy, int ih, int iw) {
  Interp iy(ih, dy.h), ix(iw, dy.w);
  Tensor dx(dy.c, ih, iw);
  for (int c = 0; c < dy.c; ++c) {
    const float* s = dy.ch(c);
    float* d = dx.ch(c);
    for (int yy = 0; yy < dy.h; ++yy) {
      float* r0 = d + iy.i0[yy] * iw;
      float* r1 = d + iy.i1[yy] * iw;
      const float wy = iy.w[yy];
      for (int xx = 0; xx < dy.w; ++xx) {
        const float g = s[yy * dy.w + xx];
        const float wx = ix.w[xx];
        r0[ix.i0[xx]] += g * (1 - wy) * (1 - wx);
        r0[ix.i1[xx]] += g * (1 - wy) * wx;
        r1[ix.i0[xx]] += g * wy * (1 - wx);
        r1[ix.i1[xx]] += g * wy * wx;
      }
    }
  }
  return dx;
}

void add_into(Tensor& acc, const Tensor& t) {
  if (acc.v.empty()) {
    acc = t;
    return;
  }
  for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += t.v[i];
}

Tensor from_planes(const Planes& p) {
  Tensor t(p.channels(), p.height(), p.width());
  for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] = static_cast<float>(p.data()[i]);
  return t;
}

Planes to_planes(const Tensor& t) {
  Planes p(t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.v.size(); ++i) p.data()[i] = t.v[i];
  return p;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

struct SegNet::Layout {
  std::vector<ConvSpec> enc_a, enc_b;  // per level
  std::vector<ConvSpec> dec;           // per level except the bottleneck
  ConvSpec seg_head, bnd_head;
  std::size_t total = 0;
  std::size_t encoder_end = 0;
};

class SegNet::Trace {
 public:
  Tensor input;
  std::vector<ConvCache> enc_a_cache, enc_b_cache, dec_cache;
  std::vector<Tensor> enc_a_out, enc_b_out;
  std::vector<Tensor> dec_cat, dec_out;
  ConvCache seg_cache, bnd_cache;
  Planes seg_probs, bnd_probs;
  int half_h = 0, half_w = 0;
};

void validate_arch(const ArchConfig& a) {
  if (a.backbone != "unet-lite") {
    throw ConfigError("unknown backbone '" + a.backbone + "'");
  }
  if (a.norm != "pixel-layernorm" && a.norm != "none") {
    throw ConfigError("unknown norm '" + a.norm + "' (pixel-layernorm, none)");
  }
  if (a.feature_tap != "decoder-penultimate") {
    throw ConfigError("unsupported feature tap '" + a.feature_tap + "'");
  }
  if (a.encoder_channels.size() < 2 || a.encoder_channels.size() > 6) {
    throw ConfigError("encoder needs 2..6 levels");
  }
  for (int c : a.encoder_channels) {
    if (c <= 0) throw ConfigError("encoder channel counts must be positive");
  }
  if (a.in_channels <= 0 || a.num_classes <= 0 || a.feature_channels <= 0) {
    throw ConfigError("channel counts must be positive");
  }
  const int s = a.total_stride();
  if (a.input_height <= 0 || a.input_width <= 0 || a.input_height % s != 0 ||
      a.input_width % s != 0) {
    throw ShapeError("input " + std::to_string(a.input_height) + "x" +
                     std::to_string(a.input_width) +
                     " is not divisible by the encoder stride " +
                     std::to_string(s));
  }
}

SegNet::SegNet(ArchConfig arch) : arch_(std::move(arch)), layout_(std::make_unique<Layout>()) {
  validate_arch(arch_);
  auto& L = *layout_;
  std::size_t off = 0;
  const bool norm = arch_.norm == "pixel-layernorm";
  auto add = [&](int in, int out, int k, int stride, bool with_norm) {
    ConvSpec s{in, out, k, stride, off, off + std::size_t(in) * k * k * out, with_norm};
    off += s.count();
    return s;
  };
  const auto& ch = arch_.encoder_channels;
  const int levels = static_cast<int>(ch.size());
  int prev = arch_.in_channels;
  for (int k = 0; k < levels; ++k) {
    L.enc_a.push_back(add(prev, ch[k], 3, 2, norm));
    L.enc_b.push_back(add(ch[k], ch[k], 3, 1, norm));
    prev = ch[k];
  }
  L.encoder_end = off;
  L.dec.resize(levels - 1);
  int below = ch[levels - 1];
  for (int k = levels - 2; k >= 0; --k) {
    const int out = k == 0 ? arch_.feature_channels : ch[k];
    L.dec[k] = add(below + ch[k], out, 3, 1, norm);
    below = out;
  }
  L.seg_head = add(arch_.feature_channels, arch_.num_classes, 1, 1, false);
  L.bnd_head = add(arch_.feature_channels, arch_.num_classes, 1, 1, false);
  L.total = off;
}

void SegNet::TraceDeleter::operator()(Trace* t) const { delete t; }

SegNet::~SegNet() = default;
SegNet::SegNet(SegNet&&) noexcept = default;
SegNet& SegNet::operator=(SegNet&&) noexcept = default;

std::size_t SegNet::parameter_count() const { return layout_->total; }

std::pair<std::size_t, std::size_t> SegNet::boundary_head_range() const {
  return {layout_->bnd_head.w_off, layout_->bnd_head.w_off + layout_->bnd_head.count()};
}
std::pair<std::size_t, std::size_t> SegNet::seg_head_range() const {
  return {layout_->seg_head.w_off, layout_->seg_head.w_off + layout_->seg_head.count()};
}
std::pair<std::size_t, std::size_t> SegNet::encoder_range() const {
  return {0, layout_->encoder_end};
}

ModelParams SegNet::init(std::uint64_t seed) const {
  ModelParams p{arch_, std::vector<float>(layout_->total, 0.f)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto fill = [&](const ConvSpec& s) {
    const double std = std::sqrt(2.0 / static_cast<double>(s.fan_in()));
    for (std::size_t i = 0; i < s.fan_in() * s.out; ++i) {
      p.values[s.w_off + i] = static_cast<float>(std * n(rng));
    }
    if (s.norm) std::fill_n(p.values.begin() + s.gamma_off(), s.out, 1.f);
  };
  for (const auto& s : layout_->enc_a) fill(s);
  for (const auto& s : layout_->enc_b) fill(s);
  for (int k = static_cast<int>(layout_->dec.size()) - 1; k >= 0; --k) fill(layout_->dec[k]);
  fill(layout_->seg_head);
  fill(layout_->bnd_head);
  return p;
}

void check_params(const SegNet& net, const ModelParams& params) {
  if (!(params.arch == net.arch())) {
    throw ConfigError("parameters were built for a different architecture");
  }
  if (params.values.size() != net.parameter_count()) {
    throw ConfigError("parameter count " + std::to_string(params.values.size()) +
                      " does not match architecture (" +
                      std::to_string(net.parameter_count()) + ")");
  }
}

ModelOutput SegNet::forward(const ModelParams& params, const Planes& image) const {
  TracePtr trace;
  return forward(params, image, trace);
}

ModelOutput SegNet::forward(const ModelParams& params, const Planes& image,
                            TracePtr& trace) const {
  check_params(*this, params);
  if (image.channels() != arch_.in_channels || image.height() != arch_.input_height ||
      image.width() != arch_.input_width) {
    throw ShapeError("network expects " + std::to_string(arch_.in_channels) + "x" +
                     std::to_string(arch_.input_height) + "x" +
                     std::to_string(arch_.input_width) + " input, got " +
                     image.shape_string());
  }
  const auto& L = *layout_;
  const float* p = params.values.data();
  trace.reset(new Trace());
  Trace& t = *trace;
  const int levels = static_cast<int>(L.enc_a.size());
  t.input = from_planes(image);
  t.enc_a_cache.resize(levels);
  t.enc_b_cache.resize(levels);
  t.enc_a_out.resize(levels);
  t.enc_b_out.resize(levels);
  t.dec_cache.resize(levels - 1);
  t.dec_cat.resize(levels - 1);
  t.dec_out.resize(levels - 1);

  const Tensor* x = &t.input;
  for (int k = 0; k < levels; ++k) {
    t.enc_a_out[k] = conv_forward(p, L.enc_a[k], *x, t.enc_a_cache[k]);
    relu_inplace(t.enc_a_out[k]);
    t.enc_b_out[k] = conv_forward(p, L.enc_b[k], t.enc_a_out[k], t.enc_b_cache[k]);
    relu_inplace(t.enc_b_out[k]);
    x = &t.enc_b_out[k];
  }
  const Tensor* below = &t.enc_b_out[levels - 1];
  for (int k = levels - 2; k >= 0; --k) {
    t.dec_cat[k] = concat(upsample_nearest2(*below), t.enc_b_out[k]);
    t.dec_out[k] = conv_forward(p, L.dec[k], t.dec_cat[k], t.dec_cache[k]);
    relu_inplace(t.dec_out[k]);
    below = &t.dec_out[k];
  }
  const Tensor& feat = t.dec_out[0];
  t.half_h = feat.h;
  t.half_w = feat.w;
  const int H = arch_.input_height, W = arch_.input_width;

  Tensor seg_logit = bilinear_resize(conv_forward(p, L.seg_head, feat, t.seg_cache), H, W);
  Tensor bnd_logit = bilinear_resize(conv_forward(p, L.bnd_head, feat, t.bnd_cache), H, W);

  ModelOutput out;
  out.seg_probs = Planes(arch_.num_classes, H, W);
  out.boundary_probs = Planes(arch_.num_classes, H, W);
  for (std::size_t i = 0; i < seg_logit.v.size(); ++i) {
    out.seg_probs.data()[i] = sigmoid(seg_logit.v[i]);
    out.boundary_probs.data()[i] = sigmoid(bnd_logit.v[i]);
  }
  out.features = to_planes(bilinear_resize(feat, H, W));
  t.seg_probs = out.seg_probs;
  t.bnd_probs = out.boundary_probs;
  return out;
}

void SegNet::backward(const ModelParams& params, const Trace& t, const OutputGrad& grad,
                      std::span<float> grads) const {
  check_params(*this, params);
  if (grads.size() != layout_->total) throw ShapeError("gradient buffer size mismatch");
  const auto& L = *layout_;
  const float* p = params.values.data();
  float* g = grads.data();
  const int levels = static_cast<int>(L.enc_a.size());
  const int H = arch_.input_height, W = arch_.input_width;

  Tensor d_feat(arch_.feature_channels, t.half_h, t.half_w);
  auto head_backward = [&](const Planes& d_probs, const Planes& probs, const ConvSpec& head,
                           const ConvCache& cache) {
    if (d_probs.empty()) return;
    require_same_shape(d_probs, probs, "head gradient");
    Tensor d_logit(arch_.num_classes, H, W);
    for (std::size_t i = 0; i < d_logit.v.size(); ++i) {
      const double q = probs.data()[i];
      d_logit.v[i] = static_cast<float>(d_probs.data()[i] * q * (1.0 - q));
    }
    Tensor d_half = bilinear_resize_backward(d_logit, t.half_h, t.half_w);
    add_into(d_feat, conv_backward(p, g, head, t.dec_out[0], cache, d_half));
  };
  head_backward(grad.seg_probs, t.seg_probs, L.seg_head, t.seg_cache);
  head_backward(grad.boundary_probs, t.bnd_probs, L.bnd_head, t.bnd_cache);
  if (!grad.features.empty()) {
    if (grad.features.channels() != arch_.feature_channels || grad.features.height() != H ||
        grad.features.width() != W) {
      throw ShapeError("feature gradient shape mismatch");
    }
    add_into(d_feat, bilinear_resize_backward(from_planes(grad.features), t.half_h, t.half_w));
  }

  std::vector<Tensor> d_enc(levels);
  Tensor d_below = std::move(d_feat);
  for (int k = 0; k <= levels - 2; ++k) {
    relu_backward_inplace(d_below, t.dec_out[k]);
    Tensor d_cat = conv_backward(p, g, L.dec[k], t.dec_cat[k], t.dec_cache[k], d_below);
    const int up_c = d_cat.c - t.enc_b_out[k].c;
    Tensor d_up(up_c, d_cat.h, d_cat.w);
    std::copy(d_cat.v.begin(), d_cat.v.begin() + d_up.v.size(), d_up.v.begin());
    Tensor d_skip(t.enc_b_out[k].c, d_cat.h, d_cat.w);
    std::copy(d_cat.v.begin() + d_up.v.size(), d_cat.v.end(), d_skip.v.begin());
    add_into(d_enc[k], d_skip);
    d_below = upsample_nearest2_backward(d_up);
  }
  add_into(d_enc[levels - 1], d_below);

  for (int k = levels - 1; k >= 0; --k) {
    Tensor d = std::move(d_enc[k]);
    relu_backward_inplace(d, t.enc_b_out[k]);
    Tensor d_a = conv_backward(p, g, L.enc_b[k], t.enc_a_out[k], t.enc_b_cache[k], d);
    relu_backward_inplace(d_a, t.enc_a_out[k]);
    const Tensor& in = k == 0 ? t.input : t.enc_b_out[k - 1];
    Tensor d_in = conv_backward(p, g, L.enc_a[k], in, t.enc_a_cache[k], d_a);
    if (k > 0) add_into(d_enc[k - 1], d_in);
  }
}

int SegNet::receptive_radius() const {
  // Walk the layers tracking (radius, stride) in input pixels. Each nearest
  // upsample adds the coarse stride as position uncertainty.
  const int levels = static_cast<int>(layout_->enc_a.size());
  int r = 0, s = 1;
  for (int k = 0; k < levels; ++k) {
    r += s;  // 3x3 stride-2 conv
    s *= 2;
    r += s;  // 3x3 conv
  }
  for (int k = levels - 2; k >= 0; --k) {
    r += s;  // nearest upsample
    s /= 2;
    r += s;  // 3x3 conv
  }
  r += 2 * s;  // bilinear upsample of heads and features
  return r;
}

Adam::Adam(AdamConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {
  if (!(cfg.lr >= 0.0) || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 ||
      cfg.beta2 >= 1.0 || cfg.eps <= 0.0) {
    throw ConfigError("invalid Adam hyperparameters");
  }
}

void Adam::step(std::span<float> params, std::span<const float> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("Adam: size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * gi;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * gi * gi;
    const double mhat = m_[i] / bc1, vhat = v_[i] / bc2;
    params[i] = static_cast<float>(params[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
  }
}

}  // namespace mcda
