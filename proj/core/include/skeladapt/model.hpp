#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "skeladapt/nn/layers.hpp"
#include "skeladapt/nn/norm.hpp"
#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

/// Heatmap-regression target width: 2 px at the working resolution, in
/// normalized units.
inline constexpr double kHeatmapSigma = 2.0 / 64.0;

struct NetworkSpec {
  int in_channels = 1;
  int keypoints = 12;
  int base_width = 64;

  std::string to_string() const {
    return "keypointnet(in=" + std::to_string(in_channels) + ",k=" + std::to_string(keypoints) +
           ",bw=" + std::to_string(base_width) + ")";
  }
  uint64_t hash() const { return fnv1a64(to_string()); }
};

enum class NormKind { kBatch, kDomainAlign };

namespace detail {

template <typename T>
void add_cn_block(nn::Sequential<T>& net, int in_c, int out_c, NormKind norm, std::mt19937_64& rng) {
  auto conv = std::make_unique<nn::Conv2d<T>>(in_c, out_c, 3, 1, 1, /*with_bias=*/false);
  conv->init_he(rng);
  net.add(std::move(conv));
  if (norm == NormKind::kBatch)
    net.add(std::make_unique<nn::BatchNorm<T>>(out_c));
  else
    net.add(std::make_unique<nn::DomainAlignNorm<T>>(out_c));
  net.add(std::make_unique<nn::ReLU<T>>());
}

}  // namespace detail

/// Encoder halves resolution four times while widening to 16*bw, the decoder
/// mirrors it back to full resolution, and a bare 3x3 head emits one heatmap
/// channel per keypoint. Every normalization layer is convertible between
/// batch and per-domain statistics.
template <typename T>
nn::Sequential<T> build_keypoint_net(const NetworkSpec& spec, NormKind norm, std::mt19937_64& rng) {
  if (spec.base_width < 2 || spec.base_width % 2 != 0)
    throw std::invalid_argument("build_keypoint_net: base_width must be even and >= 2");
  if (spec.keypoints < 1) throw std::invalid_argument("build_keypoint_net: keypoints must be >= 1");
  const int b = spec.base_width;
  nn::Sequential<T> net;
  detail::add_cn_block(net, spec.in_channels, b, norm, rng);
  net.add(std::make_unique<nn::AvgPool<T>>(2));
  detail::add_cn_block(net, b, 2 * b, norm, rng);
  net.add(std::make_unique<nn::AvgPool<T>>(2));
  detail::add_cn_block(net, 2 * b, 4 * b, norm, rng);
  net.add(std::make_unique<nn::AvgPool<T>>(2));
  detail::add_cn_block(net, 4 * b, 8 * b, norm, rng);
  net.add(std::make_unique<nn::AvgPool<T>>(2));
  detail::add_cn_block(net, 8 * b, 16 * b, norm, rng);
  net.add(std::make_unique<nn::BilinearUpsample<T>>(2));
  detail::add_cn_block(net, 16 * b, 8 * b, norm, rng);
  net.add(std::make_unique<nn::BilinearUpsample<T>>(2));
  detail::add_cn_block(net, 8 * b, 4 * b, norm, rng);
  net.add(std::make_unique<nn::BilinearUpsample<T>>(2));
  detail::add_cn_block(net, 4 * b, 2 * b, norm, rng);
  net.add(std::make_unique<nn::BilinearUpsample<T>>(2));
  detail::add_cn_block(net, 2 * b, b, norm, rng);
  detail::add_cn_block(net, b, b / 2, norm, rng);
  auto head = std::make_unique<nn::Conv2d<T>>(b / 2, spec.keypoints, 3, 1, 1, /*with_bias=*/true);
  head->init_he(rng);
  net.add(std::move(head));
  return net;
}

/// Keypoint predictor bundling the network with its spec; enforces the fixed
/// working resolution on entry.
template <typename T>
struct KeypointNet {
  NetworkSpec spec;
  nn::Sequential<T> net;

  TensorT<T> forward_heatmaps(const TensorT<T>& x, DomainTag domain, nn::Mode mode,
                              typename nn::Sequential<T>::Tape* tape = nullptr) {
    if (x.h() != kInputResolution || x.w() != kInputResolution)
      throw std::invalid_argument("forward_heatmaps: expected " + std::to_string(kInputResolution) + "^2 input, got " +
                                  x.shape_str());
    if (x.c() != spec.in_channels) throw std::invalid_argument("forward_heatmaps: channel mismatch");
    return net.forward(x, mode, domain, tape);
  }
};

template <typename T>
KeypointNet<T> make_keypoint_net(const NetworkSpec& spec, NormKind norm, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return KeypointNet<T>{spec, build_keypoint_net<T>(spec, norm, rng)};
}

// ---------------------------------------------------------------------------
// Soft-argmax readout.

struct SoftArgmaxConfig {
  double beta = 50.0;
};

template <typename T>
struct SoftArgmaxCtx {
  TensorT<T> weights;
  std::vector<KeypointSet> coords;
};

/// Expected pixel-center coordinate under softmax(beta * h) per channel.
/// Output always lies strictly inside (-1,1)^2.
template <typename T>
std::vector<KeypointSet> soft_argmax(const TensorT<T>& heat, const SoftArgmaxConfig& cfg,
                                     SoftArgmaxCtx<T>* ctx = nullptr) {
  if (!std::isfinite(cfg.beta) || cfg.beta <= 0) throw std::invalid_argument("soft_argmax: beta must be positive");
  const int hw = heat.h() * heat.w();
  std::vector<KeypointSet> out(heat.n());
  TensorT<T> weights;
  if (ctx) weights = TensorT<T>(heat.n(), heat.c(), heat.h(), heat.w());
  std::vector<double> w(hw);
  for (int n = 0; n < heat.n(); ++n) {
    out[n].pts.resize(heat.c());
    for (int c = 0; c < heat.c(); ++c) {
      const T* src = heat.plane(n, c);
      double mx = -std::numeric_limits<double>::max();
      for (int i = 0; i < hw; ++i) mx = std::max(mx, double(src[i]));
      double z = 0;
      for (int i = 0; i < hw; ++i) {
        w[i] = std::exp(cfg.beta * (double(src[i]) - mx));
        z += w[i];
      }
      double cx = 0, cy = 0;
      for (int y = 0; y < heat.h(); ++y)
        for (int x = 0; x < heat.w(); ++x) {
          const double wi = w[y * heat.w() + x] / z;
          w[y * heat.w() + x] = wi;
          const Vec2 u = normalize_coord({double(x), double(y)}, heat.w(), heat.h());
          cx += wi * u.x;
          cy += wi * u.y;
        }
      out[n].pts[c] = Vec2{cx, cy};
      if (ctx) {
        T* dst = weights.plane(n, c);
        for (int i = 0; i < hw; ++i) dst[i] = T(w[i]);
      }
    }
  }
  if (ctx) {
    ctx->weights = std::move(weights);
    ctx->coords = out;
  }
  return out;
}

/// d(loss)/d(heatmap) given per-keypoint coordinate gradients:
/// dL/dh(u) = beta * w(u) * (u - coord) . dL/dcoord.
template <typename T>
TensorT<T> soft_argmax_backward(const std::vector<std::vector<Vec2>>& dcoords, const SoftArgmaxConfig& cfg,
                                const SoftArgmaxCtx<T>& ctx) {
  const TensorT<T>& w = ctx.weights;
  if (int(dcoords.size()) != w.n()) throw std::invalid_argument("soft_argmax_backward: batch mismatch");
  TensorT<T> dh(w.n(), w.c(), w.h(), w.w());
  for (int n = 0; n < w.n(); ++n) {
    if (int(dcoords[n].size()) != w.c()) throw std::invalid_argument("soft_argmax_backward: keypoint mismatch");
    for (int c = 0; c < w.c(); ++c) {
      const T* wp = w.plane(n, c);
      T* dst = dh.plane(n, c);
      const Vec2 coord = ctx.coords[n].pts[c];
      const Vec2 g = dcoords[n][c];
      for (int y = 0; y < w.h(); ++y)
        for (int x = 0; x < w.w(); ++x) {
          const Vec2 u = normalize_coord({double(x), double(y)}, w.w(), w.h());
          dst[y * w.w() + x] = T(cfg.beta * double(wp[y * w.w() + x]) * ((u.x - coord.x) * g.x + (u.y - coord.y) * g.y));
        }
    }
  }
  return dh;
}

// ---------------------------------------------------------------------------
// Supervised heatmap regression.

/// Target stack: per keypoint j, exp(-|u - y_j|^2 / sigma^2) on the
/// normalized pixel grid.
template <typename T>
TensorT<T> gaussian_heatmaps(const std::vector<KeypointSet>& gt, int k, int resolution, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("gaussian_heatmaps: sigma must be positive");
  TensorT<T> out(int(gt.size()), k, resolution, resolution);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (size_t n = 0; n < gt.size(); ++n) {
    if (int(gt[n].k()) != k) throw std::invalid_argument("gaussian_heatmaps: keypoint count mismatch");
    for (int c = 0; c < k; ++c) {
      T* dst = out.plane(int(n), c);
      const Vec2 y = gt[n].pts[c];
      for (int py = 0; py < resolution; ++py)
        for (int px = 0; px < resolution; ++px) {
          const Vec2 u = normalize_coord({double(px), double(py)}, resolution, resolution);
          const Vec2 d = u - y;
          dst[py * resolution + px] = T(std::exp(-dot(d, d) * inv_s2));
        }
    }
  }
  return out;
}

/// Mean squared error between predicted heatmaps and Gaussian targets.
/// When dh is given it receives d(loss)/d(h).
template <typename T>
double heatmap_regression_loss(const TensorT<T>& h, const std::vector<KeypointSet>& gt, double sigma,
                               TensorT<T>* dh = nullptr) {
  if (int(gt.size()) != h.n()) throw std::invalid_argument("heatmap_regression_loss: batch mismatch");
  TensorT<T> target = gaussian_heatmaps<T>(gt, h.c(), h.h(), sigma);
  if (dh) *dh = TensorT<T>(h.n(), h.c(), h.h(), h.w());
  const double inv_m = 1.0 / double(h.size());
  double acc = 0;
  for (size_t i = 0; i < h.size(); ++i) {
    const double d = double(h[i]) - double(target[i]);
    acc += d * d;
    if (dh) (*dh)[i] = T(2.0 * d * inv_m);
  }
  return acc * inv_m;
}

}  // namespace skeladapt
