#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "skeladapt/nn/layers.hpp"
#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

struct RenderConfig {
  int resolution = kInputResolution;
  double sigma = 0.02;  // falloff width in normalized units
};

/// Closest point on segment [a,b] parametrized as a + t(b-a), t clamped to [0,1].
inline double segment_param(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return 0.0;
  double t = dot(p - a, ab) / len2;
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return t;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double t = segment_param(p, a, b);
  const Vec2 c = a + t * (b - a);
  return norm(p - c);
}

/// S(u) = exp(-d(u)^2 / sigma^2) with d the distance from pixel center u to
/// the nearest skeleton edge. Output shape (1,1,R,R), values in (0,1].
template <typename T>
TensorT<T> render_skeleton(const KeypointSet& kps, const SkeletonTopology& topo, const RenderConfig& cfg) {
  if (int(kps.k()) != topo.k) throw std::invalid_argument("render_skeleton: keypoint count mismatch");
  const int r = cfg.resolution;
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  TensorT<T> img(1, 1, r, r);
  T* dst = img.data();
  for (int y = 0; y < r; ++y)
    for (int x = 0; x < r; ++x) {
      const Vec2 p = normalize_coord({double(x), double(y)}, r, r);
      double best = std::numeric_limits<double>::max();
      for (const auto& [i, j] : topo.edges) {
        const double d = point_segment_distance(p, kps.pts[i], kps.pts[j]);
        if (d < best) best = d;
      }
      dst[y * r + x] = T(std::exp(-best * best * inv_s2));
    }
  return img;
}

/// d(loss)/d(keypoints) for the render above. For each pixel only the nearest
/// edge contributes; with c the closest point at parameter t,
/// d(d^2)/da = 2(1-t)(c-p) and d(d^2)/db = 2t(c-p), which stays finite as
/// d -> 0.
template <typename T>
std::vector<Vec2> render_skeleton_backward(const TensorT<T>& dimg, const KeypointSet& kps,
                                           const SkeletonTopology& topo, const RenderConfig& cfg) {
  const int r = cfg.resolution;
  if (dimg.h() != r || dimg.w() != r) throw std::invalid_argument("render_skeleton_backward: shape mismatch");
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  std::vector<Vec2> dk(kps.k(), Vec2{0.0, 0.0});
  const T* g = dimg.data();
  for (int y = 0; y < r; ++y)
    for (int x = 0; x < r; ++x) {
      const double gu = double(g[y * r + x]);
      if (gu == 0.0) continue;
      const Vec2 p = normalize_coord({double(x), double(y)}, r, r);
      double best = std::numeric_limits<double>::max();
      size_t best_e = 0;
      for (size_t e = 0; e < topo.edges.size(); ++e) {
        const double d = point_segment_distance(p, kps.pts[topo.edges[e].first], kps.pts[topo.edges[e].second]);
        if (d < best) {
          best = d;
          best_e = e;
        }
      }
      const auto [i, j] = topo.edges[best_e];
      const double t = segment_param(p, kps.pts[i], kps.pts[j]);
      const Vec2 c = kps.pts[i] + t * (kps.pts[j] - kps.pts[i]);
      const double coef = gu * std::exp(-best * best * inv_s2) * (-inv_s2);
      const Vec2 cp = c - p;
      dk[i] = dk[i] + (coef * 2.0 * (1.0 - t)) * cp;
      dk[j] = dk[j] + (coef * 2.0 * t) * cp;
    }
  return dk;
}

template <typename T>
TensorT<T> render_batch(const std::vector<KeypointSet>& batch, const SkeletonTopology& topo,
                        const RenderConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("render_batch: empty batch");
  TensorT<T> out(int(batch.size()), 1, cfg.resolution, cfg.resolution);
  for (size_t n = 0; n < batch.size(); ++n) {
    TensorT<T> one = render_skeleton<T>(batch[n], topo, cfg);
    std::copy(one.data(), one.data() + one.size(), out.plane(int(n), 0));
  }
  return out;
}

template <typename T>
std::vector<std::vector<Vec2>> render_batch_backward(const TensorT<T>& dimgs, const std::vector<KeypointSet>& batch,
                                                     const SkeletonTopology& topo, const RenderConfig& cfg) {
  std::vector<std::vector<Vec2>> out(batch.size());
  for (size_t n = 0; n < batch.size(); ++n) {
    TensorT<T> slice = dimgs.slice(int(n));
    out[n] = render_skeleton_backward<T>(slice, batch[n], topo, cfg);
  }
  return out;
}

inline int pyramid_factor(int resolution, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("image_pyramid: scale outside (0,1]");
  const double exact = resolution * scale;
  const int out_res = int(std::lround(exact));
  if (std::abs(exact - out_res) > 1e-9 || out_res < 4)
    throw std::invalid_argument("image_pyramid: scale " + std::to_string(scale) + " gives non-integer or tiny extent");
  if (resolution % out_res != 0) throw std::invalid_argument("image_pyramid: scale must divide the resolution");
  return resolution / out_res;
}

/// Mean-pooled downsamples at each scale factor, full resolution first.
template <typename T>
std::vector<TensorT<T>> image_pyramid(const TensorT<T>& x, const std::vector<double>& scales) {
  if (scales.empty()) throw std::invalid_argument("image_pyramid: no scales");
  std::vector<TensorT<T>> out;
  for (double s : scales) {
    const int f = pyramid_factor(x.h(), s);
    if (f == 1) {
      out.push_back(x);
      continue;
    }
    TensorT<T> level(x.n(), x.c(), x.h() / f, x.w() / f);
    const T inv = T(1) / T(f * f);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        const T* src = x.plane(n, c);
        T* dst = level.plane(n, c);
        for (int y = 0; y < level.h(); ++y)
          for (int xx = 0; xx < level.w(); ++xx) {
            T acc = 0;
            for (int by = 0; by < f; ++by)
              for (int bx = 0; bx < f; ++bx) acc += src[(y * f + by) * x.w() + xx * f + bx];
            dst[y * level.w() + xx] = acc * inv;
          }
      }
    out.push_back(std::move(level));
  }
  return out;
}

/// Adjoint of image_pyramid: folds per-level gradients back to full resolution.
template <typename T>
TensorT<T> image_pyramid_backward(const std::vector<TensorT<T>>& dlevels, const std::vector<double>& scales,
                                  int resolution) {
  if (dlevels.size() != scales.size()) throw std::invalid_argument("image_pyramid_backward: level count mismatch");
  TensorT<T> acc(dlevels[0].n(), dlevels[0].c(), resolution, resolution);
  for (size_t l = 0; l < dlevels.size(); ++l) {
    const TensorT<T>& d = dlevels[l];
    const int f = pyramid_factor(resolution, scales[l]);
    const T w = T(1) / T(f * f);
    for (int n = 0; n < d.n(); ++n)
      for (int c = 0; c < d.c(); ++c) {
        const T* src = d.plane(n, c);
        T* dst = acc.plane(n, c);
        for (int y = 0; y < d.h(); ++y)
          for (int x = 0; x < d.w(); ++x) {
            const T g = src[y * d.w() + x] * w;
            for (int by = 0; by < f; ++by)
              for (int bx = 0; bx < f; ++bx) dst[(y * f + by) * acc.w() + x * f + bx] += g;
          }
      }
  }
  return acc;
}

/// A shape prior element: either a keypoint configuration or a pre-drawn
/// raster. Exactly one payload is populated.
struct PriorElement {
  KeypointSet keypoints;
  TensorT<float> raster;
  bool is_raster = false;
};

/// Maps a prior element into skeleton-image space: keypoint payloads go
/// through render_skeleton; rasters are resampled to the configured
/// resolution, 8-bit-range inputs rescaled by 1/255, and clamped to [0,1].
template <typename T>
TensorT<T> render_prior(const PriorElement& q, const SkeletonTopology& topo, const RenderConfig& cfg) {
  if (!q.is_raster) return render_skeleton<T>(q.keypoints, topo, cfg);
  if (q.raster.empty() || q.raster.c() != 1) throw std::invalid_argument("render_prior: raster payload must be single-channel");
  TensorT<T> img = q.raster.template cast<T>();
  T mx = 0;
  for (size_t i = 0; i < img.size(); ++i) mx = std::max(mx, img[i]);
  if (mx > T(1.0 + 1e-6))
    for (size_t i = 0; i < img.size(); ++i) img[i] = img[i] / T(255);
  if (img.h() != cfg.resolution || img.w() != cfg.resolution)
    img = nn::BilinearUpsample<T>::resize_bilinear(img, cfg.resolution, cfg.resolution);
  for (size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(img[i], T(0), T(1));
  return img;
}

}  // namespace skeladapt
