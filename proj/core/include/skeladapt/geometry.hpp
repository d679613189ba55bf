#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

/// Rotation about the normalized origin (the image center).
struct RigidTransform2D {
  double angle = 0.0;
};

inline RigidTransform2D inverse(const RigidTransform2D& g) { return {-g.angle}; }

inline Vec2 apply(const RigidTransform2D& g, const Vec2& p) {
  const double c = std::cos(g.angle), s = std::sin(g.angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Transpose application, the adjoint needed when differentiating through a
/// rotated branch.
inline Vec2 apply_transpose(const RigidTransform2D& g, const Vec2& p) {
  const double c = std::cos(g.angle), s = std::sin(g.angle);
  return {c * p.x + s * p.y, -s * p.x + c * p.y};
}

inline KeypointSet transform_keypoints(const KeypointSet& y, const RigidTransform2D& g) {
  KeypointSet out;
  out.pts.reserve(y.k());
  for (const Vec2& p : y.pts) out.pts.push_back(apply(g, p));
  return out;
}

/// Inverse warp with bilinear sampling: out(u) = in(R(-angle) u), so a
/// feature at normalized p moves to R(angle) p, matching transform_keypoints.
/// Samples falling outside the frame read the fill value.
template <typename T>
TensorT<T> transform_image(const TensorT<T>& x, const RigidTransform2D& g, T fill) {
  TensorT<T> y(x.n(), x.c(), x.h(), x.w());
  // snap near-exact quarter-turn coefficients so those rotations become pure
  // index permutations instead of picking up one-ulp interpolation residue
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-12 ? r : v;
  };
  const double ci = snap(std::cos(-g.angle)), si = snap(std::sin(-g.angle));
  const int h = x.h(), w = x.w();
  for (int oy = 0; oy < h; ++oy)
    for (int ox = 0; ox < w; ++ox) {
      const Vec2 u = normalize_coord({double(ox), double(oy)}, w, h);
      const Vec2 src = denormalize_coord({ci * u.x - si * u.y, si * u.x + ci * u.y}, w, h);
      const double fx = std::floor(src.x), fy = std::floor(src.y);
      const int x0 = int(fx), y0 = int(fy);
      const double wx = src.x - fx, wy = src.y - fy;
      for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
          const T* plane = x.plane(n, c);
          auto tap = [&](int yy, int xx) -> double {
            return (yy >= 0 && yy < h && xx >= 0 && xx < w) ? double(plane[yy * w + xx]) : double(fill);
          };
          const double v = (1 - wy) * ((1 - wx) * tap(y0, x0) + wx * tap(y0, x0 + 1)) +
                           wy * ((1 - wx) * tap(y0 + 1, x0) + wx * tap(y0 + 1, x0 + 1));
          y.plane(n, c)[oy * w + ox] = T(v);
        }
    }
  return y;
}

// ---------------------------------------------------------------------------
// Equivariance loss over coordinates.

struct GeoConfig {
  double angle_min = -std::numbers::pi / 6;
  double angle_max = std::numbers::pi / 6;
  bool per_sample_angles = false;
  /// Scale convention for the batch reduction: mean keeps magnitudes
  /// batch-size independent; sum is the raw per-batch total.
  bool mean_over_batch = true;
};

struct GeoLossGrads {
  std::vector<std::vector<Vec2>> d_rotated_branch;  // w.r.t. predictions on the rotated images
  std::vector<std::vector<Vec2>> d_plain_branch;    // w.r.t. predictions on the original images
};

/// L1 gap between predicting-then-rotating and rotating-then-predicting:
/// sum_i |a_i - R b_i|_1 over all coordinates, divided by the batch size when
/// mean_over_batch is set. a = predictions on rotated inputs, b = predictions
/// on original inputs. Both branches receive gradients.
inline double loss_geo_from_coords(const std::vector<KeypointSet>& rotated_branch,
                                   const std::vector<KeypointSet>& plain_branch, const RigidTransform2D& g,
                                   bool mean_over_batch = true, GeoLossGrads* grads = nullptr) {
  if (rotated_branch.size() != plain_branch.size() || rotated_branch.empty())
    throw std::invalid_argument("loss_geo: batch mismatch");
  const double scale = mean_over_batch ? 1.0 / double(rotated_branch.size()) : 1.0;
  if (grads) {
    grads->d_rotated_branch.assign(rotated_branch.size(), {});
    grads->d_plain_branch.assign(rotated_branch.size(), {});
  }
  double total = 0;
  for (size_t i = 0; i < rotated_branch.size(); ++i) {
    const KeypointSet& a = rotated_branch[i];
    if (a.k() != plain_branch[i].k()) throw std::invalid_argument("loss_geo: keypoint mismatch");
    if (grads) {
      grads->d_rotated_branch[i].assign(a.k(), Vec2{0, 0});
      grads->d_plain_branch[i].assign(a.k(), Vec2{0, 0});
    }
    for (int j = 0; j < a.k(); ++j) {
      const Vec2 rb = apply(g, plain_branch[i].pts[j]);
      const Vec2 d = a.pts[j] - rb;
      total += std::abs(d.x) + std::abs(d.y);
      if (grads) {
        auto sgn = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
        const Vec2 s{sgn(d.x) * scale, sgn(d.y) * scale};
        grads->d_rotated_branch[i][j] = s;
        grads->d_plain_branch[i][j] = -1.0 * apply_transpose(g, s);
      }
    }
  }
  return total * scale;
}

inline RigidTransform2D sample_rotation(const GeoConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(cfg.angle_min, cfg.angle_max);
  return {dist(rng)};
}

}  // namespace skeladapt
