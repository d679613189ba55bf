#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "skeladapt/tensor.hpp"

namespace skeladapt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Batch domain label. Minibatches are homogeneous in this tag; the
/// normalization layers keep separate statistics per tag.
enum class DomainTag : int { kSource = 0, kTarget = 1 };

inline const char* to_string(DomainTag d) { return d == DomainTag::kSource ? "source" : "target"; }

/// Ordered 2D keypoints in the normalized frame [-1,1]^2, (-1,-1) at the
/// top-left pixel corner, (+1,+1) at the bottom-right. Index i keeps one
/// semantic meaning throughout an experiment. Coordinates may leave the
/// frame after geometric transforms and are stored unclamped.
struct KeypointSet {
  std::vector<Vec2> pts;

  KeypointSet() = default;
  KeypointSet(std::vector<Vec2> p) : pts(std::move(p)) {}

  int k() const { return int(pts.size()); }
  bool all_finite() const {
    for (const Vec2& p : pts)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
  }
};

/// Bone list over keypoint indices; parameterizes the skeleton renderer.
struct SkeletonTopology {
  std::string name;
  int k = 0;
  std::vector<std::pair<int, int>> edges;
};

struct TopologyReport {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Checks all SkeletonTopology invariants; violations are reported, never thrown.
TopologyReport validate_topology(const SkeletonTopology& topo);

/// Pixel (col,row) -> normalized frame, pixel-center aligned: the center of
/// pixel (0,0) maps to (-1 + 1/W, -1 + 1/H). Throws on non-finite input.
KeypointSet normalize_coords(const std::vector<Vec2>& pixel_coords, int width, int height);
std::vector<Vec2> denormalize_coords(const KeypointSet& kps, int width, int height);

Vec2 normalize_coord(Vec2 pixel, int width, int height);
Vec2 denormalize_coord(Vec2 norm, int width, int height);

/// Training/adaptation input resolution; a preprocessing contract, not a tunable.
inline constexpr int kInputResolution = 128;

uint64_t fnv1a64(const std::string& s);
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace skeladapt
