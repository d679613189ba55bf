#include "skeladapt/types.hpp"

#include <stdexcept>

namespace skeladapt {

TopologyReport validate_topology(const SkeletonTopology& topo) {
  TopologyReport r;
  if (topo.k < 1) {
    r.ok = false;
    r.violations.push_back("keypoint count must be >= 1, got " + std::to_string(topo.k));
  }
  if (topo.edges.empty()) {
    r.ok = false;
    r.violations.push_back("edge list is empty");
  }
  for (size_t e = 0; e < topo.edges.size(); ++e) {
    auto [i, j] = topo.edges[e];
    if (i < 0 || i >= topo.k || j < 0 || j >= topo.k) {
      r.ok = false;
      r.violations.push_back("edge " + std::to_string(e) + " index out of range: (" + std::to_string(i) + "," +
                             std::to_string(j) + ") with k=" + std::to_string(topo.k));
    } else if (i == j) {
      r.ok = false;
      r.violations.push_back("edge " + std::to_string(e) + " is a self-loop at index " + std::to_string(i));
    }
  }
  return r;
}

Vec2 normalize_coord(Vec2 pixel, int width, int height) {
  return {2.0 * (pixel.x + 0.5) / width - 1.0, 2.0 * (pixel.y + 0.5) / height - 1.0};
}

Vec2 denormalize_coord(Vec2 norm, int width, int height) {
  return {(norm.x + 1.0) * width / 2.0 - 0.5, (norm.y + 1.0) * height / 2.0 - 0.5};
}

KeypointSet normalize_coords(const std::vector<Vec2>& pixel_coords, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("normalize_coords: non-positive image size");
  KeypointSet out;
  out.pts.reserve(pixel_coords.size());
  for (const Vec2& p : pixel_coords) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("normalize_coords: non-finite pixel coordinate");
    out.pts.push_back(normalize_coord(p, width, height));
  }
  return out;
}

std::vector<Vec2> denormalize_coords(const KeypointSet& kps, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("denormalize_coords: non-positive image size");
  std::vector<Vec2> out;
  out.reserve(kps.pts.size());
  for (const Vec2& p : kps.pts) out.push_back(denormalize_coord(p, width, height));
  return out;
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 step; decorrelates per-index / per-iteration rng streams.
uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace skeladapt
