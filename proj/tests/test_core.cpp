#include <doctest.h>

#include <random>

#include "skeladapt/types.hpp"

using namespace skeladapt;

TEST_CASE("pixel-center normalization maps the canonical points") {
  const Vec2 center = normalize_coord({63.5, 63.5}, 128, 128);
  CHECK(center.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(center.y == doctest::Approx(0.0).epsilon(1e-12));

  const Vec2 corner = normalize_coord({-0.5, -0.5}, 128, 128);
  CHECK(corner.x == doctest::Approx(-1.0));
  CHECK(corner.y == doctest::Approx(-1.0));

  const Vec2 off = normalize_coord({95.5, 31.5}, 128, 128);
  CHECK(off.x == doctest::Approx(0.5));
  CHECK(off.y == doctest::Approx(-0.5));
}

TEST_CASE("normalize/denormalize round-trip on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{dist(rng), dist(rng)};
    const Vec2 back = normalize_coord(denormalize_coord(p, 128, 128), 128, 128);
    CHECK(std::abs(back.x - p.x) < 1e-6);
    CHECK(std::abs(back.y - p.y) < 1e-6);
  }
}

TEST_CASE("normalized frame is resolution-independent within a pixel") {
  // the same physical location indexed at two resolutions
  for (int c = 0; c < 128; c += 7) {
    const Vec2 lo = normalize_coord({double(c), double(c)}, 128, 128);
    const Vec2 hi = normalize_coord({2.0 * c, 2.0 * c}, 256, 256);
    CHECK(std::abs(lo.x - hi.x) <= 1.0 / 128);
    CHECK(std::abs(lo.y - hi.y) <= 1.0 / 128);
  }
}

TEST_CASE("normalize_coords rejects non-finite input") {
  CHECK_THROWS_AS(normalize_coords({{std::nan(""), 0.0}}, 128, 128), std::invalid_argument);
  CHECK_THROWS_AS(normalize_coords({{0.0, std::numeric_limits<double>::infinity()}}, 128, 128),
                  std::invalid_argument);
}

TEST_CASE("topology validation") {
  SkeletonTopology ok{"t", 3, {{0, 1}, {1, 2}}};
  CHECK(validate_topology(ok).ok);

  SkeletonTopology oob{"t", 3, {{0, 3}}};
  const TopologyReport r1 = validate_topology(oob);
  CHECK_FALSE(r1.ok);
  CHECK(r1.violations.size() == 1);
  CHECK(r1.violations[0].find("out of range") != std::string::npos);

  SkeletonTopology empty{"t", 3, {}};
  const TopologyReport r2 = validate_topology(empty);
  CHECK_FALSE(r2.ok);
  CHECK(r2.violations[0].find("empty") != std::string::npos);

  SkeletonTopology loop{"t", 2, {{1, 1}}};
  CHECK_FALSE(validate_topology(loop).ok);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("mix_seed separates streams deterministically") {
  CHECK(mix_seed(1, 0) == mix_seed(1, 0));
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}
