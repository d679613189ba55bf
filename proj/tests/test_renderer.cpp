#include <doctest.h>

#include <cmath>
#include <random>

#include "skeladapt/renderer.hpp"

using namespace skeladapt;

namespace {

const SkeletonTopology kBone{"bone", 2, {{0, 1}}};
const SkeletonTopology kElbow{"elbow", 3, {{0, 1}, {1, 2}}};

}  // namespace

TEST_CASE("point-segment distance on the canonical cases") {
  CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == 1.0);
  CHECK(point_segment_distance({2, 0}, {-1, 0}, {1, 0}) == 1.0);
  CHECK(point_segment_distance({3, 4}, {0, 0}, {0, 0}) == 5.0);
}

TEST_CASE("pixel centers on the bone render to exactly one") {
  // row 64 of a 128 grid has normalized y = 1/128; run the bone along it
  RenderConfig cfg;
  KeypointSet kps{{{-0.5, 1.0 / 128}, {0.5, 1.0 / 128}}};
  const Tensor img = render_skeleton<float>(kps, kBone, cfg);
  CHECK(img.at(0, 0, 64, 64) == 1.0f);
  CHECK(img.at(0, 0, 64, 32) == 1.0f);
  for (size_t i = 0; i < img.size(); ++i) {
    CHECK(img[i] >= 0.0f);  // ideal range is (0,1]; far pixels underflow to 0
    CHECK(img[i] <= 1.0f);
  }

  // with a falloff wide enough to avoid underflow the range is strict
  RenderConfig wide;
  wide.resolution = 32;
  wide.sigma = 0.5;
  const Tensor soft = render_skeleton<float>(kps, kBone, wide);
  for (size_t i = 0; i < soft.size(); ++i) {
    CHECK(soft[i] > 0.0f);
    CHECK(soft[i] <= 1.0f);
  }
}

TEST_CASE("pixel at one falloff width from the bone renders to exp(-1)") {
  RenderConfig cfg;
  cfg.sigma = 2.0 / 128;  // exactly one pixel pitch
  KeypointSet kps{{{-0.5, 1.0 / 128}, {0.5, 1.0 / 128}}};
  const TensorD img = render_skeleton<double>(kps, kBone, cfg);
  CHECK(img.at(0, 0, 65, 64) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(img.at(0, 0, 66, 64) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("coincident keypoints render the isotropic point kernel") {
  RenderConfig cfg;
  cfg.resolution = 64;
  const Vec2 center{0.3, -0.2};
  KeypointSet kps{{center, center, center}};
  const TensorD img = render_skeleton<double>(kps, kElbow, cfg);
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  for (int y = 0; y < 64; y += 5)
    for (int x = 0; x < 64; x += 5) {
      const Vec2 u = normalize_coord({double(x), double(y)}, 64, 64);
      const Vec2 d = u - center;
      const double want = std::exp(-dot(d, d) * inv_s2);
      CHECK(std::abs(img.at(0, 0, y, x) - want) <= 1e-12);
    }
}

TEST_CASE("render rejects keypoint count mismatch") {
  RenderConfig cfg;
  KeypointSet kps{{{0, 0}}};
  CHECK_THROWS_AS(render_skeleton<float>(kps, kBone, cfg), std::invalid_argument);
}

TEST_CASE("render gradient matches central finite differences") {
  RenderConfig cfg;
  cfg.resolution = 32;
  cfg.sigma = 0.15;  // smooth across the coarse grid so FD is well conditioned
  KeypointSet kps{{{-0.6596, -0.574}, {-0.1788, -0.468}, {0.2166, 0.3243}, {0.5831, 0.5796}}};
  SkeletonTopology topo{"pair", 4, {{0, 1}, {2, 3}}};

  // guard: no pixel sits near an edge-minimizer tie, so the min is smooth
  // everywhere the finite differences look
  double min_gap = std::numeric_limits<double>::max();
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const Vec2 u = normalize_coord({double(x), double(y)}, 32, 32);
      const double d0 = point_segment_distance(u, kps.pts[0], kps.pts[1]);
      const double d1 = point_segment_distance(u, kps.pts[2], kps.pts[3]);
      min_gap = std::min(min_gap, std::abs(d0 - d1));
    }
  REQUIRE(min_gap > 1e-3);

  TensorD ones(1, 1, 32, 32);
  ones.fill(1.0);
  const std::vector<Vec2> dk = render_skeleton_backward<double>(ones, kps, topo, cfg);

  auto loss = [&](const KeypointSet& k) {
    const TensorD img = render_skeleton<double>(k, topo, cfg);
    double s = 0;
    for (size_t i = 0; i < img.size(); ++i) s += img[i];
    return s;
  };

  const double h = 1e-4;
  for (size_t j = 0; j < kps.pts.size(); ++j) {
    for (int axis = 0; axis < 2; ++axis) {
      KeypointSet kp = kps, km = kps;
      (axis == 0 ? kp.pts[j].x : kp.pts[j].y) += h;
      (axis == 0 ? km.pts[j].x : km.pts[j].y) -= h;
      const double fd = (loss(kp) - loss(km)) / (2 * h);
      const double an = axis == 0 ? dk[j].x : dk[j].y;
      CHECK(std::abs(fd - an) < 1e-3 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("batched render matches per-sample renders") {
  RenderConfig cfg;
  cfg.resolution = 32;
  std::vector<KeypointSet> batch{{{{-0.3, 0.1}, {0.4, -0.2}}}, {{{0.0, 0.5}, {-0.5, -0.5}}}};
  const Tensor imgs = render_batch<float>(batch, kBone, cfg);
  CHECK(imgs.n() == 2);
  for (int n = 0; n < 2; ++n) {
    const Tensor one = render_skeleton<float>(batch[n], kBone, cfg);
    CHECK(imgs.slice(n).max_abs_diff(one) == 0.0f);
  }
}

TEST_CASE("pyramid produces the configured ladder of extents") {
  Tensor x(2, 1, 128, 128);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> dist(0.f, 1.f);
  for (size_t i = 0; i < x.size(); ++i) x[i] = dist(rng);

  const auto levels = image_pyramid<float>(x, {1.0, 0.5, 0.25});
  REQUIRE(levels.size() == 3);
  CHECK(levels[0].h() == 128);
  CHECK(levels[1].h() == 64);
  CHECK(levels[2].h() == 32);
  CHECK(levels[0].max_abs_diff(x) == 0.0f);

  // mean pooling preserves the total mass at every level
  auto mean_of = [](const Tensor& t) {
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += t[i];
    return s / double(t.size());
  };
  const double m0 = mean_of(levels[0]);
  CHECK(std::abs(mean_of(levels[1]) - m0) < 1e-5);
  CHECK(std::abs(mean_of(levels[2]) - m0) < 1e-5);
}

TEST_CASE("pyramid keeps constant images constant") {
  Tensor x(1, 1, 64, 64);
  x.fill(0.37f);
  for (const Tensor& level : image_pyramid<float>(x, {1.0, 0.5, 0.25}))
    for (size_t i = 0; i < level.size(); ++i) CHECK(level[i] == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("pyramid scale validation") {
  Tensor x(1, 1, 128, 128);
  CHECK_THROWS_AS(image_pyramid<float>(x, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(image_pyramid<float>(x, {1.5}), std::invalid_argument);
  CHECK_THROWS_AS(image_pyramid<float>(x, {0.3}), std::invalid_argument);       // 38.4 px
  CHECK_THROWS_AS(image_pyramid<float>(x, {1.0 / 64}), std::invalid_argument);  // 2 px, too small
  CHECK_THROWS_AS(image_pyramid<float>(x, {}), std::invalid_argument);
  CHECK(image_pyramid<float>(x, {1.0}).size() == 1);
}

TEST_CASE("pyramid backward is the adjoint of forward") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  TensorD x(2, 1, 16, 16);
  for (size_t i = 0; i < x.size(); ++i) x[i] = dist(rng);
  const std::vector<double> scales{1.0, 0.5, 0.25};
  const auto levels = image_pyramid<double>(x, scales);

  std::vector<TensorD> d;
  for (const TensorD& l : levels) {
    TensorD g(l.n(), l.c(), l.h(), l.w());
    for (size_t i = 0; i < g.size(); ++i) g[i] = dist(rng);
    d.push_back(std::move(g));
  }

  double lhs = 0;
  for (size_t l = 0; l < levels.size(); ++l)
    for (size_t i = 0; i < levels[l].size(); ++i) lhs += levels[l][i] * d[l][i];

  const TensorD dx = image_pyramid_backward<double>(d, scales, 16);
  double rhs = 0;
  for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx[i];
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("keypoint prior renders exactly like the renderer") {
  RenderConfig cfg;
  cfg.resolution = 64;
  PriorElement q;
  q.keypoints = KeypointSet{{{-0.2, 0.3}, {0.4, -0.1}}};
  const Tensor a = render_prior<float>(q, kBone, cfg);
  const Tensor b = render_skeleton<float>(q.keypoints, kBone, cfg);
  CHECK(a.max_abs_diff(b) == 0.0f);
}

TEST_CASE("raster prior is rescaled, resampled and clamped") {
  RenderConfig cfg;
  cfg.resolution = 128;

  PriorElement q;
  q.is_raster = true;
  q.raster = Tensor(1, 1, 64, 64);
  q.raster.fill(128.0f);  // 8-bit-range payload
  const Tensor img = render_prior<float>(q, kBone, cfg);
  CHECK(img.h() == 128);
  CHECK(img.w() == 128);
  for (size_t i = 0; i < img.size(); ++i) CHECK(img[i] == doctest::Approx(128.0f / 255.0f).epsilon(1e-6));

  // already-normalized payload passes through untouched apart from the clamp
  PriorElement unit;
  unit.is_raster = true;
  unit.raster = Tensor(1, 1, 128, 128);
  unit.raster.fill(0.75f);
  const Tensor u = render_prior<float>(unit, kBone, cfg);
  for (size_t i = 0; i < u.size(); ++i) CHECK(u[i] == 0.75f);

  PriorElement bad;
  bad.is_raster = true;
  CHECK_THROWS_AS(render_prior<float>(bad, kBone, cfg), std::invalid_argument);
}

TEST_CASE("raster prior upsample preserves extrema bounds") {
  RenderConfig cfg;
  cfg.resolution = 128;
  PriorElement q;
  q.is_raster = true;
  q.raster = Tensor(1, 1, 64, 64);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> dist(0.1f, 0.9f);
  float lo = 1.f, hi = 0.f;
  for (size_t i = 0; i < q.raster.size(); ++i) {
    q.raster[i] = dist(rng);
    lo = std::min(lo, q.raster[i]);
    hi = std::max(hi, q.raster[i]);
  }
  const Tensor img = render_prior<float>(q, kBone, cfg);
  for (size_t i = 0; i < img.size(); ++i) {
    CHECK(img[i] >= lo - 1e-6f);
    CHECK(img[i] <= hi + 1e-6f);
  }
}
