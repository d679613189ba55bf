#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "skeladapt/geometry.hpp"
#include "skeladapt/renderer.hpp"

using namespace skeladapt;

namespace {

TensorD smooth_blob(int res) {
  TensorD img(1, 1, res, res);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      const Vec2 u = normalize_coord({double(x), double(y)}, res, res);
      img.at(0, 0, y, x) = std::exp(-(u.x * u.x * 2.1 + u.y * u.y * 1.3)) + 0.3 * std::cos(2.0 * u.x + u.y);
    }
  return img;
}

}  // namespace

TEST_CASE("zero rotation is the identity on images and keypoints") {
  const TensorD img = smooth_blob(32);
  const TensorD out = transform_image<double>(img, {0.0}, 0.0);
  CHECK(img.max_abs_diff(out) < 1e-12);

  KeypointSet y{{{0.3, -0.7}, {-0.1, 0.2}}};
  const KeypointSet z = transform_keypoints(y, {0.0});
  for (int j = 0; j < y.k(); ++j) {
    CHECK(z.pts[j].x == y.pts[j].x);
    CHECK(z.pts[j].y == y.pts[j].y);
  }
}

TEST_CASE("quarter-turn image rotation is an exact index permutation") {
  const int res = 16;
  TensorD img(1, 1, res, res);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (size_t i = 0; i < img.size(); ++i) img[i] = dist(rng);

  const TensorD out = transform_image<double>(img, {std::numbers::pi / 2}, -7.0);
  for (int oy = 0; oy < res; ++oy)
    for (int ox = 0; ox < res; ++ox) CHECK(out.at(0, 0, oy, ox) == img.at(0, 0, res - 1 - ox, oy));
}

TEST_CASE("half-turn applied twice returns the original image") {
  const TensorD img = smooth_blob(48);
  const RigidTransform2D g{std::numbers::pi};
  const TensorD twice = transform_image<double>(transform_image<double>(img, g, 0.0), g, 0.0);
  CHECK(img.max_abs_diff(twice) < 0.02);
}

TEST_CASE("rotation then counter-rotation restores a smooth image approximately") {
  const TensorD img = smooth_blob(64);
  const RigidTransform2D g{0.37};
  const TensorD back = transform_image<double>(transform_image<double>(img, g, 0.0), inverse(g), 0.0);
  // ignore the frame edge where out-of-frame fill leaked in
  double worst = 0;
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) worst = std::max(worst, std::abs(img.at(0, 0, y, x) - back.at(0, 0, y, x)));
  CHECK(worst < 0.02);
}

TEST_CASE("keypoint rotation follows the rotation matrix and inverts cleanly") {
  const KeypointSet y{{{1.0, 0.0}}};
  const KeypointSet q = transform_keypoints(y, {std::numbers::pi / 2});
  CHECK(q.pts[0].x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.pts[0].y == doctest::Approx(1.0).epsilon(1e-12));

  const KeypointSet r{{{0.4, -0.3}, {-0.8, 0.1}}};
  const RigidTransform2D g{0.83};
  const KeypointSet back = transform_keypoints(transform_keypoints(r, g), inverse(g));
  for (int j = 0; j < r.k(); ++j) {
    CHECK(std::abs(back.pts[j].x - r.pts[j].x) < 1e-6);
    CHECK(std::abs(back.pts[j].y - r.pts[j].y) < 1e-6);
  }
}

TEST_CASE("equivariance gap is zero when the branches agree") {
  std::vector<KeypointSet> b{{{{0.2, 0.3}, {-0.4, 0.1}}}, {{{0.0, -0.6}, {0.5, 0.5}}}};
  CHECK(loss_geo_from_coords(b, b, {0.0}) == 0.0);

  // oracle model: the rotated branch returns exactly R * plain branch
  const RigidTransform2D g{0.52};
  std::vector<KeypointSet> a;
  for (const KeypointSet& kp : b) a.push_back(transform_keypoints(kp, g));
  CHECK(loss_geo_from_coords(a, b, g) <= 1e-6);
}

TEST_CASE("equivariance gap arithmetic on a synthetic mismatch") {
  std::vector<KeypointSet> b{{{{0.1, 0.2}, {-0.3, 0.4}}}};
  std::vector<KeypointSet> a;
  a.push_back(b[0]);
  for (Vec2& p : a[0].pts) {
    p.x += 0.1;
    p.y += 0.1;
  }
  CHECK(loss_geo_from_coords(a, b, {0.0}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("equivariance gap is invariant under batch permutation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  std::vector<KeypointSet> a(4), b(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) {
      a[i].pts.push_back({dist(rng), dist(rng)});
      b[i].pts.push_back({dist(rng), dist(rng)});
    }
  const RigidTransform2D g{-0.4};
  const double base = loss_geo_from_coords(a, b, g);
  std::vector<KeypointSet> ap{a[2], a[0], a[3], a[1]}, bp{b[2], b[0], b[3], b[1]};
  CHECK(loss_geo_from_coords(ap, bp, g) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("equivariance gap gradients match finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<KeypointSet> a(2), b(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      a[i].pts.push_back({dist(rng), dist(rng)});
      b[i].pts.push_back({dist(rng), dist(rng)});
    }
  const RigidTransform2D g{0.3};

  GeoLossGrads grads;
  loss_geo_from_coords(a, b, g, true, &grads);

  const double h = 1e-7;
  auto fd_check = [&](std::vector<KeypointSet>& branch, const std::vector<std::vector<Vec2>>& an) {
    for (size_t i = 0; i < branch.size(); ++i)
      for (size_t j = 0; j < branch[i].pts.size(); ++j)
        for (int axis = 0; axis < 2; ++axis) {
          double& coord = axis == 0 ? branch[i].pts[j].x : branch[i].pts[j].y;
          const double keep = coord;
          coord = keep + h;
          const double lp = loss_geo_from_coords(a, b, g);
          coord = keep - h;
          const double lm = loss_geo_from_coords(a, b, g);
          coord = keep;
          const double fd = (lp - lm) / (2 * h);
          const double want = axis == 0 ? an[i][j].x : an[i][j].y;
          CHECK(std::abs(fd - want) < 1e-6);
        }
  };
  fd_check(a, grads.d_rotated_branch);
  fd_check(b, grads.d_plain_branch);
}

TEST_CASE("rendering commutes with rotation inside the frame") {
  const SkeletonTopology topo{"tri", 3, {{0, 1}, {1, 2}}};
  const KeypointSet y{{{-0.35, -0.25}, {0.1, 0.3}, {0.4, -0.15}}};
  const RigidTransform2D g{std::numbers::pi / 6};
  RenderConfig cfg;
  cfg.sigma = 0.08;  // wide enough for bilinear resampling to resolve the bones

  const Tensor rotated_render = render_skeleton<float>(transform_keypoints(y, g), topo, cfg);
  const Tensor rendered_rotated = transform_image<float>(render_skeleton<float>(y, topo, cfg), g, 0.0f);
  CHECK(rotated_render.max_abs_diff(rendered_rotated) < 0.05f);
}

TEST_CASE("angle sampling stays inside the configured range") {
  GeoConfig cfg;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform2D g = sample_rotation(cfg, rng);
    CHECK(g.angle >= cfg.angle_min);
    CHECK(g.angle <= cfg.angle_max);
  }
  std::mt19937_64 r1(5), r2(5);
  CHECK(sample_rotation(cfg, r1).angle == sample_rotation(cfg, r2).angle);
}
