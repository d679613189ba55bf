#include <doctest.h>

#include <cmath>
#include <random>

#include "skeladapt/data.hpp"
#include "skeladapt/eval.hpp"

using namespace skeladapt;

namespace {

std::vector<KeypointSet> random_batch(int n, int k, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<KeypointSet> out(n);
  for (auto& s : out) {
    s.pts.resize(k);
    for (auto& p : s.pts) p = {uni(rng), uni(rng)};
  }
  return out;
}

// 90 degree rotation: (x, y) -> (-y, x), exact in floating point
std::vector<KeypointSet> quarter_turn(const std::vector<KeypointSet>& in) {
  std::vector<KeypointSet> out(in.size());
  for (size_t n = 0; n < in.size(); ++n)
    for (const Vec2& p : in[n].pts) out[n].pts.push_back({-p.y, p.x});
  return out;
}

}  // namespace

TEST_CASE("pck is 1 for exact predictions and counts the boundary as correct") {
  const std::vector<KeypointSet> gt{KeypointSet{{{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.5}}}};
  CHECK(pck(gt, gt, 0.1) == 1.0);

  // bbox max side is exactly 1; alpha 0.125 puts the threshold at 0.125,
  // a power of two, so the displaced distances compare equal, not above
  std::vector<KeypointSet> pred = gt;
  for (auto& p : pred[0].pts) p.x += 0.125;
  CHECK(pck(pred, gt, 0.125) == 1.0);

  // any further displacement falls outside
  for (auto& p : pred[0].pts) p.x += 0.01;
  CHECK(pck(pred, gt, 0.125) == 0.0);
}

TEST_CASE("pck counts hits per keypoint") {
  const std::vector<KeypointSet> gt{KeypointSet{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}}};
  std::vector<KeypointSet> pred = gt;
  pred[0].pts[2] = {5.0, 5.0};
  pred[0].pts[3] = {-5.0, 5.0};
  CHECK(pck(pred, gt, 0.1) == 0.5);

  std::vector<double> per_kp;
  const std::vector<KeypointSet> gt2{gt[0], gt[0]};
  std::vector<KeypointSet> pred2{gt[0], pred[0]};
  CHECK(pck(pred2, gt2, 0.1, &per_kp) == 0.75);
  REQUIRE(per_kp.size() == 4);
  CHECK(per_kp[0] == 1.0);
  CHECK(per_kp[1] == 1.0);
  CHECK(per_kp[2] == 0.5);
  CHECK(per_kp[3] == 0.5);
}

TEST_CASE("pck rejects mismatched or degenerate input") {
  const std::vector<KeypointSet> a{KeypointSet{{{0.0, 0.0}, {1.0, 1.0}}}};
  const std::vector<KeypointSet> b{KeypointSet{{{0.0, 0.0}}}};
  CHECK_THROWS_AS(pck(a, b, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(pck({}, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(pck(a, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pck(a, a, -0.1), std::invalid_argument);
}

TEST_CASE("pck is bit-identical under a joint quarter turn of pred and gt") {
  const auto gt = random_batch(8, 12, 21);
  auto pred = random_batch(8, 12, 22);
  // mix in a few near-threshold predictions
  for (size_t n = 0; n < pred.size(); ++n)
    for (size_t j = 0; j < 6; ++j) pred[n].pts[j] = gt[n].pts[j] + Vec2{0.01 * double(j), -0.008 * double(j)};

  const double base = pck(pred, gt, 0.1);
  CHECK(base > 0.0);
  CHECK(base < 1.0);
  CHECK(pck(quarter_turn(pred), quarter_turn(gt), 0.1) == base);
}

TEST_CASE("mse averages squared error over every coordinate") {
  const auto gt = random_batch(3, 5, 31);
  CHECK(mse(gt, gt) == 0.0);

  std::vector<KeypointSet> zero(2, KeypointSet{{{0.0, 0.0}, {0.0, 0.0}}});
  std::vector<KeypointSet> off(2, KeypointSet{{{0.1, 0.1}, {0.1, 0.1}}});
  CHECK(mse(off, zero) == doctest::Approx(0.01).epsilon(1e-12));

  std::vector<KeypointSet> gt12(1);
  gt12[0].pts.assign(12, Vec2{0.0, 0.0});
  std::vector<KeypointSet> pred12 = gt12;
  pred12[0].pts[5].x = 0.2;
  CHECK(mse(pred12, gt12) == doctest::Approx(0.04 / 24.0).epsilon(1e-12));
}

TEST_CASE("mse is permutation invariant over the batch") {
  const auto gt = random_batch(6, 4, 41);
  const auto pred = random_batch(6, 4, 42);
  const std::vector<size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<KeypointSet> gt_p, pred_p;
  for (size_t i : perm) {
    gt_p.push_back(gt[i]);
    pred_p.push_back(pred[i]);
  }
  CHECK(mse(pred_p, gt_p) == doctest::Approx(mse(pred, gt)).epsilon(1e-12));
}

TEST_CASE("mse rejects mismatched shapes") {
  const std::vector<KeypointSet> a{KeypointSet{{{0.0, 0.0}, {1.0, 1.0}}}};
  const std::vector<KeypointSet> b{KeypointSet{{{0.0, 0.0}}}};
  CHECK_THROWS_AS(mse(a, b), std::invalid_argument);
  CHECK_THROWS_AS(mse({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(mse(a, {a[0], a[0]}), std::invalid_argument);
}

TEST_CASE("collapse score is exactly zero for any constant batch") {
  for (const Vec2 c : {Vec2{0.0, 0.0}, Vec2{0.3, -0.7}, Vec2{0.1234567, 0.987}}) {
    std::vector<KeypointSet> batch(5, KeypointSet{{c, c, c}});
    CHECK(collapse_score(batch) == 0.0);
  }
}

TEST_CASE("collapse score of a uniform spread is two thirds") {
  // symmetric grid over [-1,1]; its population variance per axis is
  // (1/3)(1 - 1/n^2), within 1e-4 of the continuous value at n=100
  const int n = 100;
  std::vector<KeypointSet> batch(n);
  for (int i = 0; i < n; ++i) {
    const double v = -1.0 + (2.0 * i + 1.0) / n;
    const double w = 1.0 - (2.0 * i + 1.0) / n;
    batch[i].pts = {{v, w}, {w, v}};
  }
  CHECK(collapse_score(batch) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("collapse score separates healthy spread from degenerate batches") {
  const DomainShiftConfig cfg = default_shift_config();
  std::vector<KeypointSet> healthy;
  for (int i = 0; i < 16; ++i) healthy.push_back(generate_figure(500 + i, cfg, DomainTag::kTarget).keypoints);
  CHECK(collapse_score(healthy) > 0.005);

  std::vector<KeypointSet> tight;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> jitter(-1e-4, 1e-4);
  for (int i = 0; i < 16; ++i) {
    KeypointSet s;
    for (int j = 0; j < 12; ++j) s.pts.push_back({jitter(rng), jitter(rng)});
    tight.push_back(s);
  }
  CHECK(collapse_score(tight) < 1e-6);

  CHECK_THROWS_AS(collapse_score({healthy[0]}), std::invalid_argument);
  CHECK_THROWS_AS(collapse_score({}), std::invalid_argument);
}

TEST_CASE("eval report round-trips through JSON") {
  EvalReport r;
  r.pck = 0.8125;
  r.mse = 0.015625;
  r.collapse = 0.25;
  r.per_keypoint_pck = {1.0, 0.5, 0.75};
  r.samples = 64;
  r.alpha = 0.1;
  r.config_hash = 0xdeadbeefcafe1234ull;
  r.checkpoint_id = "run-a/ckpt-300";

  const EvalReport back = EvalReport::from_json(r.to_json());
  CHECK(back.pck == r.pck);
  CHECK(back.mse == r.mse);
  CHECK(back.collapse == r.collapse);
  CHECK(back.per_keypoint_pck == r.per_keypoint_pck);
  CHECK(back.samples == r.samples);
  CHECK(back.alpha == r.alpha);
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.checkpoint_id == r.checkpoint_id);
}

TEST_CASE("evaluate aggregates a store deterministically") {
  const DomainShiftConfig cfg = default_shift_config();
  SampleStore store = SampleStore::synthetic(cfg, DomainTag::kSource, 6, 77);
  NetworkSpec spec;
  spec.base_width = 2;
  KeypointNet<float> net = make_keypoint_net<float>(spec, NormKind::kBatch, 123);
  SoftArgmaxConfig readout;

  const EvalReport a = evaluate(net, store, readout, 0.1, 0, 4);
  CHECK(a.samples == 6);
  CHECK(a.alpha == 0.1);
  CHECK(a.pck >= 0.0);
  CHECK(a.pck <= 1.0);
  CHECK(a.mse >= 0.0);
  CHECK(a.collapse >= 0.0);
  CHECK(a.per_keypoint_pck.size() == 12);

  const EvalReport b = evaluate(net, store, readout, 0.1, 0, 4);
  CHECK(b.pck == a.pck);
  CHECK(b.mse == a.mse);
  CHECK(b.collapse == a.collapse);

  const EvalReport c = evaluate(net, store, readout, 0.1, 3, 4);
  CHECK(c.samples == 3);

  SampleStore empty = SampleStore::synthetic(cfg, DomainTag::kSource, 0, 1);
  CHECK_THROWS_AS(evaluate(net, empty, readout), std::invalid_argument);
}
