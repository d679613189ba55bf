#include <benchmark/benchmark.h>

#include <random>

#include "skeladapt/ablation.hpp"
#include "skeladapt/model.hpp"
#include "skeladapt/nn/norm.hpp"
#include "skeladapt/renderer.hpp"
#include "skeladapt/train.hpp"

using namespace skeladapt;

namespace {

Tensor random_tensor(int n, int c, int h, int w, uint64_t seed) {
  Tensor t(n, c, h, w);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.f, 1.f);
  for (size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

KeypointSet random_pose(uint64_t seed) { return generate_pose(seed, default_shift_config(), DomainTag::kSource); }

void BM_Conv3x3(benchmark::State& state) {
  const int c = int(state.range(0)), r = int(state.range(1));
  std::mt19937_64 rng(1);
  nn::Conv2d<float> conv(c, c, 3, 1, 1, false);
  conv.init_he(rng);
  const Tensor x = random_tensor(1, c, r, r, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, nn::Mode::kEval, DomainTag::kSource, nullptr));
  state.SetItemsProcessed(state.iterations() * int64_t(c) * c * 9 * r * r);
}
BENCHMARK(BM_Conv3x3)->Args({8, 128})->Args({64, 32})->Args({128, 16});

void BM_DomainAlignForwardTrain(benchmark::State& state) {
  nn::DomainAlignNorm<float> norm(8);
  const Tensor x = random_tensor(16, 8, 128, 128, 3);
  for (auto _ : state) benchmark::DoNotOptimize(norm.forward(x, nn::Mode::kTrain, DomainTag::kTarget, nullptr));
  state.SetItemsProcessed(state.iterations() * int64_t(x.size()));
}
BENCHMARK(BM_DomainAlignForwardTrain);

void BM_NetForward(benchmark::State& state) {
  NetworkSpec spec;
  spec.base_width = int(state.range(0));
  KeypointNet<float> net = make_keypoint_net<float>(spec, NormKind::kBatch, 1);
  const Tensor x = random_tensor(1, 1, 128, 128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_heatmaps(x, DomainTag::kSource, nn::Mode::kTrain));
}
BENCHMARK(BM_NetForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SoftArgmax(benchmark::State& state) {
  const Tensor heat = random_tensor(16, 12, 128, 128, 5);
  const SoftArgmaxConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(soft_argmax(heat, cfg));
  state.SetItemsProcessed(state.iterations() * 16 * 12);
}
BENCHMARK(BM_SoftArgmax)->Unit(benchmark::kMillisecond);

void BM_RenderSkeleton(benchmark::State& state) {
  const SkeletonTopology topo = stick_figure_topology();
  const KeypointSet kps = random_pose(7);
  const RenderConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(render_skeleton<float>(kps, topo, cfg));
}
BENCHMARK(BM_RenderSkeleton);

void BM_RenderBackward(benchmark::State& state) {
  const SkeletonTopology topo = stick_figure_topology();
  const KeypointSet kps = random_pose(8);
  const RenderConfig cfg;
  const Tensor dimg = random_tensor(1, 1, cfg.resolution, cfg.resolution, 9);
  for (auto _ : state) benchmark::DoNotOptimize(render_skeleton_backward<float>(dimg, kps, topo, cfg));
}
BENCHMARK(BM_RenderBackward);

void BM_GenerateFigure(benchmark::State& state) {
  const DomainShiftConfig cfg = default_shift_config();
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_figure(seed++, cfg, DomainTag::kTarget));
}
BENCHMARK(BM_GenerateFigure);

// Whole-loop costs, setup included: these time one iteration end to end the
// way the trainer runs it, which is what the wall-clock budget cares about.
void BM_PretrainOneIter(benchmark::State& state) {
  BenchmarkConfig bench;
  bench.base_width = int(state.range(0));
  SampleStore src = SampleStore::synthetic(bench.shift, DomainTag::kSource, 64, 11);
  TrainConfig cfg = arm_train_config(bench, Arm::kFull, 1, 0);
  cfg.pretrain_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(pretrain_source(cfg, src));
}
BENCHMARK(BM_PretrainOneIter)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_AdaptOneIter(benchmark::State& state) {
  BenchmarkConfig bench;
  bench.base_width = int(state.range(0));
  bench.pretrain_iters = 5;
  SampleStore src = SampleStore::synthetic(bench.shift, DomainTag::kSource, 64, 12);
  SampleStore tgt = SampleStore::synthetic(bench.shift, DomainTag::kTarget, 64, 13);
  TrainConfig cfg = arm_train_config(bench, Arm::kFull, 1, 0);
  const Checkpoint pre = pretrain_source(cfg, src).ckpt;
  cfg.adapt_iters = 1;
  RealBranch real;
  real.source_labels = &src;
  for (auto _ : state) benchmark::DoNotOptimize(adapt(cfg, pre, tgt, real));
}
BENCHMARK(BM_AdaptOneIter)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
