#include "skeladapt/ablation.hpp"

#include <chrono>
#include <stdexcept>

namespace skeladapt {
namespace {

constexpr uint64_t kSourceData = 0x50c1;
constexpr uint64_t kTargetData = 0x7a67;
constexpr uint64_t kSourceEval = 0x50c2;
constexpr uint64_t kTargetEval = 0x7a68;
constexpr uint64_t kPriorData = 0x9b10;

}  // namespace

const char* to_string(Arm arm) {
  switch (arm) {
    case Arm::kSourceOnly: return "source";
    case Arm::kBnOnly: return "bn";
    case Arm::kDiscOnly: return "disc";
    case Arm::kGeoOnly: return "geo";
    case Arm::kFull: return "full";
    case Arm::kSingleScale: return "single";
    case Arm::kSourceFree: return "sourcefree";
  }
  return "?";
}

std::optional<Arm> arm_from_string(std::string_view name) {
  for (Arm a : kAllArms)
    if (name == to_string(a)) return a;
  return std::nullopt;
}

BenchmarkData make_benchmark_data(const BenchmarkConfig& cfg, uint64_t seed) {
  BenchmarkData d{
      SampleStore::synthetic(cfg.shift, DomainTag::kSource, cfg.n_source, mix_seed(seed, kSourceData)),
      SampleStore::synthetic(cfg.shift, DomainTag::kTarget, cfg.n_target, mix_seed(seed, kTargetData)),
      SampleStore::synthetic(cfg.shift, DomainTag::kSource, cfg.n_eval, mix_seed(seed, kSourceEval)),
      SampleStore::synthetic(cfg.shift, DomainTag::kTarget, cfg.n_eval, mix_seed(seed, kTargetEval)),
      build_prior_synthetic(cfg.shift, DomainTag::kSource, cfg.n_source, mix_seed(seed, kPriorData)),
      0.0,
  };
  std::vector<size_t> all(d.target_eval.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  d.gt_spread = collapse_score(d.target_eval.batch_labels(all));
  return d;
}

TrainConfig arm_train_config(const BenchmarkConfig& cfg, Arm arm, uint64_t seed, double collapse_threshold) {
  TrainConfig t;
  t.net.base_width = cfg.base_width;
  t.disc.base_width = cfg.base_width;
  t.batch_size = cfg.batch_size;
  t.pretrain_iters = cfg.pretrain_iters;
  t.adapt_iters = cfg.adapt_iters;
  t.seed = seed;
  t.collapse_threshold = collapse_threshold;
  t.use_dal = arm == Arm::kBnOnly || arm == Arm::kFull || arm == Arm::kSingleScale || arm == Arm::kSourceFree;
  t.use_adversarial = arm == Arm::kDiscOnly || arm == Arm::kFull || arm == Arm::kSingleScale || arm == Arm::kSourceFree;
  t.use_geometric = arm == Arm::kGeoOnly || arm == Arm::kFull || arm == Arm::kSingleScale || arm == Arm::kSourceFree;
  if (arm == Arm::kSingleScale) t.disc.scales = {1.0};
  t.source_free = arm == Arm::kSourceFree;
  return t;
}

PretrainResult benchmark_pretrain(const BenchmarkConfig& cfg, uint64_t seed, BenchmarkData& data,
                                  MetricsSink* metrics) {
  return pretrain_source(arm_train_config(cfg, Arm::kFull, seed, 0.0), data.source, metrics);
}

ArmResult run_arm(const BenchmarkConfig& cfg, Arm arm, uint64_t seed, const Checkpoint& pretrain_ckpt,
                  BenchmarkData& data, MetricsSink* metrics) {
  const auto t0 = std::chrono::steady_clock::now();
  ArmResult r;
  r.arm = arm;
  r.seed = seed;
  const TrainConfig tc = arm_train_config(cfg, arm, seed, 0.1 * data.gt_spread);
  data.source.reset_image_reads();
  if (arm == Arm::kSourceOnly) {
    r.ckpt = pretrain_ckpt;
  } else {
    RealBranch real;
    if (arm == Arm::kSourceFree)
      real.prior = &data.prior;
    else
      real.source_labels = &data.source;
    AdaptHooks hooks;
    if (cfg.eval_every > 0) {
      hooks.eval_store = &data.target_eval;
      hooks.eval_every = cfg.eval_every;
      hooks.eval_max = cfg.n_eval;
    }
    AdaptResult a = adapt(tc, pretrain_ckpt, data.target, real, metrics, hooks);
    r.collapse_warned = a.collapse_warned;
    r.ckpt = std::move(a.ckpt);
  }
  r.source_image_reads = data.source.image_reads();
  KeypointNet<float> net = net_from_checkpoint(r.ckpt, tc.net);
  r.target = evaluate(net, data.target_eval, tc.readout, 0.1, cfg.n_eval, cfg.batch_size);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace skeladapt
