#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "skeladapt/eval.hpp"
#include "skeladapt/train.hpp"

namespace skeladapt {

/// One adaptation recipe in the standard comparison set. kSourceOnly is the
/// unadapted baseline; the single-toggle arms isolate one loss term each.
enum class Arm {
  kSourceOnly,
  kBnOnly,
  kDiscOnly,
  kGeoOnly,
  kFull,
  kSingleScale,  // full set, discriminator on the native scale only
  kSourceFree,   // full set, prior in place of source annotations
};

inline constexpr std::array<Arm, 7> kAllArms = {Arm::kSourceOnly, Arm::kBnOnly,      Arm::kDiscOnly, Arm::kGeoOnly,
                                                Arm::kFull,       Arm::kSingleScale, Arm::kSourceFree};

const char* to_string(Arm arm);
std::optional<Arm> arm_from_string(std::string_view name);

/// The synthetic two-domain benchmark: labeled source, unlabeled target,
/// held-out labeled eval splits, and a pose prior for source-free runs.
struct BenchmarkConfig {
  int n_source = 2000;
  int n_target = 2000;
  int n_eval = 512;
  int base_width = 8;
  int batch_size = 16;
  int pretrain_iters = 1000;
  int adapt_iters = 300;
  int eval_every = 0;  // progress snapshots on the target eval split; 0 = off
  DomainShiftConfig shift = default_shift_config();
};

struct BenchmarkData {
  SampleStore source;
  SampleStore target;
  SampleStore source_eval;
  SampleStore target_eval;
  PriorSet prior;         // source-distribution poses, no images behind them
  double gt_spread = 0;   // collapse score of the target eval labels
};

/// All stores are derived deterministically from (cfg, seed); eval splits use
/// separate generation streams from the train splits.
BenchmarkData make_benchmark_data(const BenchmarkConfig& cfg, uint64_t seed);

/// Training configuration for one arm. The collapse threshold is the spread
/// level below which the run warns, conventionally 10% of the labels' spread.
TrainConfig arm_train_config(const BenchmarkConfig& cfg, Arm arm, uint64_t seed, double collapse_threshold);

struct ArmResult {
  Arm arm = Arm::kSourceOnly;
  uint64_t seed = 0;
  EvalReport target;               // metrics on the held-out target split
  bool collapse_warned = false;
  uint64_t source_image_reads = 0; // source pixels fetched while adapting
  double seconds = 0;
  Checkpoint ckpt;
};

PretrainResult benchmark_pretrain(const BenchmarkConfig& cfg, uint64_t seed, BenchmarkData& data,
                                  MetricsSink* metrics = nullptr);

/// Runs one arm from a shared pretraining checkpoint and evaluates it on the
/// held-out target split. kSourceOnly skips adaptation.
ArmResult run_arm(const BenchmarkConfig& cfg, Arm arm, uint64_t seed, const Checkpoint& pretrain_ckpt,
                  BenchmarkData& data, MetricsSink* metrics = nullptr);

}  // namespace skeladapt
