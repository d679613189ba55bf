#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "skeladapt/adversarial.hpp"
#include "skeladapt/checkpoint.hpp"
#include "skeladapt/data.hpp"
#include "skeladapt/geometry.hpp"
#include "skeladapt/model.hpp"
#include "skeladapt/nn/adam.hpp"
#include "skeladapt/renderer.hpp"

namespace skeladapt {

struct TrainConfig {
  nn::AdamConfig adam;  // step size 2e-4, moment decays 0.5 / 0.999
  int batch_size = 16;
  int pretrain_iters = 1000;
  int adapt_iters = 600;
  // adaptation loss toggles
  bool use_dal = true;
  bool use_adversarial = true;
  bool use_geometric = true;
  bool source_free = false;
  // research knobs; the method itself uses the unweighted sum
  double w_disc = 1.0;
  double w_gen = 1.0;
  double w_geo = 1.0;
  uint64_t seed = 1;
  NetworkSpec net;
  DiscriminatorSpec disc;
  GeoConfig geo;
  SoftArgmaxConfig readout;
  RenderConfig render;
  // collapse warning threshold on the batch spread score; 0 disables
  double collapse_threshold = 0.0;
  int log_every = 1;
};

std::string train_config_to_json(const TrainConfig& cfg);

/// Applies the fields present in `text` onto `base`; absent fields keep the
/// base value, unknown fields are an error.
TrainConfig train_config_from_json(const std::string& text, TrainConfig base = {});

TrainConfig load_train_config(const std::filesystem::path& file, TrainConfig base = {});

/// Line-delimited JSON metrics stream; default-constructed sink discards.
class MetricsSink {
public:
  MetricsSink() = default;
  explicit MetricsSink(const std::filesystem::path& file) : out_(std::make_unique<std::ofstream>(file)) {
    if (!*out_) throw std::runtime_error("cannot open metrics file: " + file.string());
  }
  void log(const std::string& json_line) {
    if (out_) *out_ << json_line << "\n" << std::flush;
  }
  explicit operator bool() const { return bool(out_); }

private:
  std::unique_ptr<std::ofstream> out_;
};

// ---------------------------------------------------------------------------
// Checkpoint bridging.

Checkpoint snapshot_checkpoint(KeypointNet<float>& net, NormKind norm, const nn::Adam<float>* net_opt,
                               MultiScaleDiscriminator<float>* disc, const nn::Adam<float>* disc_opt,
                               int64_t iteration);

/// Rebuilds the keypoint network recorded in a checkpoint; refuses a spec
/// whose hash differs from the checkpoint's.
KeypointNet<float> net_from_checkpoint(const Checkpoint& ck, const NetworkSpec& spec);

NormKind checkpoint_norm_kind(const Checkpoint& ck);

// ---------------------------------------------------------------------------

struct PretrainResult {
  Checkpoint ckpt;
  double final_loss = 0;
};

/// Supervised heatmap regression on labeled source data with plain batch
/// normalization. Aborts with diagnostics if the loss diverges.
PretrainResult pretrain_source(const TrainConfig& cfg, SampleStore& source, MetricsSink* metrics = nullptr);

/// Supplier for the discriminator's real branch during adaptation: either
/// source annotations (labels only, never pixels) or a shape-prior set.
struct RealBranch {
  SampleStore* source_labels = nullptr;
  const PriorSet* prior = nullptr;
};

struct AdaptHooks {
  SampleStore* eval_store = nullptr;  // held-out labeled data for progress snapshots
  int eval_every = 0;
  int eval_max = 256;
};

struct AdaptResult {
  Checkpoint ckpt;
  bool collapse_warned = false;
};

/// The adaptation loop. `start` may be a pretraining checkpoint (batch-norm
/// kind: converted to per-domain normalization, discriminator freshly
/// initialized, iteration 0) or a mid-adaptation checkpoint (resumed
/// exactly). Per iteration: target forward in train mode with the TARGET
/// tag, one discriminator step, one generator step on the enabled terms.
AdaptResult adapt(const TrainConfig& cfg, const Checkpoint& start, SampleStore& target, const RealBranch& real,
                  MetricsSink* metrics = nullptr, const AdaptHooks& hooks = {});

}  // namespace skeladapt
