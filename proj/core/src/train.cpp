#include "skeladapt/train.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "skeladapt/eval.hpp"
#include "skeladapt/nn/norm.hpp"

namespace skeladapt {

using json = nlohmann::json;

namespace {

constexpr uint64_t kInitSalt = 0x1217u;
constexpr uint64_t kDiscSalt = 0xd15cu;
constexpr uint64_t kPretrainSalt = 0x93e7u;
constexpr uint64_t kAdaptSalt = 0xada9u;

std::vector<size_t> sample_indices(std::mt19937_64& rng, size_t pool, int count) {
  std::uniform_int_distribution<size_t> dist(0, pool - 1);
  std::vector<size_t> idx(count);
  for (auto& i : idx) i = dist(rng);
  return idx;
}

std::vector<std::pair<std::string, std::vector<float>>> dump_params(
    std::vector<std::pair<std::string, nn::Param<float>*>> named) {
  std::vector<std::pair<std::string, std::vector<float>>> out;
  out.reserve(named.size());
  for (auto& [name, p] : named) out.emplace_back(name, p->value.vec());
  return out;
}

void restore_params(const std::vector<std::pair<std::string, std::vector<float>>>& saved,
                    std::vector<std::pair<std::string, nn::Param<float>*>> named, const char* what) {
  if (saved.size() != named.size())
    throw std::runtime_error(std::string("checkpoint: ") + what + " parameter count mismatch");
  for (size_t i = 0; i < saved.size(); ++i) {
    if (saved[i].first != named[i].first || saved[i].second.size() != named[i].second->value.size())
      throw std::runtime_error(std::string("checkpoint: ") + what + " parameter mismatch at " + saved[i].first);
    std::copy(saved[i].second.begin(), saved[i].second.end(), named[i].second->value.data());
  }
}

std::vector<std::pair<std::string, std::vector<float>>> dump_state(
    std::vector<std::pair<std::string, std::vector<float>*>> named) {
  std::vector<std::pair<std::string, std::vector<float>>> out;
  out.reserve(named.size());
  for (auto& [name, v] : named) out.emplace_back(name, *v);
  return out;
}

void restore_state(const std::vector<std::pair<std::string, std::vector<float>>>& saved,
                   std::vector<std::pair<std::string, std::vector<float>*>> named, const char* what) {
  if (saved.size() != named.size())
    throw std::runtime_error(std::string("checkpoint: ") + what + " state count mismatch");
  for (size_t i = 0; i < saved.size(); ++i) {
    if (saved[i].first != named[i].first || saved[i].second.size() != named[i].second->size())
      throw std::runtime_error(std::string("checkpoint: ") + what + " state mismatch at " + saved[i].first);
    *named[i].second = saved[i].second;
  }
}

void scale_coord_grads(std::vector<std::vector<Vec2>>& grads, double w) {
  if (w == 1.0) return;
  for (auto& per_sample : grads)
    for (Vec2& g : per_sample) g = w * g;
}

void add_coord_grads(std::vector<std::vector<Vec2>>& acc, const std::vector<std::vector<Vec2>>& inc, double w) {
  for (size_t n = 0; n < acc.size(); ++n)
    for (size_t j = 0; j < acc[n].size(); ++j) acc[n][j] = acc[n][j] + w * inc[n][j];
}

}  // namespace

Checkpoint snapshot_checkpoint(KeypointNet<float>& net, NormKind norm, const nn::Adam<float>* net_opt,
                               MultiScaleDiscriminator<float>* disc, const nn::Adam<float>* disc_opt,
                               int64_t iteration) {
  Checkpoint ck;
  ck.net_hash = net.spec.hash();
  ck.norm_kind = norm == NormKind::kBatch ? 0 : 1;
  ck.iteration = iteration;
  ck.net_params = dump_params(net.net.named_params());
  ck.net_state = dump_state(net.net.named_state());
  if (net_opt) ck.net_opt = net_opt->save_state();
  if (disc) {
    ck.disc_hash = disc->spec().hash();
    ck.disc_params = dump_params(disc->named_params());
    if (disc_opt) ck.disc_opt = disc_opt->save_state();
  }
  return ck;
}

NormKind checkpoint_norm_kind(const Checkpoint& ck) {
  return ck.norm_kind == 0 ? NormKind::kBatch : NormKind::kDomainAlign;
}

KeypointNet<float> net_from_checkpoint(const Checkpoint& ck, const NetworkSpec& spec) {
  if (ck.net_hash != spec.hash())
    throw std::runtime_error("checkpoint: network spec hash mismatch (file " + std::to_string(ck.net_hash) +
                             ", requested " + std::to_string(spec.hash()) + ")");
  KeypointNet<float> net = make_keypoint_net<float>(spec, checkpoint_norm_kind(ck), /*seed=*/0);
  restore_params(ck.net_params, net.net.named_params(), "network");
  restore_state(ck.net_state, net.net.named_state(), "network");
  return net;
}

// ---------------------------------------------------------------------------

PretrainResult pretrain_source(const TrainConfig& cfg, SampleStore& source, MetricsSink* metrics) {
  if (cfg.batch_size < 2) throw std::invalid_argument("pretrain: batch size must be >= 2");
  if (source.size() == 0) throw std::invalid_argument("pretrain: empty source store");
  KeypointNet<float> net = make_keypoint_net<float>(cfg.net, NormKind::kBatch, mix_seed(cfg.seed, kInitSalt));
  nn::Adam<float> opt(net.net.params(), cfg.adam);

  double loss = 0;
  for (int t = 0; t < cfg.pretrain_iters; ++t) {
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed, kPretrainSalt), uint64_t(t)));
    const auto idx = sample_indices(rng, source.size(), cfg.batch_size);
    Tensor x = source.batch_images(idx);
    const auto labels = source.batch_labels(idx);
    nn::Sequential<float>::Tape tape;
    TensorT<float> h = net.forward_heatmaps(x, DomainTag::kSource, nn::Mode::kTrain, &tape);
    TensorT<float> dh;
    loss = heatmap_regression_loss(h, labels, kHeatmapSigma, &dh);
    if (!std::isfinite(loss))
      throw std::runtime_error("pretrain diverged at iteration " + std::to_string(t) + ": loss " +
                               std::to_string(loss));
    net.net.backward(dh, tape);
    opt.step();
    net.net.zero_grad();
    if (metrics && (t % cfg.log_every == 0 || t + 1 == cfg.pretrain_iters))
      metrics->log(json{{"phase", "pretrain"}, {"iter", t}, {"loss", loss}}.dump());
  }
  PretrainResult res;
  res.final_loss = loss;
  res.ckpt = snapshot_checkpoint(net, NormKind::kBatch, &opt, nullptr, nullptr, cfg.pretrain_iters);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

Tensor render_real_batch(const TrainConfig& cfg, const RealBranch& real, const SkeletonTopology& topo,
                         std::mt19937_64& rng) {
  if (cfg.source_free) {
    const PriorSet& prior = *real.prior;
    std::uniform_int_distribution<size_t> dist(0, prior.items.size() - 1);
    Tensor out(cfg.batch_size, 1, cfg.render.resolution, cfg.render.resolution);
    for (int b = 0; b < cfg.batch_size; ++b) {
      Tensor one = render_prior<float>(prior.items[dist(rng)], prior.topo, cfg.render);
      std::copy(one.data(), one.data() + one.size(), out.plane(b, 0));
    }
    return out;
  }
  const auto idx = sample_indices(rng, real.source_labels->size(), cfg.batch_size);
  return render_batch<float>(real.source_labels->batch_labels(idx), topo, cfg.render);
}

}  // namespace

AdaptResult adapt(const TrainConfig& cfg, const Checkpoint& start, SampleStore& target, const RealBranch& real,
                  MetricsSink* metrics, const AdaptHooks& hooks) {
  if (!cfg.use_dal && !cfg.use_adversarial && !cfg.use_geometric)
    throw std::invalid_argument("adapt: at least one loss term must be enabled");
  if (cfg.batch_size < 2) throw std::invalid_argument("adapt: batch size must be >= 2");
  if (target.size() == 0) throw std::invalid_argument("adapt: empty target store");
  if (cfg.use_adversarial) {
    if (cfg.source_free && (!real.prior || real.prior->items.empty()))
      throw std::invalid_argument("adapt: source-free mode needs a non-empty prior set");
    if (!cfg.source_free && !real.source_labels)
      throw std::invalid_argument("adapt: with-source mode needs source annotations for the real branch");
  }

  const SkeletonTopology topo = target.topology();
  if (topo.k != cfg.net.keypoints) throw std::invalid_argument("adapt: topology/network keypoint mismatch");

  // Build the adapted model. A batch-norm checkpoint marks a fresh start:
  // convert normalization to per-domain slots and begin at iteration 0.
  KeypointNet<float> net = net_from_checkpoint(start, cfg.net);
  int64_t start_iter = 0;
  MultiScaleDiscriminator<float> disc(cfg.disc, mix_seed(cfg.seed, kDiscSalt));
  if (checkpoint_norm_kind(start) == NormKind::kBatch) {
    if (nn::convert_bn_to_dal(net.net) == 0)
      std::cerr << "warning: model has no normalization layers to convert; adapting without per-domain statistics\n";
  } else {
    start_iter = start.iteration;
    if (start.disc_hash != 0) {
      if (start.disc_hash != cfg.disc.hash()) throw std::runtime_error("checkpoint: discriminator spec hash mismatch");
      restore_params(start.disc_params, disc.named_params(), "discriminator");
    }
  }
  nn::set_align_enabled(net.net, cfg.use_dal);

  nn::Adam<float> gen_opt(net.net.params(), cfg.adam);
  nn::Adam<float> disc_opt(disc.params(), cfg.adam);
  if (checkpoint_norm_kind(start) == NormKind::kDomainAlign) {
    if (!start.net_opt.empty()) gen_opt.load_state(start.net_opt);
    if (!start.disc_opt.empty()) disc_opt.load_state(start.disc_opt);
  }

  const float rot_fill = float(target.background_mean());
  AdaptResult res;

  for (int64_t t = start_iter; t < cfg.adapt_iters; ++t) {
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed, kAdaptSalt), uint64_t(t)));
    const auto idx = sample_indices(rng, target.size(), cfg.batch_size);
    Tensor x = target.batch_images(idx);

    nn::Sequential<float>::Tape tape;
    TensorT<float> h = net.forward_heatmaps(x, DomainTag::kTarget, nn::Mode::kTrain, &tape);
    SoftArgmaxCtx<float> sa_ctx;
    std::vector<KeypointSet> coords = soft_argmax(h, cfg.readout, &sa_ctx);

    double l_disc = 0, l_gen = 0, l_geo = 0;
    Tensor fake;
    if (cfg.use_adversarial) fake = render_batch<float>(coords, topo, cfg.render);

    // Discriminator step: rendered predictions are detached, so the
    // generator sees none of these gradients.
    if (cfg.use_adversarial) {
      Tensor real_imgs = render_real_batch(cfg, real, topo, rng);
      std::vector<MultiScaleDiscriminator<float>::Tape> tapes_r, tapes_f;
      auto hr = disc.scores(real_imgs, &tapes_r);
      auto hf = disc.scores(fake, &tapes_f);
      auto dreal = zeros_like_scores(hr);
      auto dfake = zeros_like_scores(hf);
      l_disc = lsgan_disc_loss(hr, hf, &dreal, &dfake);
      disc.backward(dreal, tapes_r, true);
      disc.backward(dfake, tapes_f, true);
      disc_opt.step();
      disc.zero_grad();
    }

    // Generator step on the enabled terms; discriminator parameters frozen.
    std::vector<std::vector<Vec2>> dcoords(coords.size(), std::vector<Vec2>(topo.k, Vec2{0, 0}));
    bool gen_work = false;
    if (cfg.use_adversarial) {
      std::vector<MultiScaleDiscriminator<float>::Tape> tapes_f;
      auto hf = disc.scores(fake, &tapes_f);
      auto dfake = zeros_like_scores(hf);
      l_gen = lsgan_gen_loss(hf, &dfake);
      TensorT<float> dimg = disc.backward(dfake, tapes_f, /*acc_param_grads=*/false);
      add_coord_grads(dcoords, render_batch_backward(dimg, coords, topo, cfg.render), cfg.w_gen);
      gen_work = true;
    }
    if (cfg.use_geometric) {
      const RigidTransform2D g = sample_rotation(cfg.geo, rng);
      Tensor x_rot = transform_image(x, g, rot_fill);
      nn::Sequential<float>::Tape tape_rot;
      TensorT<float> h_rot = net.forward_heatmaps(x_rot, DomainTag::kTarget, nn::Mode::kTrain, &tape_rot);
      SoftArgmaxCtx<float> sa_rot;
      std::vector<KeypointSet> coords_rot = soft_argmax(h_rot, cfg.readout, &sa_rot);
      GeoLossGrads gg;
      l_geo = loss_geo_from_coords(coords_rot, coords, g, cfg.geo.mean_over_batch, &gg);
      add_coord_grads(dcoords, gg.d_plain_branch, cfg.w_geo);
      scale_coord_grads(gg.d_rotated_branch, cfg.w_geo);
      TensorT<float> dh_rot = soft_argmax_backward(gg.d_rotated_branch, cfg.readout, sa_rot);
      net.net.backward(dh_rot, tape_rot);
      gen_work = true;
    }
    if (gen_work) {
      TensorT<float> dh = soft_argmax_backward(dcoords, cfg.readout, sa_ctx);
      net.net.backward(dh, tape);
      gen_opt.step();
      net.net.zero_grad();
    }

    const double total = cfg.w_disc * l_disc + cfg.w_gen * l_gen + cfg.w_geo * l_geo;
    if (!std::isfinite(total))
      throw std::runtime_error("adapt diverged at iteration " + std::to_string(t) + ": loss " + std::to_string(total));

    const double spread = collapse_score(coords);
    const bool collapsed = cfg.collapse_threshold > 0 && spread < cfg.collapse_threshold;
    if (collapsed && !res.collapse_warned) {
      std::cerr << "warning: keypoint spread " << spread << " fell below " << cfg.collapse_threshold
                << " at iteration " << t << "; predictions are degenerating\n";
      res.collapse_warned = true;
    }
    if (metrics && (t % cfg.log_every == 0 || t + 1 == cfg.adapt_iters)) {
      json rec{{"phase", "adapt"},     {"iter", t},           {"loss_disc", l_disc},
               {"loss_gen", l_gen},    {"loss_geo", l_geo},   {"loss_total", total},
               {"collapse", spread}};
      if (collapsed) rec["warning"] = "collapse";
      metrics->log(rec.dump());
    }
    if (hooks.eval_store && hooks.eval_every > 0 && ((t + 1) % hooks.eval_every == 0 || t + 1 == cfg.adapt_iters)) {
      EvalReport er = evaluate(net, *hooks.eval_store, cfg.readout, 0.1, hooks.eval_max, cfg.batch_size);
      if (metrics)
        metrics->log(json{{"phase", "adapt_eval"}, {"iter", t}, {"pck", er.pck}, {"mse", er.mse},
                          {"collapse", er.collapse}}.dump());
    }
  }

  res.ckpt = snapshot_checkpoint(net, NormKind::kDomainAlign, &gen_opt, cfg.use_adversarial ? &disc : nullptr,
                                 cfg.use_adversarial ? &disc_opt : nullptr, cfg.adapt_iters);
  return res;
}

// ---------------------------------------------------------------------------

std::string train_config_to_json(const TrainConfig& c) {
  json j{{"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
         {"batch_size", c.batch_size},
         {"pretrain_iters", c.pretrain_iters},
         {"adapt_iters", c.adapt_iters},
         {"use_dal", c.use_dal},
         {"use_adversarial", c.use_adversarial},
         {"use_geometric", c.use_geometric},
         {"source_free", c.source_free},
         {"w_disc", c.w_disc},
         {"w_gen", c.w_gen},
         {"w_geo", c.w_geo},
         {"seed", c.seed},
         {"net", {{"in_channels", c.net.in_channels}, {"keypoints", c.net.keypoints}, {"base_width", c.net.base_width}}},
         {"disc",
          {{"in_channels", c.disc.in_channels},
           {"base_width", c.disc.base_width},
           {"resolution", c.disc.resolution},
           {"scales", c.disc.scales}}},
         {"geo",
          {{"angle_min", c.geo.angle_min},
           {"angle_max", c.geo.angle_max},
           {"per_sample_angles", c.geo.per_sample_angles},
           {"mean_over_batch", c.geo.mean_over_batch}}},
         {"readout", {{"beta", c.readout.beta}}},
         {"render", {{"resolution", c.render.resolution}, {"sigma", c.render.sigma}}},
         {"collapse_threshold", c.collapse_threshold},
         {"log_every", c.log_every}};
  return j.dump(2);
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::runtime_error("train config: unknown field \"" + where + key + "\"");
  }
}

template <typename T>
void pick(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text, TrainConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("train config: ") + e.what());
  }
  reject_unknown(j,
                 {"adam", "batch_size", "pretrain_iters", "adapt_iters", "use_dal", "use_adversarial", "use_geometric",
                  "source_free", "w_disc", "w_gen", "w_geo", "seed", "net", "disc", "geo", "readout", "render",
                  "collapse_threshold", "log_every"},
                 "");
  if (j.contains("adam")) {
    const json& a = j["adam"];
    reject_unknown(a, {"lr", "beta1", "beta2", "eps"}, "adam.");
    pick(a, "lr", base.adam.lr);
    pick(a, "beta1", base.adam.beta1);
    pick(a, "beta2", base.adam.beta2);
    pick(a, "eps", base.adam.eps);
  }
  pick(j, "batch_size", base.batch_size);
  pick(j, "pretrain_iters", base.pretrain_iters);
  pick(j, "adapt_iters", base.adapt_iters);
  pick(j, "use_dal", base.use_dal);
  pick(j, "use_adversarial", base.use_adversarial);
  pick(j, "use_geometric", base.use_geometric);
  pick(j, "source_free", base.source_free);
  pick(j, "w_disc", base.w_disc);
  pick(j, "w_gen", base.w_gen);
  pick(j, "w_geo", base.w_geo);
  pick(j, "seed", base.seed);
  if (j.contains("net")) {
    const json& n = j["net"];
    reject_unknown(n, {"in_channels", "keypoints", "base_width"}, "net.");
    pick(n, "in_channels", base.net.in_channels);
    pick(n, "keypoints", base.net.keypoints);
    pick(n, "base_width", base.net.base_width);
  }
  if (j.contains("disc")) {
    const json& d = j["disc"];
    reject_unknown(d, {"in_channels", "base_width", "resolution", "scales"}, "disc.");
    pick(d, "in_channels", base.disc.in_channels);
    pick(d, "base_width", base.disc.base_width);
    pick(d, "resolution", base.disc.resolution);
    pick(d, "scales", base.disc.scales);
  }
  if (j.contains("geo")) {
    const json& g = j["geo"];
    reject_unknown(g, {"angle_min", "angle_max", "per_sample_angles", "mean_over_batch"}, "geo.");
    pick(g, "angle_min", base.geo.angle_min);
    pick(g, "angle_max", base.geo.angle_max);
    pick(g, "per_sample_angles", base.geo.per_sample_angles);
    pick(g, "mean_over_batch", base.geo.mean_over_batch);
  }
  if (j.contains("readout")) {
    reject_unknown(j["readout"], {"beta"}, "readout.");
    pick(j["readout"], "beta", base.readout.beta);
  }
  if (j.contains("render")) {
    const json& r = j["render"];
    reject_unknown(r, {"resolution", "sigma"}, "render.");
    pick(r, "resolution", base.render.resolution);
    pick(r, "sigma", base.render.sigma);
  }
  pick(j, "collapse_threshold", base.collapse_threshold);
  pick(j, "log_every", base.log_every);
  return base;
}

TrainConfig load_train_config(const std::filesystem::path& file, TrainConfig base) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open train config: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return train_config_from_json(ss.str(), std::move(base));
}

}  // namespace skeladapt
