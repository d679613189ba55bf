#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "skeladapt/nn/layers.hpp"
#include "skeladapt/renderer.hpp"
#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

struct DiscriminatorSpec {
  int in_channels = 1;
  int base_width = 64;
  int resolution = kInputResolution;
  std::vector<double> scales = {1.0, 0.5, 0.25};

  std::string to_string() const {
    std::string s = "disc(in=" + std::to_string(in_channels) + ",bw=" + std::to_string(base_width) +
                    ",res=" + std::to_string(resolution) + ",scales=";
    for (size_t i = 0; i < scales.size(); ++i) s += (i ? "," : "") + std::to_string(scales[i]);
    return s + ")";
  }
  uint64_t hash() const { return fnv1a64(to_string()); }
};

/// One stride-2 conv stack per scale, no weight sharing; each stack ends in a
/// bare 1-filter conv producing an unbounded patch-score map.
template <typename T>
class MultiScaleDiscriminator {
public:
  using Tape = typename nn::Sequential<T>::Tape;

  MultiScaleDiscriminator(const DiscriminatorSpec& spec, uint64_t seed) : spec_(spec) {
    if (spec.scales.empty()) throw std::invalid_argument("MultiScaleDiscriminator: no scales");
    std::mt19937_64 rng(seed);
    for (size_t s = 0; s < spec.scales.size(); ++s) {
      pyramid_factor(spec.resolution, spec.scales[s]);
      stacks_.push_back(build_stack(rng));
    }
  }

  /// Raw patch scores, one map per scale (full resolution first).
  std::vector<TensorT<T>> scores(const TensorT<T>& x, std::vector<Tape>* tapes = nullptr) {
    if (x.h() != spec_.resolution || x.w() != spec_.resolution)
      throw std::invalid_argument("disc_scores: expected " + std::to_string(spec_.resolution) + "^2 input, got " +
                                  x.shape_str());
    if (x.n() < 1) throw std::invalid_argument("disc_scores: empty batch");
    std::vector<TensorT<T>> levels = image_pyramid(x, spec_.scales);
    std::vector<TensorT<T>> out;
    if (tapes) tapes->resize(stacks_.size());
    for (size_t s = 0; s < stacks_.size(); ++s)
      out.push_back(stacks_[s].forward(levels[s], nn::Mode::kTrain, DomainTag::kTarget, tapes ? &(*tapes)[s] : nullptr));
    return out;
  }

  /// Backward from per-scale score gradients to the full-resolution input.
  TensorT<T> backward(const std::vector<TensorT<T>>& dscores, const std::vector<Tape>& tapes, bool acc_param_grads) {
    if (dscores.size() != stacks_.size() || tapes.size() != stacks_.size())
      throw std::invalid_argument("MultiScaleDiscriminator::backward: scale count mismatch");
    std::vector<TensorT<T>> dlevels;
    for (size_t s = 0; s < stacks_.size(); ++s)
      dlevels.push_back(stacks_[s].backward(dscores[s], tapes[s], acc_param_grads));
    return image_pyramid_backward(dlevels, spec_.scales, spec_.resolution);
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (auto& s : stacks_)
      for (auto* p : s.params()) out.push_back(p);
    return out;
  }

  std::vector<std::pair<std::string, nn::Param<T>*>> named_params() {
    std::vector<std::pair<std::string, nn::Param<T>*>> out;
    for (size_t s = 0; s < stacks_.size(); ++s)
      for (auto& [name, p] : stacks_[s].named_params()) out.emplace_back("S" + std::to_string(s) + "." + name, p);
    return out;
  }

  void zero_grad() {
    for (auto& s : stacks_) s.zero_grad();
  }

  const DiscriminatorSpec& spec() const { return spec_; }
  size_t scale_count() const { return stacks_.size(); }
  nn::Sequential<T>& stack(size_t s) { return stacks_[s]; }

private:
  nn::Sequential<T> build_stack(std::mt19937_64& rng) {
    nn::Sequential<T> net;
    const int b = spec_.base_width;
    int in_c = spec_.in_channels;
    for (int out_c : {b, 2 * b, 4 * b, 8 * b}) {
      auto conv = std::make_unique<nn::Conv2d<T>>(in_c, out_c, 4, 2, 1, /*with_bias=*/false);
      conv->init_he(rng);
      net.add(std::move(conv));
      net.add(std::make_unique<nn::InstanceNorm<T>>(out_c));
      net.add(std::make_unique<nn::ReLU<T>>());
      in_c = out_c;
    }
    auto head = std::make_unique<nn::Conv2d<T>>(in_c, 1, 4, 2, 1, /*with_bias=*/true);
    head->init_he(rng);
    net.add(std::move(head));
    return net;
  }

  DiscriminatorSpec spec_;
  std::vector<nn::Sequential<T>> stacks_;
};

// ---------------------------------------------------------------------------
// Least-squares objectives on score maps. Expectations average over batch and
// patch locations, then over scales (unweighted mean).

namespace detail {

template <typename T>
double mean_sq_vs(const TensorT<T>& h, double target, TensorT<T>* dh, double outer_scale) {
  const double inv_m = 1.0 / double(h.size());
  double acc = 0;
  for (size_t i = 0; i < h.size(); ++i) {
    const double d = double(h[i]) - target;
    acc += d * d;
    if (dh) (*dh)[i] += T(2.0 * d * inv_m * outer_scale);
  }
  return acc * inv_m;
}

}  // namespace detail

/// E[(1 - h(real))^2] + E[h(fake)^2], averaged over scales. Gradient outputs,
/// when requested, are accumulated (callers zero them).
template <typename T>
double lsgan_disc_loss(const std::vector<TensorT<T>>& real, const std::vector<TensorT<T>>& fake,
                       std::vector<TensorT<T>>* dreal = nullptr, std::vector<TensorT<T>>* dfake = nullptr) {
  if (real.size() != fake.size() || real.empty()) throw std::invalid_argument("lsgan_disc_loss: scale mismatch");
  const double inv_s = 1.0 / double(real.size());
  double total = 0;
  for (size_t s = 0; s < real.size(); ++s) {
    total += detail::mean_sq_vs(real[s], 1.0, dreal ? &(*dreal)[s] : nullptr, inv_s);
    total += detail::mean_sq_vs(fake[s], 0.0, dfake ? &(*dfake)[s] : nullptr, inv_s);
  }
  return total * inv_s;
}

/// E[(1 - h(fake))^2], averaged over scales.
template <typename T>
double lsgan_gen_loss(const std::vector<TensorT<T>>& fake, std::vector<TensorT<T>>* dfake = nullptr) {
  if (fake.empty()) throw std::invalid_argument("lsgan_gen_loss: no scales");
  const double inv_s = 1.0 / double(fake.size());
  double total = 0;
  for (size_t s = 0; s < fake.size(); ++s) total += detail::mean_sq_vs(fake[s], 1.0, dfake ? &(*dfake)[s] : nullptr, inv_s);
  return total * inv_s;
}

template <typename T>
std::vector<TensorT<T>> zeros_like_scores(const std::vector<TensorT<T>>& scores) {
  std::vector<TensorT<T>> out;
  for (const auto& s : scores) out.emplace_back(s.n(), s.c(), s.h(), s.w());
  return out;
}

// ---------------------------------------------------------------------------
// Image-level wrappers (forward values only; training drives the staged
// score/backward path directly).

template <typename T>
double loss_disc(MultiScaleDiscriminator<T>& d, const TensorT<T>& real, const TensorT<T>& fake) {
  if (real.n() < 1 || fake.n() < 1) throw std::invalid_argument("loss_disc: empty batch");
  auto hr = d.scores(real);
  auto hf = d.scores(fake);
  return lsgan_disc_loss<T>(hr, hf);
}

template <typename T>
double loss_gen(MultiScaleDiscriminator<T>& d, const TensorT<T>& fake) {
  auto hf = d.scores(fake);
  return lsgan_gen_loss<T>(hf);
}

/// Source-free discriminator objective: same arithmetic as loss_disc with the
/// real branch fed by rendered prior elements, so it reduces to loss_disc
/// exactly when the prior set equals the source annotations.
template <typename T>
double loss_disc_prior(MultiScaleDiscriminator<T>& d, const TensorT<T>& prior, const TensorT<T>& fake) {
  return loss_disc(d, prior, fake);
}

}  // namespace skeladapt
