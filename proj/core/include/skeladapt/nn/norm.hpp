#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "skeladapt/nn/layers.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt::nn {

inline constexpr double kNormEps = 1e-5;
inline constexpr double kNormMomentum = 0.1;

namespace detail {

template <typename T>
struct NormCtx final : LayerCtx<T> {
  TensorT<T> xhat;
  std::vector<T> invstd;  // per channel
  bool batch_stats = false;
};

template <typename T>
void channel_moments(const TensorT<T>& x, std::vector<double>& mean, std::vector<double>& var) {
  const int m = x.n() * x.h() * x.w();
  const int hw = x.h() * x.w();
  mean.assign(x.c(), 0.0);
  var.assign(x.c(), 0.0);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.plane(n, c);
      for (int i = 0; i < hw; ++i) mean[c] += p[i];
    }
  for (int c = 0; c < x.c(); ++c) mean[c] /= m;
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.plane(n, c);
      for (int i = 0; i < hw; ++i) {
        const double d = p[i] - mean[c];
        var[c] += d * d;
      }
    }
  for (int c = 0; c < x.c(); ++c) var[c] /= m;
}

template <typename T>
TensorT<T> affine_normalize(const TensorT<T>& x, const std::vector<double>& mean, const std::vector<double>& var,
                            const TensorT<T>& gamma, const TensorT<T>& beta, double eps, NormCtx<T>* ctx) {
  TensorT<T> y(x.n(), x.c(), x.h(), x.w());
  TensorT<T> xhat;
  if (ctx) xhat = TensorT<T>(x.n(), x.c(), x.h(), x.w());
  std::vector<T> invstd(x.c());
  for (int c = 0; c < x.c(); ++c) invstd[c] = T(1.0 / std::sqrt(var[c] + eps));
  const int hw = x.h() * x.w();
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      const T* src = x.plane(n, c);
      T* dst = y.plane(n, c);
      T* xh = ctx ? xhat.plane(n, c) : nullptr;
      const T mu = T(mean[c]), istd = invstd[c], g = gamma[c], b = beta[c];
      for (int i = 0; i < hw; ++i) {
        const T h = (src[i] - mu) * istd;
        if (xh) xh[i] = h;
        dst[i] = g * h + b;
      }
    }
  if (ctx) {
    ctx->xhat = std::move(xhat);
    ctx->invstd = std::move(invstd);
  }
  return y;
}

template <typename T>
TensorT<T> norm_backward(const TensorT<T>& dy, const NormCtx<T>& ctx, const TensorT<T>& gamma, Param<T>* gp,
                         Param<T>* bp, bool acc_param_grads) {
  const int m = dy.n() * dy.h() * dy.w();
  const int hw = dy.h() * dy.w();
  std::vector<double> sum_g(dy.c(), 0.0), sum_gx(dy.c(), 0.0);
  for (int n = 0; n < dy.n(); ++n)
    for (int c = 0; c < dy.c(); ++c) {
      const T* g = dy.plane(n, c);
      const T* xh = ctx.xhat.plane(n, c);
      for (int i = 0; i < hw; ++i) {
        sum_g[c] += g[i];
        sum_gx[c] += double(g[i]) * xh[i];
      }
    }
  if (acc_param_grads) {
    for (int c = 0; c < dy.c(); ++c) {
      gp->grad[c] += T(sum_gx[c]);
      bp->grad[c] += T(sum_g[c]);
    }
  }
  TensorT<T> dx(dy.n(), dy.c(), dy.h(), dy.w());
  for (int n = 0; n < dy.n(); ++n)
    for (int c = 0; c < dy.c(); ++c) {
      const T* g = dy.plane(n, c);
      const T* xh = ctx.xhat.plane(n, c);
      T* dst = dx.plane(n, c);
      const T scale = gamma[c] * ctx.invstd[c];
      if (ctx.batch_stats) {
        const T mg = T(sum_g[c] / m), mgx = T(sum_gx[c] / m);
        for (int i = 0; i < hw; ++i) dst[i] = scale * (g[i] - mg - xh[i] * mgx);
      } else {
        for (int i = 0; i < hw; ++i) dst[i] = scale * g[i];
      }
    }
  return dx;
}

template <typename T>
void update_running(std::vector<T>& run_mean, std::vector<T>& run_var, const std::vector<double>& mean,
                    const std::vector<double>& var, int m) {
  const double unbias = m > 1 ? double(m) / (m - 1) : 1.0;
  for (size_t c = 0; c < run_mean.size(); ++c) {
    run_mean[c] = T((1.0 - kNormMomentum) * run_mean[c] + kNormMomentum * mean[c]);
    run_var[c] = T((1.0 - kNormMomentum) * run_var[c] + kNormMomentum * var[c] * unbias);
  }
}

}  // namespace detail

/// Classic batch normalization, used while pretraining on labeled data.
/// Batch statistics use the population variance; the running-variance update
/// applies the unbiased correction.
template <typename T>
class BatchNorm final : public Layer<T> {
public:
  explicit BatchNorm(int channels, double eps = kNormEps)
      : c_(channels), eps_(eps), gamma_("g", TensorT<T>(channels, 1, 1, 1)), beta_("b", TensorT<T>(channels, 1, 1, 1)),
        run_mean_(channels, T(0)), run_var_(channels, T(1)) {
    gamma_.value.fill(T(1));
  }

  const char* kind() const override { return "bn"; }
  std::string describe() const override { return "bn(" + std::to_string(c_) + ")"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    if (x.c() != c_) throw std::invalid_argument("BatchNorm: channel mismatch");
    auto cc = ctx ? std::make_unique<detail::NormCtx<T>>() : nullptr;
    std::vector<double> mean, var;
    if (mode == Mode::kTrain) {
      if (x.n() * x.h() * x.w() < 2) throw std::invalid_argument("BatchNorm: need >= 2 values per channel");
      detail::channel_moments(x, mean, var);
      detail::update_running(run_mean_, run_var_, mean, var, x.n() * x.h() * x.w());
      if (cc) cc->batch_stats = true;
    } else {
      mean.assign(run_mean_.begin(), run_mean_.end());
      var.assign(run_var_.begin(), run_var_.end());
    }
    TensorT<T> y = detail::affine_normalize(x, mean, var, gamma_.value, beta_.value, eps_, cc.get());
    if (ctx) *ctx = std::move(cc);
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool acc_param_grads) override {
    const auto& ctx = static_cast<const detail::NormCtx<T>&>(ctx_base);
    return detail::norm_backward(dy, ctx, gamma_.value, &gamma_, &beta_, acc_param_grads);
  }

  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, std::vector<T>*>> state() override {
    return {{"rm", &run_mean_}, {"rv", &run_var_}};
  }

  int channels() const { return c_; }
  double eps() const { return eps_; }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  std::vector<T>& running_mean() { return run_mean_; }
  std::vector<T>& running_var() { return run_var_; }

private:
  int c_;
  double eps_;
  Param<T> gamma_, beta_;
  std::vector<T> run_mean_, run_var_;
};

/// Normalization with one statistics slot per domain and a shared affine
/// part. Training batches update only the slot matching their tag, so
/// adapting on one domain can never disturb the other domain's statistics.
/// With alignment disabled the layer degenerates to frozen source-slot
/// normalization in both modes (gradients still flow to gamma/beta and the
/// input).
template <typename T>
class DomainAlignNorm final : public Layer<T> {
public:
  explicit DomainAlignNorm(int channels, double eps = kNormEps)
      : c_(channels), eps_(eps), gamma_("g", TensorT<T>(channels, 1, 1, 1)), beta_("b", TensorT<T>(channels, 1, 1, 1)) {
    gamma_.value.fill(T(1));
    for (auto* v : {&mean_[0], &mean_[1]}) v->assign(channels, T(0));
    for (auto* v : {&var_[0], &var_[1]}) v->assign(channels, T(1));
  }

  const char* kind() const override { return "dal"; }
  std::string describe() const override { return "dal(" + std::to_string(c_) + ")"; }

  void set_align_enabled(bool on) { align_enabled_ = on; }
  bool align_enabled() const { return align_enabled_; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, DomainTag domain, typename Layer<T>::CtxPtr* ctx) override {
    if (x.c() != c_) throw std::invalid_argument("DomainAlignNorm: channel mismatch");
    auto cc = ctx ? std::make_unique<detail::NormCtx<T>>() : nullptr;
    const int slot = align_enabled_ ? slot_of(domain) : slot_of(DomainTag::kSource);
    std::vector<double> mean, var;
    if (mode == Mode::kTrain && align_enabled_) {
      if (x.n() * x.h() * x.w() < 2) throw std::invalid_argument("DomainAlignNorm: need >= 2 values per channel");
      detail::channel_moments(x, mean, var);
      detail::update_running(mean_[slot], var_[slot], mean, var, x.n() * x.h() * x.w());
      if (cc) cc->batch_stats = true;
    } else {
      mean.assign(mean_[slot].begin(), mean_[slot].end());
      var.assign(var_[slot].begin(), var_[slot].end());
    }
    TensorT<T> y = detail::affine_normalize(x, mean, var, gamma_.value, beta_.value, eps_, cc.get());
    if (ctx) *ctx = std::move(cc);
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool acc_param_grads) override {
    const auto& ctx = static_cast<const detail::NormCtx<T>&>(ctx_base);
    return detail::norm_backward(dy, ctx, gamma_.value, &gamma_, &beta_, acc_param_grads);
  }

  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, std::vector<T>*>> state() override {
    return {{"sm", &mean_[0]}, {"sv", &var_[0]}, {"tm", &mean_[1]}, {"tv", &var_[1]}};
  }

  int channels() const { return c_; }
  double eps() const { return eps_; }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  std::vector<T>& stat_mean(DomainTag d) { return mean_[slot_of(d)]; }
  std::vector<T>& stat_var(DomainTag d) { return var_[slot_of(d)]; }

private:
  static int slot_of(DomainTag d) { return d == DomainTag::kSource ? 0 : 1; }

  int c_;
  double eps_;
  bool align_enabled_ = true;
  Param<T> gamma_, beta_;
  std::vector<T> mean_[2], var_[2];
};

/// Swaps every batch-norm layer for a domain-aligned one, copying the affine
/// part and seeding both statistics slots from the pretrained running stats.
/// Returns the number of layers converted (0 means nothing to convert).
template <typename T>
int convert_bn_to_dal(Sequential<T>& net) {
  int converted = 0;
  for (size_t i = 0; i < net.size(); ++i) {
    auto* bn = dynamic_cast<BatchNorm<T>*>(net.layer(i));
    if (!bn) continue;
    auto dal = std::make_unique<DomainAlignNorm<T>>(bn->channels(), bn->eps());
    dal->gamma().value = bn->gamma().value;
    dal->beta().value = bn->beta().value;
    for (DomainTag d : {DomainTag::kSource, DomainTag::kTarget}) {
      dal->stat_mean(d) = bn->running_mean();
      dal->stat_var(d) = bn->running_var();
    }
    net.replace(i, std::move(dal));
    ++converted;
  }
  return converted;
}

template <typename T>
void set_align_enabled(Sequential<T>& net, bool on) {
  for (size_t i = 0; i < net.size(); ++i)
    if (auto* dal = dynamic_cast<DomainAlignNorm<T>*>(net.layer(i))) dal->set_align_enabled(on);
}

}  // namespace skeladapt::nn
