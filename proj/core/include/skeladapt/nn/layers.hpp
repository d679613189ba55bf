#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "skeladapt/gemm.hpp"
#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt::nn {

enum class Mode { kTrain, kEval };

template <typename T>
struct Param {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;

  Param() = default;
  Param(std::string n, TensorT<T> v) : name(std::move(n)), value(std::move(v)), grad(value.n(), value.c(), value.h(), value.w()) {}
};

/// Per-forward-pass state a layer needs to run its backward. Owned by the
/// caller's Tape so several forward passes through one network can coexist
/// (the equivariance loss needs two live passes).
template <typename T>
struct LayerCtx {
  virtual ~LayerCtx() = default;
};

template <typename T>
class Layer {
public:
  using CtxPtr = std::unique_ptr<LayerCtx<T>>;

  virtual ~Layer() = default;
  virtual const char* kind() const = 0;
  /// Structural description; feeds the checkpoint spec hash.
  virtual std::string describe() const { return kind(); }

  /// ctx may be null for pure inference (nothing saved, backward impossible).
  virtual TensorT<T> forward(const TensorT<T>& x, Mode mode, DomainTag domain, CtxPtr* ctx) = 0;
  /// Returns d(loss)/d(input). Accumulates into param grads unless
  /// acc_param_grads is false (pass-through use, e.g. generator loss
  /// flowing through a frozen discriminator).
  virtual TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx, bool acc_param_grads) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  /// Non-learned state (running statistics), serialized with checkpoints.
  virtual std::vector<std::pair<std::string, std::vector<T>*>> state() { return {}; }
};

// ---------------------------------------------------------------------------
// Conv2d: im2col + GEMM. Weight layout [out_c][in_c*k*k], bias [out_c].

template <typename T>
class Conv2d final : public Layer<T> {
public:
  Conv2d(int in_c, int out_c, int ksize, int stride, int pad, bool with_bias = true)
      : in_c_(in_c), out_c_(out_c), k_(ksize), stride_(stride), pad_(pad), with_bias_(with_bias),
        weight_("w", TensorT<T>(out_c, in_c * ksize * ksize, 1, 1)),
        bias_("b", TensorT<T>(with_bias ? out_c : 0, 1, 1, 1)) {}

  /// Fan-in scaled normal init (ReLU gain), the normalization-friendly default.
  void init_he(std::mt19937_64& rng) {
    const double fan_in = double(in_c_) * k_ * k_;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (size_t i = 0; i < weight_.value.size(); ++i) weight_.value[i] = T(dist(rng));
    if (with_bias_) bias_.value.zero();
  }

  const char* kind() const override { return "conv"; }
  std::string describe() const override {
    return "conv(" + std::to_string(in_c_) + "->" + std::to_string(out_c_) + ",k" + std::to_string(k_) + ",s" +
           std::to_string(stride_) + ",p" + std::to_string(pad_) + (with_bias_ ? "" : ",nobias") + ")";
  }

  int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }

  struct Ctx final : LayerCtx<T> {
    TensorT<T> input;
  };

  TensorT<T> forward(const TensorT<T>& x, Mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    if (x.c() != in_c_) throw std::invalid_argument("Conv2d: expected " + std::to_string(in_c_) + " channels, got " + x.shape_str());
    const int oh = out_h(x.h()), ow = out_h(x.w());
    TensorT<T> y(x.n(), out_c_, oh, ow);
    std::vector<T> col(size_t(in_c_) * k_ * k_ * oh * ow);
    for (int n = 0; n < x.n(); ++n) {
      im2col(x, n, col.data(), oh, ow);
      gemm<T>(false, false, out_c_, oh * ow, in_c_ * k_ * k_, T(1), weight_.value.data(), in_c_ * k_ * k_,
              col.data(), oh * ow, T(0), y.plane(n, 0), oh * ow);
      if (with_bias_) {
        for (int c = 0; c < out_c_; ++c) {
          T* p = y.plane(n, c);
          const T b = bias_.value[c];
          for (int i = 0; i < oh * ow; ++i) p[i] += b;
        }
      }
    }
    if (ctx) {
      auto c = std::make_unique<Ctx>();
      c->input = x;
      *ctx = std::move(c);
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool acc_param_grads) override {
    const auto& ctx = static_cast<const Ctx&>(ctx_base);
    const TensorT<T>& x = ctx.input;
    const int oh = dy.h(), ow = dy.w();
    const int kk = in_c_ * k_ * k_;
    TensorT<T> dx(x.n(), x.c(), x.h(), x.w());
    std::vector<T> col(size_t(kk) * oh * ow);
    std::vector<T> dcol(size_t(kk) * oh * ow);
    for (int n = 0; n < x.n(); ++n) {
      if (acc_param_grads) {
        im2col(x, n, col.data(), oh, ow);
        // dW += dY * col^T
        gemm<T>(false, true, out_c_, kk, oh * ow, T(1), dy.plane(n, 0), oh * ow, col.data(), oh * ow, T(1),
                weight_.grad.data(), kk);
        if (with_bias_) {
          for (int c = 0; c < out_c_; ++c) {
            const T* p = dy.plane(n, c);
            T s = 0;
            for (int i = 0; i < oh * ow; ++i) s += p[i];
            bias_.grad[c] += s;
          }
        }
      }
      // dcol = W^T * dY, then scatter back to dx
      gemm<T>(true, false, kk, oh * ow, out_c_, T(1), weight_.value.data(), kk, dy.plane(n, 0), oh * ow, T(0),
              dcol.data(), oh * ow);
      col2im(dcol.data(), dx, n, oh, ow);
    }
    return dx;
  }

  std::vector<Param<T>*> params() override {
    std::vector<Param<T>*> p{&weight_};
    if (with_bias_) p.push_back(&bias_);
    return p;
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

private:
  void im2col(const TensorT<T>& x, int n, T* col, int oh, int ow) const {
    const int h = x.h(), w = x.w();
    size_t idx = 0;
    for (int ci = 0; ci < in_c_; ++ci) {
      const T* src = x.plane(n, ci);
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) {
              for (int ox = 0; ox < ow; ++ox) col[idx++] = T(0);
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              col[idx++] = (ix >= 0 && ix < w) ? src[iy * w + ix] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const T* dcol, TensorT<T>& dx, int n, int oh, int ow) const {
    const int h = dx.h(), w = dx.w();
    size_t idx = 0;
    for (int ci = 0; ci < in_c_; ++ci) {
      T* dst = dx.plane(n, ci);
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) {
              idx += ow;
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) dst[iy * w + ix] += dcol[idx];
              ++idx;
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_, k_, stride_, pad_;
  bool with_bias_;
  Param<T> weight_, bias_;
};

// ---------------------------------------------------------------------------
// AvgPool: k x k window, stride k.

template <typename T>
class AvgPool final : public Layer<T> {
public:
  explicit AvgPool(int k) : k_(k) {}

  const char* kind() const override { return "avgpool"; }
  std::string describe() const override { return "avgpool(" + std::to_string(k_) + ")"; }

  struct Ctx final : LayerCtx<T> {
    int n, c, h, w;
  };

  TensorT<T> forward(const TensorT<T>& x, Mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    if (x.h() % k_ != 0 || x.w() % k_ != 0)
      throw std::invalid_argument("AvgPool: input " + x.shape_str() + " not divisible by " + std::to_string(k_));
    const int oh = x.h() / k_, ow = x.w() / k_;
    TensorT<T> y(x.n(), x.c(), oh, ow);
    const T inv = T(1) / T(k_ * k_);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        const T* src = x.plane(n, c);
        T* dst = y.plane(n, c);
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            T s = 0;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) s += src[(oy * k_ + ky) * x.w() + ox * k_ + kx];
            dst[oy * ow + ox] = s * inv;
          }
      }
    if (ctx) {
      auto c = std::make_unique<Ctx>();
      c->n = x.n(); c->c = x.c(); c->h = x.h(); c->w = x.w();
      *ctx = std::move(c);
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool) override {
    const auto& ctx = static_cast<const Ctx&>(ctx_base);
    TensorT<T> dx(ctx.n, ctx.c, ctx.h, ctx.w);
    const T inv = T(1) / T(k_ * k_);
    for (int n = 0; n < ctx.n; ++n)
      for (int c = 0; c < ctx.c; ++c) {
        const T* src = dy.plane(n, c);
        T* dst = dx.plane(n, c);
        for (int oy = 0; oy < dy.h(); ++oy)
          for (int ox = 0; ox < dy.w(); ++ox) {
            const T g = src[oy * dy.w() + ox] * inv;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) dst[(oy * k_ + ky) * ctx.w + ox * k_ + kx] += g;
          }
      }
    return dx;
  }

private:
  int k_;
};

// ---------------------------------------------------------------------------
// BilinearUpsample: integer factor, half-pixel-center sampling.

template <typename T>
class BilinearUpsample final : public Layer<T> {
public:
  explicit BilinearUpsample(int factor) : f_(factor) {}

  const char* kind() const override { return "upsample"; }
  std::string describe() const override { return "upsample(" + std::to_string(f_) + ")"; }

  struct Ctx final : LayerCtx<T> {
    int n, c, h, w;
  };

  TensorT<T> forward(const TensorT<T>& x, Mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    TensorT<T> y = resize_bilinear(x, x.h() * f_, x.w() * f_);
    if (ctx) {
      auto c = std::make_unique<Ctx>();
      c->n = x.n(); c->c = x.c(); c->h = x.h(); c->w = x.w();
      *ctx = std::move(c);
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool) override {
    const auto& ctx = static_cast<const Ctx&>(ctx_base);
    TensorT<T> dx(ctx.n, ctx.c, ctx.h, ctx.w);
    std::vector<int> i0, i1;
    std::vector<T> wy;
    taps(ctx.h, dy.h(), i0, i1, wy);
    std::vector<int> j0, j1;
    std::vector<T> wx;
    taps(ctx.w, dy.w(), j0, j1, wx);
    for (int n = 0; n < dy.n(); ++n)
      for (int c = 0; c < dy.c(); ++c) {
        const T* src = dy.plane(n, c);
        T* dst = dx.plane(n, c);
        for (int oy = 0; oy < dy.h(); ++oy)
          for (int ox = 0; ox < dy.w(); ++ox) {
            const T g = src[oy * dy.w() + ox];
            dst[i0[oy] * ctx.w + j0[ox]] += (1 - wy[oy]) * (1 - wx[ox]) * g;
            dst[i0[oy] * ctx.w + j1[ox]] += (1 - wy[oy]) * wx[ox] * g;
            dst[i1[oy] * ctx.w + j0[ox]] += wy[oy] * (1 - wx[ox]) * g;
            dst[i1[oy] * ctx.w + j1[ox]] += wy[oy] * wx[ox] * g;
          }
      }
    return dx;
  }

  /// Shared bilinear resize (also used by the raster-prior path).
  static TensorT<T> resize_bilinear(const TensorT<T>& x, int oh, int ow) {
    TensorT<T> y(x.n(), x.c(), oh, ow);
    std::vector<int> i0, i1;
    std::vector<T> wy;
    taps(x.h(), oh, i0, i1, wy);
    std::vector<int> j0, j1;
    std::vector<T> wx;
    taps(x.w(), ow, j0, j1, wx);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        const T* src = x.plane(n, c);
        T* dst = y.plane(n, c);
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const T a = src[i0[oy] * x.w() + j0[ox]], b = src[i0[oy] * x.w() + j1[ox]];
            const T c2 = src[i1[oy] * x.w() + j0[ox]], d = src[i1[oy] * x.w() + j1[ox]];
            dst[oy * ow + ox] =
                (1 - wy[oy]) * ((1 - wx[ox]) * a + wx[ox] * b) + wy[oy] * ((1 - wx[ox]) * c2 + wx[ox] * d);
          }
      }
    return y;
  }

private:
  static void taps(int in, int out, std::vector<int>& t0, std::vector<int>& t1, std::vector<T>& w) {
    t0.resize(out);
    t1.resize(out);
    w.resize(out);
    const double scale = double(in) / out;
    for (int o = 0; o < out; ++o) {
      double s = (o + 0.5) * scale - 0.5;
      if (s < 0) s = 0;
      if (s > in - 1) s = in - 1;
      const int lo = int(std::floor(s));
      t0[o] = lo;
      t1[o] = std::min(lo + 1, in - 1);
      w[o] = T(s - lo);
    }
  }

  int f_;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReLU final : public Layer<T> {
public:
  const char* kind() const override { return "relu"; }

  struct Ctx final : LayerCtx<T> {
    TensorT<T> out;
  };

  TensorT<T> forward(const TensorT<T>& x, Mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    TensorT<T> y = x;
    for (size_t i = 0; i < y.size(); ++i)
      if (y[i] < T(0)) y[i] = T(0);
    if (ctx) {
      auto c = std::make_unique<Ctx>();
      c->out = y;
      *ctx = std::move(c);
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool) override {
    const auto& ctx = static_cast<const Ctx&>(ctx_base);
    TensorT<T> dx = dy;
    for (size_t i = 0; i < dx.size(); ++i)
      if (ctx.out[i] <= T(0)) dx[i] = T(0);
    return dx;
  }
};

// ---------------------------------------------------------------------------
// InstanceNorm: per-(sample, channel) standardization, no affine part
// (discriminator stacks only).

template <typename T>
class InstanceNorm final : public Layer<T> {
public:
  explicit InstanceNorm(int channels, T eps = T(1e-5)) : c_(channels), eps_(eps) {}

  const char* kind() const override { return "instnorm"; }
  std::string describe() const override { return "instnorm(" + std::to_string(c_) + ")"; }

  struct Ctx final : LayerCtx<T> {
    TensorT<T> xhat;
    std::vector<T> invstd;  // per (n, c)
  };

  TensorT<T> forward(const TensorT<T>& x, Mode, DomainTag, typename Layer<T>::CtxPtr* ctx) override {
    if (x.c() != c_) throw std::invalid_argument("InstanceNorm: channel mismatch");
    const int m = x.h() * x.w();
    if (m < 2) throw std::invalid_argument("InstanceNorm: spatial size must be >= 2");
    TensorT<T> y(x.n(), x.c(), x.h(), x.w());
    std::vector<T> invstd(size_t(x.n()) * x.c());
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        const T* src = x.plane(n, c);
        double mean = 0;
        for (int i = 0; i < m; ++i) mean += src[i];
        mean /= m;
        double var = 0;
        for (int i = 0; i < m; ++i) {
          const double d = src[i] - mean;
          var += d * d;
        }
        var /= m;
        const T istd = T(1.0 / std::sqrt(var + double(eps_)));
        invstd[size_t(n) * x.c() + c] = istd;
        T* dst = y.plane(n, c);
        for (int i = 0; i < m; ++i) dst[i] = (src[i] - T(mean)) * istd;
      }
    if (ctx) {
      auto cc = std::make_unique<Ctx>();
      cc->xhat = y;
      cc->invstd = std::move(invstd);
      *ctx = std::move(cc);
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& dy, const LayerCtx<T>& ctx_base, bool) override {
    const auto& ctx = static_cast<const Ctx&>(ctx_base);
    const int m = dy.h() * dy.w();
    TensorT<T> dx(dy.n(), dy.c(), dy.h(), dy.w());
    for (int n = 0; n < dy.n(); ++n)
      for (int c = 0; c < dy.c(); ++c) {
        const T* g = dy.plane(n, c);
        const T* xh = ctx.xhat.plane(n, c);
        const T istd = ctx.invstd[size_t(n) * dy.c() + c];
        double sum_g = 0, sum_gx = 0;
        for (int i = 0; i < m; ++i) {
          sum_g += g[i];
          sum_gx += double(g[i]) * xh[i];
        }
        T* dst = dx.plane(n, c);
        for (int i = 0; i < m; ++i)
          dst[i] = istd * (g[i] - T(sum_g / m) - xh[i] * T(sum_gx / m));
      }
    return dx;
  }

private:
  int c_;
  T eps_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Sequential {
public:
  struct Tape {
    std::vector<typename Layer<T>::CtxPtr> ctx;
    TensorT<T> output;
  };

  void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }
  size_t size() const { return layers_.size(); }
  Layer<T>* layer(size_t i) { return layers_[i].get(); }
  const Layer<T>* layer(size_t i) const { return layers_[i].get(); }
  void replace(size_t i, std::unique_ptr<Layer<T>> layer) { layers_[i] = std::move(layer); }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, DomainTag domain, Tape* tape) {
    if (tape) tape->ctx.resize(layers_.size());
    TensorT<T> cur = x;
    for (size_t i = 0; i < layers_.size(); ++i)
      cur = layers_[i]->forward(cur, mode, domain, tape ? &tape->ctx[i] : nullptr);
    if (tape) tape->output = cur;
    return cur;
  }

  TensorT<T> backward(const TensorT<T>& dy, const Tape& tape, bool acc_param_grads = true) {
    TensorT<T> cur = dy;
    for (size_t i = layers_.size(); i-- > 0;) cur = layers_[i]->backward(cur, *tape.ctx[i], acc_param_grads);
    return cur;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& l : layers_)
      for (Param<T>* p : l->params()) out.push_back(p);
    return out;
  }

  /// Stable per-layer names ("L03.conv.w"), used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Param<T>*>> named_params() {
    std::vector<std::pair<std::string, Param<T>*>> out;
    for (size_t i = 0; i < layers_.size(); ++i)
      for (Param<T>* p : layers_[i]->params()) out.emplace_back(layer_prefix(i) + "." + p->name, p);
    return out;
  }

  std::vector<std::pair<std::string, std::vector<T>*>> named_state() {
    std::vector<std::pair<std::string, std::vector<T>*>> out;
    for (size_t i = 0; i < layers_.size(); ++i)
      for (auto& [name, vec] : layers_[i]->state()) out.emplace_back(layer_prefix(i) + "." + name, vec);
    return out;
  }

  void zero_grad() {
    for (Param<T>* p : params()) p->grad.zero();
  }

  std::string describe() const {
    std::string s;
    for (size_t i = 0; i < layers_.size(); ++i) {
      if (i) s += "-";
      s += layers_[i]->describe();
    }
    return s;
  }

private:
  std::string layer_prefix(size_t i) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "L%02zu", i);
    return std::string(buf) + "." + layers_[i]->kind();
  }

  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace skeladapt::nn
