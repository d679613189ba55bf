#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace skeladapt {

/// Dense NCHW tensor. The only container the layer engine works with;
/// vectors (per-channel stats etc.) are stored as 1xCx1x1.
template <typename T>
class TensorT {
public:
  TensorT() = default;
  TensorT(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w), data_(size_t(n) * c * h * w, T(0)) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw std::invalid_argument("TensorT: negative dimension");
  }

  static TensorT full(int n, int c, int h, int w, T v) {
    TensorT t(n, c, h, w);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const TensorT& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  std::string shape_str() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& at(int n, int c, int y, int x) { return data_[idx(n, c, y, x)]; }
  T at(int n, int c, int y, int x) const { return data_[idx(n, c, y, x)]; }
  T& operator[](size_t i) { return data_[i]; }
  T operator[](size_t i) const { return data_[i]; }

  /// Pointer to the start of one (n, c) plane.
  T* plane(int n, int c) { return data_.data() + idx(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + idx(n, c, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  void add_scaled(const TensorT& o, T s) {
    if (!same_shape(o)) throw std::invalid_argument("add_scaled: shape mismatch " + shape_str() + " vs " + o.shape_str());
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  T max_abs_diff(const TensorT& o) const {
    if (!same_shape(o)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    T m = 0;
    for (size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - o.data_[i]));
    return m;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(n_, c_, h_, w_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = U(data_[i]);
    return out;
  }

  /// One image of a batch as its own 1xCxHxW tensor.
  TensorT slice(int n) const {
    TensorT out(1, c_, h_, w_);
    std::copy(data_.begin() + idx(n, 0, 0, 0), data_.begin() + idx(n, 0, 0, 0) + size_t(c_) * h_ * w_, out.data());
    return out;
  }

private:
  size_t idx(int n, int c, int y, int x) const {
    return ((size_t(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace skeladapt
