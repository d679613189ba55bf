#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "skeladapt/nn/layers.hpp"

namespace skeladapt::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Slot order is fixed by the param list handed to
/// the constructor, so checkpoints restore exactly.
template <typename T>
class Adam {
public:
  Adam(std::vector<Param<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->value.size(), 0.0);
      v_[i].assign(params_[i]->value.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<T>* p = params_[i];
      for (size_t j = 0; j < p->value.size(); ++j) {
        const double g = double(p->grad[j]);
        m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        p->value[j] -= T(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (Param<T>* p : params_) p->grad.zero();
  }

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  /// Flat serialization: step count then m/v per slot.
  std::vector<double> save_state() const {
    std::vector<double> out;
    out.push_back(double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      out.insert(out.end(), m_[i].begin(), m_[i].end());
      out.insert(out.end(), v_[i].begin(), v_[i].end());
    }
    return out;
  }

  void load_state(const std::vector<double>& flat) {
    size_t off = 0;
    if (flat.empty()) throw std::invalid_argument("Adam: empty state");
    t_ = int64_t(flat[off++]);
    for (size_t i = 0; i < params_.size(); ++i) {
      const size_t n = params_[i]->value.size();
      if (off + 2 * n > flat.size()) throw std::invalid_argument("Adam: state size mismatch");
      std::copy(flat.begin() + off, flat.begin() + off + n, m_[i].begin());
      off += n;
      std::copy(flat.begin() + off, flat.begin() + off + n, v_[i].begin());
      off += n;
    }
    if (off != flat.size()) throw std::invalid_argument("Adam: state size mismatch");
  }

private:
  std::vector<Param<T>*> params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace skeladapt::nn
