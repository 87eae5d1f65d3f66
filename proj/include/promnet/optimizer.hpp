#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "promnet/tensor.hpp"

namespace promnet {

struct RmsPropHyper {
  double lr = 0.001;
  double decay = 0.9;
  double eps = 1e-8;
};

// ms' = decay*ms + (1-decay)*g^2 ; p' = p - lr*g/(sqrt(ms') + eps)
template <typename T>
void rmsprop_update(TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& ms,
                    const RmsPropHyper& hp) {
  require_same_shape(param, grad, "rmsprop_update");
  require_same_shape(param, ms, "rmsprop_update");
  const T decay = static_cast<T>(hp.decay);
  const T one_minus = static_cast<T>(1.0 - hp.decay);
  const T lr = static_cast<T>(hp.lr);
  const T eps = static_cast<T>(hp.eps);
  for (std::int64_t i = 0; i < param.numel(); ++i) {
    T g = grad[i];
    ms[i] = decay * ms[i] + one_minus * g * g;
    param[i] -= lr * g / (std::sqrt(ms[i]) + eps);
    if (!std::isfinite(static_cast<double>(param[i])))
      throw std::runtime_error("rmsprop_update produced a non-finite parameter");
  }
}

template <typename T>
class RmsProp {
 public:
  RmsPropHyper hyper;

  RmsProp() = default;
  explicit RmsProp(RmsPropHyper hp) : hyper(hp) {}

  void init(const std::vector<ParamRef<T>>& params) {
    ms_.clear();
    ms_.reserve(params.size());
    for (const auto& p : params) ms_.push_back(zeros_like(*p.value));
  }

  bool initialized() const { return !ms_.empty(); }

  void step(const std::vector<ParamRef<T>>& params) {
    if (ms_.size() != params.size())
      throw std::invalid_argument("rmsprop: optimizer tracks " + std::to_string(ms_.size()) +
                                  " parameters, model has " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
      rmsprop_update(*params[i].value, *params[i].grad, ms_[i], hyper);
  }

  std::vector<TensorT<T>>& accumulators() { return ms_; }
  const std::vector<TensorT<T>>& accumulators() const { return ms_; }

 private:
  std::vector<TensorT<T>> ms_;
};

// Scales every gradient so the global L2 norm is at most max_norm.
template <typename T>
double clip_grad_norm(const std::vector<ParamRef<T>>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (std::int64_t i = 0; i < p.grad->numel(); ++i) {
      double g = static_cast<double>((*p.grad)[i]);
      sq += g * g;
    }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    T scale = static_cast<T>(max_norm / norm);
    for (const auto& p : params)
      for (std::int64_t i = 0; i < p.grad->numel(); ++i) (*p.grad)[i] *= scale;
  }
  return norm;
}

}  // namespace promnet
