#pragma once

#include <cmath>
#include <numbers>

#include "uavfl/lsnet/model.hpp"

namespace uavfl::lsnet {

struct OptimConfig {
  double lr = 0.01;
  double momentum = 0.0;
  bool cosine = false;  // cosine decay from lr to 0 over total_steps
  long total_steps = 0;
};

/// Plain SGD with optional classic momentum (v = mu*v + g; w -= lr*v).
template <typename S>
class Sgd {
 public:
  Sgd(LSNet<S>& model, const OptimConfig& cfg) : model_(model), cfg_(cfg) {
    for (Param<S>* p : model.params())
      velocity_.push_back(p->trainable ? MatX<S>::Zero(p->value.rows(), p->value.cols())
                                       : MatX<S>());
  }

  double lr_at(long step) const {
    if (!cfg_.cosine || cfg_.total_steps <= 0) return cfg_.lr;
    const double t = std::min(1.0, static_cast<double>(step) / cfg_.total_steps);
    return cfg_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }

  void step(long step_index) {
    const S lr = static_cast<S>(lr_at(step_index));
    const S mu = static_cast<S>(cfg_.momentum);
    auto& params = model_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param<S>* p = params[i];
      if (!p->trainable) continue;
      if (mu != S(0)) {
        velocity_[i] = mu * velocity_[i] + p->grad;
        p->value -= lr * velocity_[i];
      } else {
        p->value -= lr * p->grad;
      }
    }
  }

 private:
  LSNet<S>& model_;
  OptimConfig cfg_;
  std::vector<MatX<S>> velocity_;
};

}  // namespace uavfl::lsnet
