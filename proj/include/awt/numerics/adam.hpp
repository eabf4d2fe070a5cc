#pragma once

#include "awt/numerics/tensor.hpp"

#include <cmath>
#include <vector>

namespace awt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of every block, then clears the gradients.
template <typename Scalar>
void adam_step(const std::vector<ParamBlock<Scalar>*>& blocks, double lr, const AdamConfig& cfg = {}) {
  const Scalar b1 = Scalar(cfg.beta1);
  const Scalar b2 = Scalar(cfg.beta2);
  for (ParamBlock<Scalar>* p : blocks) {
    if (p->grad.size() != p->value.size()) p->zero_grad();
    if (p->adam_m.size() != p->value.size()) p->adam_m.setZero(p->value.rows(), p->value.cols());
    if (p->adam_v.size() != p->value.size()) p->adam_v.setZero(p->value.rows(), p->value.cols());
    p->adam_t += 1;
    p->adam_m = b1 * p->adam_m + (Scalar(1) - b1) * p->grad;
    p->adam_v = b2 * p->adam_v + (Scalar(1) - b2) * p->grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - Scalar(std::pow(cfg.beta1, static_cast<double>(p->adam_t)));
    const Scalar c2 = Scalar(1) - Scalar(std::pow(cfg.beta2, static_cast<double>(p->adam_t)));
    p->value.array() -= Scalar(lr) * (p->adam_m.array() / c1) /
                        ((p->adam_v.array() / c2).sqrt() + Scalar(cfg.epsilon));
    p->zero_grad();
  }
}

template <typename Scalar>
void zero_grads(const std::vector<ParamBlock<Scalar>*>& blocks) {
  for (ParamBlock<Scalar>* p : blocks) p->zero_grad();
}

}  // namespace awt
