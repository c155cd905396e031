#pragma once

#include "vdn/nn/param.hpp"

namespace vdn::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update from the accumulated gradient. Increments
// adam_t and zeroes the gradient. Throws TrainingFault on non-finite grads.
void adam_step(Param& param, double lr, const AdamConfig& config = {});

void adam_step(const ParamList<float>& params, double lr, const AdamConfig& config = {});

}  // namespace vdn::nn
