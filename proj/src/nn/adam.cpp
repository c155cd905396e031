#include "vdn/nn/adam.hpp"

#include <cmath>

namespace vdn::nn {

void adam_step(Param& param, double lr, const AdamConfig& config) {
  if (!param.grad.all_finite()) {
    throw TrainingFault("non-finite gradient in parameter '" + param.name + "' at adam step " +
                        std::to_string(param.adam_t + 1));
  }
  param.adam_t += 1;
  const double t = static_cast<double>(param.adam_t);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const float b1 = static_cast<float>(config.beta1);
  const float b2 = static_cast<float>(config.beta2);
  const float step = static_cast<float>(lr / correction1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(correction2));
  const float eps = static_cast<float>(config.epsilon);

  float* value = param.value.raw();
  float* grad = param.grad.raw();
  float* m = param.adam_m.raw();
  float* v = param.adam_v.raw();
  const std::size_t n = param.size();
  for (std::size_t k = 0; k < n; ++k) {
    const float g = grad[k];
    m[k] = b1 * m[k] + (1.0f - b1) * g;
    v[k] = b2 * v[k] + (1.0f - b2) * g * g;
    value[k] -= step * m[k] / (std::sqrt(v[k]) * inv_sqrt_c2 + eps);
    grad[k] = 0.0f;
  }
}

void adam_step(const ParamList<float>& params, double lr, const AdamConfig& config) {
  for (Param* p : params) adam_step(*p, lr, config);
}

}  // namespace vdn::nn
