#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdn/nn/tensor.hpp"

namespace vdn::nn {

// A learnable tensor together with its gradient accumulator and Adam moments.
template <typename T>
struct BasicParam {
  BasicParam() = default;
  BasicParam(std::string param_name, std::vector<std::size_t> shape)
      : name(std::move(param_name)),
        value(shape),
        grad(shape),
        adam_m(shape),
        adam_v(shape) {}

  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
  BasicTensor<T> adam_m;
  BasicTensor<T> adam_v;
  std::int64_t adam_t = 0;

  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(T{0}); }
};

using Param = BasicParam<float>;

template <typename T>
using ParamList = std::vector<BasicParam<T>*>;

template <typename T>
std::size_t total_size(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

// Copies values between parameter lists of possibly different precision.
// Lists must have matching shapes in matching order.
template <typename To, typename From>
void copy_values(const ParamList<To>& dst, const std::vector<const BasicParam<From>*>& src) {
  if (dst.size() != src.size()) {
    throw ConfigError("parameter list length mismatch: " + std::to_string(dst.size()) +
                      " vs " + std::to_string(src.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->value.shape() != src[i]->value.shape()) {
      throw ConfigError("parameter '" + dst[i]->name + "' shape mismatch " +
                        shape_string(dst[i]->value.shape()) + " vs " +
                        shape_string(src[i]->value.shape()));
    }
    const auto from = src[i]->value.data();
    auto to = dst[i]->value.data();
    for (std::size_t k = 0; k < from.size(); ++k) to[k] = static_cast<To>(from[k]);
  }
}

}  // namespace vdn::nn
