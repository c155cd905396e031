#include "vdn/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vdn::nn {

namespace {
// Relative gap between the h and h/2 estimates above which the loss is taken
// to have a kink inside the step.
constexpr double kSmoothTolerance = 1e-6;
// Absolute rounding allowed in the precise loss.
constexpr double kLossRounding = 1e-17;
}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(const ParamList<double>& params,
                               const std::function<double()>& loss, double step,
                               double floor) {
  return gradient_check(params, loss, {}, 0.0, step, floor);
}

GradCheckResult gradient_check(const ParamList<double>& params,
                               const std::function<double()>& loss,
                               const std::function<double()>& precise_loss,
                               double refine_above, double step, double floor) {
  GradCheckResult result;
  auto difference = [&](double& value, double saved, const std::function<double()>& f) {
    value = saved + step;
    const double up = f();
    value = saved - step;
    const double down = f();
    value = saved;
    return (up - down) / (2.0 * step);
  };
  // Extended-precision estimate. Rounding in the precise loss is small enough
  // to start from a 10x larger step, which keeps tiny gradients clear of the
  // rounding floor. Central differences at h and h/2 agree to O(h^2) on a
  // smooth loss; when they do not, a ReLU kink lies inside the window and the
  // step shrinks tenfold.
  auto refine = [&](double& value, double saved) {
    auto central = [&](double h) {
      value = saved + h;
      const double up = precise_loss();
      value = saved - h;
      const double down = precise_loss();
      value = saved;
      return (up - down) / (2.0 * h);
    };
    double estimate = 0.0;
    for (double h = 10.0 * step; h >= step / 100.0; h /= 10.0) {
      const double coarse = central(h);
      estimate = central(h / 2.0);
      const double gap = std::abs(coarse - estimate);
      if (gap <= kSmoothTolerance * std::max(std::abs(coarse), std::abs(estimate)) + kLossRounding / h) break;
      ++result.kinks;
    }
    return estimate;
  };
  for (auto* p : params) {
    auto values = p->value.data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      double numeric = difference(values[k], saved, loss);
      const double analytic = p->grad[k];
      double err = relative_error(analytic, numeric, floor);
      if (precise_loss && err > refine_above) {
        numeric = refine(values[k], saved);
        err = relative_error(analytic, numeric, floor);
        ++result.refined;
      }
      ++result.checked;
      if (err > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = err;
        result.worst_param = p->name;
        result.worst_index = k;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace vdn::nn
