#pragma once

#include <functional>
#include <string>

#include "vdn/nn/param.hpp"

namespace vdn::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t refined = 0;
  std::size_t kinks = 0;  // refinement steps rejected for a kink in the window
};

// Compares the gradients stored in `params` against central differences of
// `loss` (which must re-evaluate the loss from the current parameter values).
// Relative error per scalar is |a - n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(const ParamList<double>& params,
                               const std::function<double()>& loss, double step = 1e-5,
                               double floor = 1e-12);

// As above, but any scalar whose estimate disagrees by more than
// `refine_above` is re-differenced with `precise_loss`, a higher-precision
// evaluation of the same loss whose value may be offset by a constant. The
// refined step starts at 10 * step and shrinks tenfold, down to step / 100,
// while the estimates at h and h/2 disagree (a kink inside the window).
GradCheckResult gradient_check(const ParamList<double>& params,
                               const std::function<double()>& loss,
                               const std::function<double()>& precise_loss,
                               double refine_above = 1e-6, double step = 1e-5,
                               double floor = 1e-12);

double relative_error(double analytic, double numeric, double floor = 1e-12);

}  // namespace vdn::nn
