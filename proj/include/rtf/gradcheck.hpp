#pragma once

#include <functional>
#include <string>

#include "rtf/autodiff.hpp"

namespace rtf {

// Builds a scalar on a fresh tape from the given parameters.
using ScalarFn = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckOptions {
  double h = 1e-4;
  double floor = 1e-7;
  // When positive, a scalar whose error exceeds this is probed again with
  // steps h/10 and h/100 (a ReLU kink inside [p - h, p + h] breaks the central
  // difference). If the error persists, the point itself is taken to be a
  // kink: the analytic value is then compared with the interval spanned by
  // the left and right one-sided slopes (second order) at the smallest step, and accepted
  // if it lies within (retry_above relative tolerance of) that interval.
  double retry_above = 0;
};

struct GradCheckResult {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t retried = 0;  // scalars that needed a smaller step
  std::size_t kinks = 0;    // scalars judged by one-sided slopes
};

// Compares reverse-mode gradients with central differences
// (f(p + h) - f(p - h)) / 2h for every scalar parameter. The relative error of
// one scalar is |analytic - numeric| / max(|analytic|, |numeric|, floor).
// Parameters are restored afterwards; store gradients are overwritten with
// the analytic ones. Throws NumericError on a non-finite evaluation.
GradCheckResult grad_check(const ScalarFn& f, ParamStore& params, const GradCheckOptions& options);

inline GradCheckResult grad_check(const ScalarFn& f, ParamStore& params, double h = 1e-4,
                                  double floor = 1e-7) {
  return grad_check(f, params, GradCheckOptions{h, floor, 0});
}

}  // namespace rtf
