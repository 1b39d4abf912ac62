#include "rtf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rtf/core.hpp"

namespace rtf {

namespace {

double evaluate(const ScalarFn& f, const ParamStore& params) {
  Tape tape;
  const Var out = f(tape, params);
  const Tensor& v = out.value();
  if (v.size() != 1) throw std::invalid_argument("grad_check: function must return one value");
  if (!v.all_finite()) throw NumericError("grad_check: non-finite function value");
  return static_cast<double>(v[0]);
}

struct Probe {
  double plus, minus;
};

Probe probe(const ScalarFn& f, ParamStore& params, real& slot, double h) {
  const real saved = slot;
  slot = saved + static_cast<real>(h);
  const double plus = evaluate(f, params);
  slot = saved - static_cast<real>(h);
  const double minus = evaluate(f, params);
  slot = saved;
  return {plus, minus};
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, ParamStore& params, const GradCheckOptions& options) {
  params.zero_grad();
  double base = 0;
  {
    Tape tape;
    const Var out = f(tape, params);
    base = static_cast<double>(out.value().item());
    tape.backward(out);
    tape.accumulate_grads(params);
  }

  const double floor = options.floor;
  auto relative = [floor](double diff, double a, double b) {
    return diff / std::max({std::abs(a), std::abs(b), floor});
  };

  GradCheckResult result;
  for (auto& e : params) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double analytic = static_cast<double>(e.grad[i]);
      if (!std::isfinite(analytic)) throw NumericError("grad_check: non-finite gradient in " + e.name);

      double h = options.h;
      Probe p = probe(f, params, e.value[i], h);
      double numeric = (p.plus - p.minus) / (2 * h);
      double abs_err = std::abs(analytic - numeric);
      double rel_err = relative(abs_err, analytic, numeric);

      if (options.retry_above > 0 && rel_err > options.retry_above) {
        ++result.retried;
        for (int k = 0; k < 2 && rel_err > options.retry_above; ++k) {
          h /= 10;
          p = probe(f, params, e.value[i], h);
          const double n = (p.plus - p.minus) / (2 * h);
          const double a = std::abs(analytic - n);
          const double r = relative(a, analytic, n);
          if (r < rel_err) numeric = n, abs_err = a, rel_err = r;
        }
        if (rel_err > options.retry_above) {
          // Second-order one-sided differences; the first-order ones are too
          // coarse next to layer norms of near-constant rows.
          const Probe far = probe(f, params, e.value[i], 2 * h);
          const double left = (3 * base - 4 * p.minus + far.minus) / (2 * h);
          const double right = (-3 * base + 4 * p.plus - far.plus) / (2 * h);
          const double lo = std::min(left, right), hi = std::max(left, right);
          const double outside = analytic < lo ? lo - analytic : analytic > hi ? analytic - hi : 0;
          const double r = outside / std::max({std::abs(analytic), std::abs(left), std::abs(right), floor});
          if (r <= options.retry_above) {
            ++result.kinks;
            abs_err = outside;
            rel_err = r;
          }
        }
      }

      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel_err > result.max_rel_error || result.checked == 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel_err);
        result.worst_param = e.name;
        result.worst_index = i;
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace rtf
