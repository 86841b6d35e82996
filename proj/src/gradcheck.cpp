#include "relrank/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "relrank/error.hpp"

namespace relrank {

Evaluation evaluate(const Objective& f, const ParamSet& params) {
  Tape tape;
  const Bindings b = params.bind(tape);
  const Var loss = f(tape, b);
  Evaluation out;
  out.value = loss.value()[0];
  out.gradients = b.gradients(tape.backward(loss), params);
  return out;
}

double evaluate_value(const Objective& f, const ParamSet& params) {
  Tape tape;
  const Bindings b = params.bind(tape);
  const Var loss = f(tape, b);
  if (loss.value().numel() != 1) throw ShapeError("objective must produce a scalar");
  const double v = loss.value()[0];
  if (!std::isfinite(v)) throw NumericalError("objective evaluated to a non-finite value");
  return v;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport finite_diff_check(const Objective& f, const ParamSet& params, double eps,
                                  const GradientTamper& tamper) {
  if (!(eps > 0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  Evaluation base = evaluate(f, params);
  if (tamper) tamper(base.gradients);

  GradCheckReport report;
  ParamSet probe = params;
  for (const auto& [name, theta] : params) {
    ParamCheck pc{name, 0.0, 0};
    const Tensor& analytic = base.gradients.get(name);
    Tensor& slot = probe.get(name);
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      const double orig = theta[i];
      slot[i] = orig + eps;
      const double up = evaluate_value(f, probe);
      slot[i] = orig - eps;
      const double down = evaluate_value(f, probe);
      slot[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[i], numeric);
      if (err > pc.max_rel_error) {
        pc.max_rel_error = err;
        pc.worst_index = i;
      }
      ++report.coordinates;
    }
    if (pc.max_rel_error > report.max_rel_error || report.worst_param.empty()) {
      report.max_rel_error = pc.max_rel_error;
      report.worst_param = name;
    }
    report.params.push_back(pc);
  }
  return report;
}

}  // namespace relrank
