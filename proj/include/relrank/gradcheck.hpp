#pragma once

#include <functional>
#include <string>
#include <vector>

#include "relrank/params.hpp"

namespace relrank {

/// Builds a scalar loss on `tape` from the bound parameters.
using Objective = std::function<Var(Tape& tape, const Bindings& params)>;

struct Evaluation {
  double value = 0.0;
  ParamSet gradients;
};

// Forward + reverse sweep.
Evaluation evaluate(const Objective& f, const ParamSet& params);
// Forward only; throws NumericalError on a non-finite result.
double evaluate_value(const Objective& f, const ParamSet& params);

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t coordinates = 0;
  std::vector<ParamCheck> params;
};

// Test hook applied to the analytic gradients before comparison.
using GradientTamper = std::function<void(ParamSet& grads)>;

double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients with central differences
/// (f(t+eps) - f(t-eps)) / 2eps, one coordinate at a time.
GradCheckReport finite_diff_check(const Objective& f, const ParamSet& params, double eps = 1e-5,
                                  const GradientTamper& tamper = {});

}  // namespace relrank
