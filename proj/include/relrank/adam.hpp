#pragma once

#include <cstddef>

#include "relrank/params.hpp"

namespace relrank {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  ParamSet first_moment;
  ParamSet second_moment;
};

AdamState make_adam_state(const ParamSet& params, AdamConfig config = {});

// One bias-corrected Adam update of every entry in `params`.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

}  // namespace relrank
