#include "relrank/adam.hpp"

#include <cmath>

#include "relrank/error.hpp"

namespace relrank {

AdamState make_adam_state(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state sets differ in size");
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (auto& [name, theta] : params) {
    const Tensor& g = grads.get(name);
    Tensor& m = state.first_moment.get(name);
    Tensor& v = state.second_moment.get(name);
    if (g.shape() != theta.shape() || m.shape() != theta.shape()) {
      throw ShapeError("adam_step: shape mismatch for '" + name + "': param " + shape_string(theta.shape()) +
                       ", grad " + shape_string(g.shape()));
    }
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    if (!theta.all_finite()) throw NumericalError("adam_step produced a non-finite value in '" + name + "'");
  }
}

}  // namespace relrank
