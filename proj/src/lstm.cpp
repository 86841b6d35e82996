#include "relrank/lstm.hpp"

#include <cmath>

#include "relrank/error.hpp"

namespace relrank {

namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// [A^T B^T C^T D^T] for four equally shaped matrices.
Var stack_transposed(Var a, Var b, Var c, Var d) {
  return concat_cols(concat_cols(transpose(a), transpose(b)), concat_cols(transpose(c), transpose(d)));
}

Var stack_vectors(Var a, Var b, Var c, Var d) {
  const std::size_t u = a.value().numel();
  auto row = [u](Var v) { return reshape(v, {1, u}); };
  return reshape(concat_cols(concat_cols(row(a), row(b)), concat_cols(row(c), row(d))), {4 * u});
}

}  // namespace

LstmWeights LstmWeights::random(std::size_t u, std::size_t d, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(u));
  LstmWeights w;
  for (Tensor* t : {&w.W_z, &w.W_i, &w.W_f, &w.W_o}) *t = uniform({u, d}, bound, rng);
  for (Tensor* t : {&w.Q_z, &w.Q_i, &w.Q_f, &w.Q_o}) *t = uniform({u, u}, bound, rng);
  for (Tensor* t : {&w.b_z, &w.b_i, &w.b_f, &w.b_o}) *t = uniform({u}, bound, rng);
  return w;
}

LstmWeights LstmWeights::zeros(std::size_t u, std::size_t d) {
  LstmWeights w;
  for (Tensor* t : {&w.W_z, &w.W_i, &w.W_f, &w.W_o}) *t = Tensor({u, d});
  for (Tensor* t : {&w.Q_z, &w.Q_i, &w.Q_f, &w.Q_o}) *t = Tensor({u, u});
  for (Tensor* t : {&w.b_z, &w.b_i, &w.b_f, &w.b_o}) *t = Tensor({u});
  return w;
}

void LstmWeights::store(ParamSet& params, const std::string& p) const {
  params.add(p + "W_z", W_z);
  params.add(p + "W_i", W_i);
  params.add(p + "W_f", W_f);
  params.add(p + "W_o", W_o);
  params.add(p + "Q_z", Q_z);
  params.add(p + "Q_i", Q_i);
  params.add(p + "Q_f", Q_f);
  params.add(p + "Q_o", Q_o);
  params.add(p + "b_z", b_z);
  params.add(p + "b_i", b_i);
  params.add(p + "b_f", b_f);
  params.add(p + "b_o", b_o);
}

LstmWeights LstmWeights::load(const ParamSet& params, const std::string& p) {
  return {params.get(p + "W_z"), params.get(p + "W_i"), params.get(p + "W_f"), params.get(p + "W_o"),
          params.get(p + "Q_z"), params.get(p + "Q_i"), params.get(p + "Q_f"), params.get(p + "Q_o"),
          params.get(p + "b_z"), params.get(p + "b_i"), params.get(p + "b_f"), params.get(p + "b_o")};
}

LstmVars LstmVars::bind(const Bindings& b, const std::string& p) {
  return {stack_transposed(b[p + "W_z"], b[p + "W_i"], b[p + "W_f"], b[p + "W_o"]),
          stack_transposed(b[p + "Q_z"], b[p + "Q_i"], b[p + "Q_f"], b[p + "Q_o"]),
          stack_vectors(b[p + "b_z"], b[p + "b_i"], b[p + "b_f"], b[p + "b_o"]), b[p + "b_z"].value().numel()};
}

LstmVars LstmVars::bind(Tape& tape, const LstmWeights& w) {
  auto c = [&](const Tensor& t) { return tape.constant(t); };
  return {stack_transposed(c(w.W_z), c(w.W_i), c(w.W_f), c(w.W_o)),
          stack_transposed(c(w.Q_z), c(w.Q_i), c(w.Q_f), c(w.Q_o)),
          stack_vectors(c(w.b_z), c(w.b_i), c(w.b_f), c(w.b_o)), w.units()};
}

LstmStateVars lstm_step(Var x, const LstmStateVars& s, const LstmVars& w) {
  const std::size_t u = w.units;
  const Var pre = add_bias(matmul(x, w.W_t) + matmul(s.h, w.Q_t), w.b);
  const Var z = activation(Activation::tanh, slice_cols(pre, 0, u));
  const Var i = activation(Activation::sigmoid, slice_cols(pre, u, u));
  const Var f = activation(Activation::sigmoid, slice_cols(pre, 2 * u, u));
  const Var o = activation(Activation::sigmoid, slice_cols(pre, 3 * u, u));
  const Var c = f * s.c + i * z;
  const Var h = o * activation(Activation::tanh, c);
  return {h, c};
}

Var sequential_embedding(Tape& tape, const Tensor& window, const LstmVars& w) {
  if (window.rank() != 3) throw ShapeError("sequential_embedding expects an N x S x D window, got " +
                                           shape_string(window.shape()));
  const std::size_t n = window.dim(0), steps = window.dim(1), d = window.dim(2);
  const std::size_t u = w.units;
  if (steps == 0) throw ShapeError("sequential_embedding needs at least one time step");
  if (w.W_t.value().rows() != d) {
    throw ShapeError("sequential_embedding: window feature dim " + std::to_string(d) + " vs weights " +
                     shape_string(w.W_t.value().shape()));
  }
  LstmStateVars state{tape.constant(Tensor({n, u})), tape.constant(Tensor({n, u}))};
  for (std::size_t s = 0; s < steps; ++s) {
    Tensor x({n, d});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < d; ++f) x.at(i, f) = window.at(i, s, f);
    state = lstm_step(tape.constant(std::move(x)), state, w);
  }
  return state.h;
}

LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmWeights& w) {
  const std::size_t d = w.input_dim(), u = w.units();
  const Tensor xm = x.rank() == 1 ? x.reshaped({1, x.numel()}) : x;
  if (xm.cols() != d) {
    throw ShapeError("lstm_cell: input " + shape_string(x.shape()) + " vs W " + shape_string(w.W_z.shape()));
  }
  const std::size_t n = xm.rows();
  auto as_matrix = [&](const Tensor& t) {
    if (t.numel() != n * u) throw ShapeError("lstm_cell: state " + shape_string(t.shape()) + " vs units " +
                                             std::to_string(u));
    return t.reshaped({n, u});
  };
  Tape tape;
  const LstmVars vars = LstmVars::bind(tape, w);
  const LstmStateVars out = lstm_step(tape.constant(xm), {tape.constant(as_matrix(state.h)),
                                                          tape.constant(as_matrix(state.c))}, vars);
  LstmState result{out.h.value(), out.c.value()};
  if (x.rank() == 1) {
    result.h = result.h.reshaped({u});
    result.c = result.c.reshaped({u});
  }
  return result;
}

Tensor sequential_embedding(const Tensor& window, const LstmWeights& w) {
  Tape tape;
  return sequential_embedding(tape, window, LstmVars::bind(tape, w)).value();
}

}  // namespace relrank
