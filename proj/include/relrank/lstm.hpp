#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <string>

#include "relrank/params.hpp"
#include "relrank/tape.hpp"

namespace relrank {

/// Single-layer LSTM weights. W_* map the D-dim input, Q_* the U-dim
/// previous hidden state; the output gate's recurrent map is Q_o.
struct LstmWeights {
  Tensor W_z, W_i, W_f, W_o;  // U x D
  Tensor Q_z, Q_i, Q_f, Q_o;  // U x U
  Tensor b_z, b_i, b_f, b_o;  // U

  std::size_t units() const { return W_z.rows(); }
  std::size_t input_dim() const { return W_z.cols(); }

  // Uniform in [-1/sqrt(U), 1/sqrt(U)], biases included.
  static LstmWeights random(std::size_t units, std::size_t input_dim, std::mt19937_64& rng);
  static LstmWeights zeros(std::size_t units, std::size_t input_dim);

  void store(ParamSet& params, const std::string& prefix = "lstm.") const;
  static LstmWeights load(const ParamSet& params, const std::string& prefix = "lstm.");
};

/// Rows are stocks: h and c are N x U.
struct LstmState {
  Tensor h;
  Tensor c;
};

/// Tape-side weights with the four gates stacked column-wise in z, i, f, o
/// order: W_t is D x 4U, Q_t is U x 4U, b is 4U. A batched step is then one
/// product X * W_t + H * Q_t + b.
struct LstmVars {
  Var W_t;
  Var Q_t;
  Var b;
  std::size_t units = 0;

  static LstmVars bind(const Bindings& params, const std::string& prefix = "lstm.");
  static LstmVars bind(Tape& tape, const LstmWeights& w);
};

struct LstmStateVars {
  Var h;
  Var c;
};

// One recurrence step for a batch of rows: x is N x D, state N x U.
LstmStateVars lstm_step(Var x, const LstmStateVars& state, const LstmVars& w);

// Unrolls over a window (N x S x D) from a zero state; returns the final
// hidden state, N x U.
Var sequential_embedding(Tape& tape, const Tensor& window, const LstmVars& w);

// Value-only conveniences. `x` may be a length-D vector or an N x D matrix.
LstmState lstm_cell(const Tensor& x, const LstmState& state, const LstmWeights& w);
Tensor sequential_embedding(const Tensor& window, const LstmWeights& w);

}  // namespace relrank
