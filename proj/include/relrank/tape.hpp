#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relrank/tensor.hpp"

namespace relrank {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Gradients produced by one reverse sweep. Nodes the loss does not depend
/// on report a zero tensor of their value's shape.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<Tensor> grads, std::vector<Shape> shapes)
      : grads_(std::move(grads)), shapes_(std::move(shapes)) {}

  Tensor of(Var v) const;

 private:
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
};

/// Append-only record of a computation. Nodes are created in topological
/// order, so a reverse walk over node ids is a valid backward schedule.
/// Single writer; not thread-safe.
class Tape {
 public:
  // The closure receives the node's accumulated output gradient and pushes
  // contributions into its inputs through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  // Records an op. Throws NumericalError if `value` has a non-finite entry.
  Var push(std::string_view op, std::span<const Var> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const std::string& op(Var v) const { return nodes_.at(v.id).op; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Adds `g` into the gradient slot of `v`. No-op for constants.
  void accumulate(Var v, const Tensor& g);
  // Direct access to the (lazily zero-initialised) gradient slot of `v`,
  // or nullptr when `v` does not require a gradient.
  Tensor* grad_slot(Var v);

  Gradients backward(Var loss);

 private:
  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

enum class Activation { sigmoid, tanh, leaky_relu };

inline constexpr double kLeakySlope = 0.2;

double apply_activation(Activation kind, double x);

// Differentiable ops. All inputs must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// X: R x C, bias: length C (broadcast over rows).
Var add_bias(Var x, Var bias);
Var activation(Activation kind, Var x);
Var sum(Var x);
Var mean(Var x);
// Softmax over entries where mask is true; masked-out entries are 0.
Var masked_softmax(Var x, std::span<const bool> mask);
Var concat_cols(Var a, Var b);
// Columns [begin, begin + count) of a matrix.
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var reshape(Var x, Shape shape);

// Row gather/scatter used for message passing over edge lists.
Var gather_rows(Var x, std::span<const std::size_t> index);
Var scatter_add_rows(Var x, std::span<const std::size_t> index, std::size_t n_rows);
// Row-wise inner product of two M x C matrices -> length-M vector.
Var row_dot(Var a, Var b);
// Multiplies row m of X (M x C) by w[m].
Var scale_rows(Var x, Var w);
// Softmax within each segment: out[m] = exp(s[m]) / sum_{seg(m')=seg(m)} exp(s[m']).
Var segment_softmax(Var s, std::span<const std::size_t> segment, std::size_t n_segments);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace relrank
