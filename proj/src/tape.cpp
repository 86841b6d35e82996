#include "relrank/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relrank/error.hpp"

namespace relrank {

namespace {

Tape& same_tape(Var a, Var b, std::string_view op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) + ": operands recorded on different tapes");
  }
  return *a.tape;
}

void require_same_numel(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.numel() != b.numel()) {
    throw ShapeError(std::string(op) + " shape mismatch: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& t, std::string_view op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Tensor Gradients::of(Var v) const {
  if (v.id >= shapes_.size()) throw std::out_of_range("gradient requested for unknown node");
  if (grads_[v.id].numel() == 0 && shape_numel(shapes_[v.id]) != 0) return Tensor(shapes_[v.id]);
  return grads_[v.id];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericalError("non-finite value in variable leaf");
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(std::string_view op, std::span<const Var> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError("non-finite value produced by op '" + std::string(op) + "'");
  }
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape != this) throw std::invalid_argument(n.op + ": input recorded on a different tape");
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor* Tape::grad_slot(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.numel() != n.value.numel()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (Tensor* slot = grad_slot(v)) *slot += g;
}

Gradients Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss recorded on a different tape");
  const Tensor& lv = value(loss);
  if (lv.numel() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_string(lv.shape()));

  for (Node& n : nodes_) n.grad = Tensor();
  std::vector<Shape> shapes;
  shapes.reserve(nodes_.size());
  for (const Node& n : nodes_) shapes.push_back(n.value.shape());

  if (nodes_[loss.id].requires_grad) {
    nodes_[loss.id].grad = Tensor(lv.shape(), 1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.numel() == 0) continue;
      // Closures only write to their inputs, which precede this node.
      Tensor g = std::move(n.grad);
      n.backward(*this, g);
      nodes_[id].grad = std::move(g);
    }
  }

  std::vector<Tensor> grads;
  grads.reserve(nodes_.size());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].grad.all_finite()) {
      throw NumericalError("non-finite gradient reaching op '" + nodes_[id].op + "'");
    }
    grads.push_back(std::move(nodes_[id].grad));
    nodes_[id].grad = Tensor();
  }
  return Gradients(std::move(grads), std::move(shapes));
}

double apply_activation(Activation kind, double x) {
  switch (kind) {
    case Activation::sigmoid:
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::tanh:
      return std::tanh(x);
    case Activation::leaky_relu:
      return x > 0 ? x : kLeakySlope * x;
  }
  return x;
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  Tensor out = matmul(a.value(), b.value());
  const Var in[] = {a, b};
  return tape.push("matmul", in, std::move(out), [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    const double* gp = g.data().data();
    if (Tensor* ga = t.grad_slot(a)) {
      // dA = G B^T
      const double* bp = bv.data().data();
      double* out = ga->data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double* grow = gp + i * n;
          const double* brow = bp + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          out[i * k + p] += acc;
        }
    }
    if (Tensor* gb = t.grad_slot(b)) {
      // dB = A^T G
      const double* ap = av.data().data();
      double* out = gb->data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = ap[i * k + p];
          if (aip == 0.0) continue;
          const double* grow = gp + i * n;
          double* orow = out + p * n;
          for (std::size_t j = 0; j < n; ++j) orow[j] += aip * grow[j];
        }
    }
  });
}

Var transpose(Var a) {
  require_matrix(a.value(), "transpose");
  const Var in[] = {a};
  return a.tape->push("transpose", in, a.value().transposed(),
                      [a](Tape& t, const Tensor& g) { t.accumulate(a, g.transposed()); });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  require_same_numel(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const Var in[] = {a, b};
  return tape.push("add", in, std::move(out), [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  require_same_numel(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  const Var in[] = {a, b};
  return tape.push("sub", in, std::move(out), [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (Tensor* gb = t.grad_slot(b))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "mul");
  require_same_numel(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  const Var in[] = {a, b};
  return tape.push("mul", in, std::move(out), [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (Tensor* ga = t.grad_slot(a))
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * bv[i];
    if (Tensor* gb = t.grad_slot(b))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gb)[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  const Var in[] = {a};
  return a.tape->push("scale", in, std::move(out), [a, factor](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a))
      for (std::size_t i = 0; i < g.numel(); ++i) (*ga)[i] += factor * g[i];
  });
}

Var add_bias(Var x, Var bias) {
  Tape& tape = same_tape(x, bias, "add_bias");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (bias.value().numel() != c) {
    throw ShapeError("add_bias shape mismatch: " + shape_string(xv.shape()) + " + " +
                     shape_string(bias.value().shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bias.value()[j];
  const Var in[] = {x, bias};
  return tape.push("add_bias", in, std::move(out), [x, bias, r, c](Tape& t, const Tensor& g) {
    t.accumulate(x, g);
    if (Tensor* gb = t.grad_slot(bias))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gb)[j] += g[i * c + j];
  });
}

Var activation(Activation kind, Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = apply_activation(kind, v);
  const Var in[] = {x};
  const char* name = kind == Activation::sigmoid ? "sigmoid" : kind == Activation::tanh ? "tanh" : "leaky_relu";
  return x.tape->push(name, in, std::move(out), [x, kind](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_slot(x);
    if (!gx) return;
    const Tensor& xv = t.value(x);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double d = 1.0;
      switch (kind) {
        case Activation::sigmoid: {
          const double y = apply_activation(kind, xv[i]);
          d = y * (1.0 - y);
          break;
        }
        case Activation::tanh: {
          const double y = std::tanh(xv[i]);
          d = 1.0 - y * y;
          break;
        }
        case Activation::leaky_relu:
          d = xv[i] > 0 ? 1.0 : kLeakySlope;
          break;
      }
      (*gx)[i] += g[i] * d;
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const Var in[] = {x};
  return x.tape->push("sum", in, Tensor::scalar(s), [x](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_slot(x))
      for (double& v : gx->data()) v += g[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().numel());
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var masked_softmax(Var x, std::span<const bool> mask) {
  const Tensor& xv = x.value();
  if (mask.size() != xv.numel()) {
    throw ShapeError("masked_softmax: mask length " + std::to_string(mask.size()) + " vs input " +
                     shape_string(xv.shape()));
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) mx = std::max(mx, xv[i]);
  if (!std::isfinite(mx)) throw std::invalid_argument("masked_softmax: mask selects no entries");
  Tensor out(xv.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) z += (out[i] = std::exp(xv[i] - mx));
  for (double& v : out.data()) v /= z;
  const Var in[] = {x};
  std::vector<bool> m(mask.begin(), mask.end());
  Tensor yv = out;
  return x.tape->push("masked_softmax", in, std::move(out), [x, yv = std::move(yv), m](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_slot(x);
    if (!gx) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) dot += yv[i] * g[i];
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) (*gx)[i] += yv[i] * (g[i] - dot);
  });
}

Var concat_cols(Var a, Var b) {
  Tape& tape = same_tape(a, b, "concat_cols");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols row mismatch: " + shape_string(av.shape()) + " | " + shape_string(bv.shape()));
  }
  const std::size_t r = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out({r, ca + cb});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = av[i * ca + j];
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = bv[i * cb + j];
  }
  const Var in[] = {a, b};
  return tape.push("concat_cols", in, std::move(out), [a, b, r, ca, cb](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) (*ga)[i * ca + j] += g[i * (ca + cb) + j];
    if (Tensor* gb = t.grad_slot(b))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) (*gb)[i * cb + j] += g[i * (ca + cb) + ca + j];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  const std::size_t r = xv.rows(), c = xv.cols();
  if (begin + count > c) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(xv.shape()));
  }
  Tensor out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * c + begin + j];
  const Var in[] = {x};
  return x.tape->push("slice_cols", in, std::move(out), [x, r, c, begin, count](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_slot(x))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) (*gx)[i * c + begin + j] += g[i * count + j];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const Var in[] = {x};
  return x.tape->push("reshape", in, std::move(out), [x](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_slot(x))
      for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
  });
}

Var gather_rows(Var x, std::span<const std::size_t> index) {
  const Tensor& xv = x.value();
  const std::size_t c = xv.cols();
  Tensor out({index.size(), c});
  for (std::size_t m = 0; m < index.size(); ++m) {
    if (index[m] >= xv.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(xv.data().begin() + index[m] * c, c, out.data().begin() + m * c);
  }
  const Var in[] = {x};
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape->push("gather_rows", in, std::move(out), [x, idx, c](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_slot(x))
      for (std::size_t m = 0; m < idx.size(); ++m)
        for (std::size_t j = 0; j < c; ++j) (*gx)[idx[m] * c + j] += g[m * c + j];
  });
}

Var scatter_add_rows(Var x, std::span<const std::size_t> index, std::size_t n_rows) {
  const Tensor& xv = x.value();
  if (xv.rows() != index.size()) throw ShapeError("scatter_add_rows: index length does not match rows");
  const std::size_t c = xv.cols();
  Tensor out({n_rows, c});
  for (std::size_t m = 0; m < index.size(); ++m) {
    if (index[m] >= n_rows) throw ShapeError("scatter_add_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out[index[m] * c + j] += xv[m * c + j];
  }
  const Var in[] = {x};
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape->push("scatter_add_rows", in, std::move(out), [x, idx, c](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_slot(x))
      for (std::size_t m = 0; m < idx.size(); ++m)
        for (std::size_t j = 0; j < c; ++j) (*gx)[m * c + j] += g[idx[m] * c + j];
  });
}

Var row_dot(Var a, Var b) {
  Tape& tape = same_tape(a, b, "row_dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ShapeError("row_dot shape mismatch: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  const std::size_t r = av.rows(), c = av.cols();
  Tensor out({r});
  for (std::size_t m = 0; m < r; ++m)
    for (std::size_t j = 0; j < c; ++j) out[m] += av[m * c + j] * bv[m * c + j];
  const Var in[] = {a, b};
  return tape.push("row_dot", in, std::move(out), [a, b, r, c](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (Tensor* ga = t.grad_slot(a))
      for (std::size_t m = 0; m < r; ++m)
        for (std::size_t j = 0; j < c; ++j) (*ga)[m * c + j] += g[m] * bv[m * c + j];
    if (Tensor* gb = t.grad_slot(b))
      for (std::size_t m = 0; m < r; ++m)
        for (std::size_t j = 0; j < c; ++j) (*gb)[m * c + j] += g[m] * av[m * c + j];
  });
}

Var scale_rows(Var x, Var w) {
  Tape& tape = same_tape(x, w, "scale_rows");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (wv.numel() != xv.rows()) {
    throw ShapeError("scale_rows shape mismatch: " + shape_string(xv.shape()) + " by " + shape_string(wv.shape()));
  }
  const std::size_t r = xv.rows(), c = xv.cols();
  Tensor out = xv;
  for (std::size_t m = 0; m < r; ++m)
    for (std::size_t j = 0; j < c; ++j) out[m * c + j] *= wv[m];
  const Var in[] = {x, w};
  return tape.push("scale_rows", in, std::move(out), [x, w, r, c](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    if (Tensor* gx = t.grad_slot(x))
      for (std::size_t m = 0; m < r; ++m)
        for (std::size_t j = 0; j < c; ++j) (*gx)[m * c + j] += g[m * c + j] * wv[m];
    if (Tensor* gw = t.grad_slot(w))
      for (std::size_t m = 0; m < r; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += g[m * c + j] * xv[m * c + j];
        (*gw)[m] += acc;
      }
  });
}

Var segment_softmax(Var s, std::span<const std::size_t> segment, std::size_t n_segments) {
  const Tensor& sv = s.value();
  if (segment.size() != sv.numel()) throw ShapeError("segment_softmax: segment ids do not match input length");
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < segment.size(); ++m) {
    if (segment[m] >= n_segments) throw ShapeError("segment_softmax: segment id out of range");
    mx[segment[m]] = std::max(mx[segment[m]], sv[m]);
  }
  std::vector<double> z(n_segments, 0.0);
  Tensor out({sv.numel()});
  for (std::size_t m = 0; m < segment.size(); ++m) z[segment[m]] += (out[m] = std::exp(sv[m] - mx[segment[m]]));
  for (std::size_t m = 0; m < segment.size(); ++m) out[m] /= z[segment[m]];
  const Var in[] = {s};
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  Tensor yv = out;
  return s.tape->push("segment_softmax", in, std::move(out),
                      [s, yv = std::move(yv), seg, n_segments](Tape& t, const Tensor& g) {
                        Tensor* gs = t.grad_slot(s);
                        if (!gs) return;
                        std::vector<double> dot(n_segments, 0.0);
                        for (std::size_t m = 0; m < seg.size(); ++m) dot[seg[m]] += yv[m] * g[m];
                        for (std::size_t m = 0; m < seg.size(); ++m) (*gs)[m] += yv[m] * (g[m] - dot[seg[m]]);
                      });
}

}  // namespace relrank
