#include <gtest/gtest.h>

#include <cmath>

#include "relrank/adam.hpp"
#include "relrank/error.hpp"
#include "relrank/gradcheck.hpp"
#include "relrank/params.hpp"
#include "relrank/tape.hpp"
#include "test_util.hpp"

using namespace relrank;
using relrank::testing::random_tensor;

namespace {

// Gradient check of sum(w .* op(x)) over random x for a one-input op.
double check_unary(const std::function<Var(Var)>& op, Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamSet p;
  p.add("x", random_tensor(shape, rng));
  Tensor out_probe;
  {
    Tape t;
    out_probe = op(t.constant(p.get("x"))).value();
  }
  const Tensor weights = random_tensor(out_probe.shape(), rng);
  const Objective f = [&](Tape& t, const Bindings& b) { return sum(op(b["x"]) * t.constant(weights)); };
  return finite_diff_check(f, p).max_rel_error;
}

}  // namespace

TEST(Tensor, MatmulIdentityAndHandArithmetic) {
  std::mt19937_64 rng(1);
  const Tensor b = random_tensor({2, 3}, rng);
  EXPECT_EQ(matmul(Tensor::identity(2), b), b);
  const Tensor r = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}}));
  EXPECT_EQ(r, Tensor::matrix({{3}, {7}}));
}

TEST(Tensor, MatmulShapeErrorNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] * [2x3]"), std::string::npos);
  }
}

TEST(Tensor, MatmulAssociativity) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor({8, 8}, rng), b = random_tensor({8, 8}, rng), c = random_tensor({8, 8}, rng);
  EXPECT_LT(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-9);
}

TEST(Tensor, DataLengthMustMatchShape) { EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0}), ShapeError); }

TEST(Tape, MatmulGradientIsOnesTimesBTransposed) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  Tape t;
  const Var va = t.variable(a);
  const Gradients g = t.backward(sum(matmul(va, t.constant(b))));
  const Tensor expected = matmul(Tensor({3, 2}, 1.0), b.transposed());
  EXPECT_LT(max_abs_diff(g.of(va), expected), 1e-15);

  ParamSet p;
  p.add("a", a);
  const Objective f = [&](Tape& tt, const Bindings& bb) { return sum(matmul(bb["a"], tt.constant(b))); };
  EXPECT_LT(finite_diff_check(f, p).max_rel_error, 1e-6);
}

TEST(Tape, ActivationValues) {
  EXPECT_DOUBLE_EQ(apply_activation(Activation::sigmoid, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(apply_activation(Activation::leaky_relu, -1.0), -0.2);
  EXPECT_DOUBLE_EQ(apply_activation(Activation::leaky_relu, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(apply_activation(Activation::tanh, 0.3), std::tanh(0.3));
}

TEST(Tape, TanhGradientMatchesClosedForm) {
  Tape t;
  const Var x = t.variable(Tensor::scalar(0.3));
  const Gradients g = t.backward(sum(activation(Activation::tanh, x)));
  EXPECT_NEAR(g.of(x)[0], 1.0 - std::tanh(0.3) * std::tanh(0.3), 1e-15);
}

TEST(Tape, MaskedSoftmax) {
  Tape t;
  const bool both[] = {true, true};
  const Tensor s = masked_softmax(t.constant(Tensor::vector({0, 0})), both).value();
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);

  const bool partial[] = {true, false, true};
  const Tensor p = masked_softmax(t.constant(Tensor::vector({1, 2, 3})), partial).value();
  const double z = std::exp(1.0) + std::exp(3.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-15);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[2], std::exp(3.0) / z, 1e-15);

  const Tensor shifted = masked_softmax(t.constant(Tensor::vector({101, 2, 103})), partial).value();
  EXPECT_LT(max_abs_diff(p, shifted), 1e-14);

  const bool none[] = {false, false};
  EXPECT_THROW(masked_softmax(t.constant(Tensor::vector({1, 2})), none), std::invalid_argument);
}

TEST(Tape, MaskedSoftmaxSumsToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({7}, rng, -5, 5);
    bool mask[7];
    for (auto& m : mask) m = rng() % 2;
    mask[trial % 7] = true;
    Tape t;
    const Tensor s = masked_softmax(t.constant(x), mask).value();
    double total = 0;
    for (int i = 0; i < 7; ++i) {
      EXPECT_GE(s[i], 0.0);
      total += s[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Tape, BackwardOfSumIsOnes) {
  Tape t;
  const Var w = t.variable(Tensor({2, 2}, 3.0));
  EXPECT_EQ(t.backward(sum(w)).of(w), Tensor({2, 2}, 1.0));
}

TEST(Tape, SquaredNormGradientIsTwoWxxT) {
  std::mt19937_64 rng(5);
  const Tensor w = random_tensor({3, 4}, rng), x = random_tensor({4, 1}, rng);
  Tape t;
  const Var vw = t.variable(w);
  const Var y = matmul(vw, t.constant(x));
  const Tensor g = t.backward(sum(y * y)).of(vw);
  const Tensor expected = matmul(matmul(w, x), x.transposed());
  for (std::size_t i = 0; i < g.numel(); ++i) EXPECT_NEAR(g[i], 2.0 * expected[i], 1e-14);
}

TEST(Tape, UnusedParameterGetsZeroGradient) {
  Tape t;
  const Var used = t.variable(Tensor::scalar(2.0));
  const Var unused = t.variable(Tensor({3}, 1.0));
  const Gradients g = t.backward(sum(used * used));
  EXPECT_EQ(g.of(unused), Tensor({3}));
}

TEST(Tape, NonScalarLossRejected) {
  Tape t;
  const Var v = t.variable(Tensor({2}, 1.0));
  EXPECT_THROW(t.backward(v), ShapeError);
}

TEST(Tape, NonFiniteValueNamesOp) {
  Tape t;
  const Var v = t.variable(Tensor::scalar(1e308));
  try {
    scale(v, 10.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("scale"), std::string::npos);
  }
}

TEST(Tape, RepeatedBackwardIsBitIdentical) {
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor({4, 4}, rng), b = random_tensor({4, 3}, rng);
  auto run = [&] {
    Tape t;
    const Var va = t.variable(a);
    const Var y = activation(Activation::tanh, matmul(va, t.constant(b)));
    return t.backward(sum(y * y)).of(va);
  };
  EXPECT_EQ(run(), run());
}

class OpGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OpGradients, EveryDifferentiableOpPassesFiniteDifferences) {
  const std::uint64_t seed = GetParam();
  std::mt19937_64 rng(seed * 7919);
  const Tensor other = random_tensor({3, 4}, rng), bias = random_tensor({4}, rng), col = random_tensor({4, 2}, rng);
  const Tensor rowsw = random_tensor({3}, rng);
  const std::vector<std::size_t> gather_idx = {2, 0, 2, 1}, seg = {0, 0, 1};
  const bool mask[] = {true, false, true};

  const std::vector<std::pair<std::string, std::function<Var(Var)>>> ops = {
      {"matmul", [&](Var x) { return matmul(x, x.tape->constant(col)); }},
      {"transpose", [&](Var x) { return transpose(x); }},
      {"add", [&](Var x) { return x + x.tape->constant(other); }},
      {"sub", [&](Var x) { return x.tape->constant(other) - x; }},
      {"mul", [&](Var x) { return x * x; }},
      {"scale", [&](Var x) { return scale(x, -1.7); }},
      {"add_bias", [&](Var x) { return add_bias(x, x.tape->constant(bias)); }},
      {"sigmoid", [&](Var x) { return activation(Activation::sigmoid, x); }},
      {"tanh", [&](Var x) { return activation(Activation::tanh, x); }},
      {"leaky_relu", [&](Var x) { return activation(Activation::leaky_relu, x); }},
      {"mean", [&](Var x) { return mean(x); }},
      {"concat_cols", [&](Var x) { return concat_cols(x, x * x); }},
      {"reshape", [&](Var x) { return reshape(x, {4, 3}); }},
      {"gather_rows", [&](Var x) { return gather_rows(x, gather_idx); }},
      {"scatter_add_rows", [&](Var x) { return scatter_add_rows(x, seg, 2); }},
      {"row_dot", [&](Var x) { return row_dot(x, x.tape->constant(other)); }},
      {"scale_rows", [&](Var x) { return scale_rows(x, x.tape->constant(rowsw)); }},
      {"scale_rows_weight",
       [&](Var x) {
         return scale_rows(x.tape->constant(other), reshape(matmul(x, x.tape->constant(Tensor({4, 1}, 1.0))), {3}));
       }},
      {"masked_softmax", [&](Var x) { return masked_softmax(row_dot(x, x), std::span<const bool>(mask, 3)); }},
      {"segment_softmax", [&](Var x) { return segment_softmax(row_dot(x, x.tape->constant(other)), seg, 2); }},
  };
  for (const auto& [name, op] : ops) {
    EXPECT_LT(check_unary(op, {3, 4}, seed), 1e-4) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradients, ::testing::Values(1, 2, 3, 4, 5));

TEST(GradCheck, QuadraticIsExact) {
  std::mt19937_64 rng(7);
  ParamSet p;
  p.add("theta", random_tensor({6}, rng));
  const Objective f = [](Tape&, const Bindings& b) { return sum(b["theta"] * b["theta"]); };
  EXPECT_LT(finite_diff_check(f, p).max_rel_error, 1e-9);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  ParamSet p;
  p.add("theta", Tensor({3}, 1.0));
  const Objective f = [](Tape& t, const Bindings&) { return sum(t.constant(Tensor({2}, 4.0))); };
  const GradCheckReport r = finite_diff_check(f, p);
  EXPECT_EQ(r.max_rel_error, 0.0);
}

TEST(GradCheck, TamperedGradientIsDetected) {
  ParamSet p;
  p.add("theta", Tensor::vector({0.5, -0.25}));
  const Objective f = [](Tape&, const Bindings& b) { return sum(b["theta"] * b["theta"]); };
  const GradCheckReport r = finite_diff_check(f, p, 1e-5, [](ParamSet& g) { g.get("theta")[1] *= 1.5; });
  EXPECT_GT(r.max_rel_error, 0.1);
  EXPECT_EQ(r.worst_param, "theta");
}

TEST(GradCheck, NonFiniteObjectiveThrows) {
  ParamSet p;
  p.add("theta", Tensor::scalar(1e200));
  const Objective f = [](Tape&, const Bindings& b) { return sum(b["theta"] * b["theta"]); };
  EXPECT_THROW(finite_diff_check(f, p), NumericalError);
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, -2.0}));
  const ParamSet before = p;
  AdamState s = make_adam_state(p);
  adam_step(p, p.zeros_like(), s);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  const ParamSet before = p;
  ParamSet g;
  g.add("w", Tensor::vector({0.3, -4.0, 1e-3}));
  AdamState s = make_adam_state(p);
  adam_step(p, g, s);
  for (std::size_t i = 0; i < 3; ++i) {
    // Bias-corrected first step: m_hat = g, v_hat = g^2.
    const double gi = g.get("w")[i];
    const double expected = before.get("w")[i] - 0.001 * gi / (std::abs(gi) + 1e-8);
    EXPECT_NEAR(p.get("w")[i], expected, 1e-15);
  }
}

TEST(Adam, ZeroLearningRateLeavesParams) {
  ParamSet p;
  p.add("w", Tensor::vector({1.0, 2.0}));
  const ParamSet before = p;
  AdamState s = make_adam_state(p, {.lr = 0.0});
  ParamSet g;
  g.add("w", Tensor::vector({5.0, -1.0}));
  for (int i = 0; i < 3; ++i) adam_step(p, g, s);
  EXPECT_EQ(p, before);
}

TEST(Adam, ShapeMismatchRejected) {
  ParamSet p;
  p.add("w", Tensor({2}));
  ParamSet g;
  g.add("w", Tensor({3}));
  AdamState s = make_adam_state(p);
  EXPECT_THROW(adam_step(p, g, s), ShapeError);
}

TEST(Checkpoint, RoundTripIsLossless) {
  std::mt19937_64 rng(8);
  ParamSet p;
  p.add("lstm.W_z", random_tensor({3, 5}, rng));
  p.add("fc.b", Tensor::scalar(0.1 + 0.2));
  p.add("odd", Tensor::vector({-0.0, 1e-300, 123456789.123456789}));
  const auto path = relrank::testing::scratch_dir("ckpt") / "m.ckpt";
  save_checkpoint(p, path);
  const ParamSet q = load_checkpoint(path);
  EXPECT_EQ(p.names(), q.names());
  for (const auto& [name, value] : p) {
    ASSERT_EQ(value.shape(), q.get(name).shape());
    for (std::size_t i = 0; i < value.numel(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(value[i]), std::bit_cast<std::uint64_t>(q.get(name)[i]));
    }
  }
}

TEST(Checkpoint, TruncatedFileRejected) {
  ParamSet p;
  p.add("w", Tensor({4}, 1.0));
  const auto path = relrank::testing::scratch_dir("ckpt_trunc") / "m.ckpt";
  save_checkpoint(p, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(load_checkpoint(path), DataError);
}
