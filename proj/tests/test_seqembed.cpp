#include <gtest/gtest.h>

#include <cmath>

#include "relrank/error.hpp"
#include "relrank/gradcheck.hpp"
#include "relrank/lstm.hpp"
#include "test_util.hpp"

using namespace relrank;
using relrank::testing::random_tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop LSTM cell for one stock, written directly from the gate equations.
LstmState reference_cell(const std::vector<double>& x, const std::vector<double>& h, const std::vector<double>& c,
                         const LstmWeights& w) {
  const std::size_t u = w.units(), d = w.input_dim();
  auto affine = [&](const Tensor& W, const Tensor& Q, const Tensor& b, std::size_t r) {
    double s = b[r];
    for (std::size_t k = 0; k < d; ++k) s += W.at(r, k) * x[k];
    for (std::size_t k = 0; k < u; ++k) s += Q.at(r, k) * h[k];
    return s;
  };
  LstmState out{Tensor({u}), Tensor({u})};
  for (std::size_t r = 0; r < u; ++r) {
    const double z = std::tanh(affine(w.W_z, w.Q_z, w.b_z, r));
    const double i = sigmoid(affine(w.W_i, w.Q_i, w.b_i, r));
    const double f = sigmoid(affine(w.W_f, w.Q_f, w.b_f, r));
    const double o = sigmoid(affine(w.W_o, w.Q_o, w.b_o, r));
    out.c[r] = f * c[r] + i * z;
    out.h[r] = o * std::tanh(out.c[r]);
  }
  return out;
}

std::vector<double> as_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(LstmCell, ZeroWeightsGiveZeroState) {
  const LstmWeights w = LstmWeights::zeros(3, 2);
  const LstmState s = lstm_cell(Tensor::vector({0.7, -1.2}), {Tensor({3}), Tensor({3})}, w);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(s.c[r], 0.0);
    EXPECT_EQ(s.h[r], 0.0);
  }
}

TEST(LstmCell, ScalarHandComputation) {
  LstmWeights w = LstmWeights::zeros(1, 1);
  w.W_z[0] = 0.5, w.Q_z[0] = -0.3, w.b_z[0] = 0.1;
  w.W_i[0] = 1.0, w.Q_i[0] = 0.2, w.b_i[0] = -0.4;
  w.W_f[0] = -0.7, w.Q_f[0] = 0.6, w.b_f[0] = 0.3;
  w.W_o[0] = 0.25, w.Q_o[0] = 0.8, w.b_o[0] = 0.0;
  const double x = 2.0, h = 0.4, c = -0.5;
  const double z = std::tanh(0.5 * 2.0 - 0.3 * 0.4 + 0.1);
  const double i = sigmoid(1.0 * 2.0 + 0.2 * 0.4 - 0.4);
  const double f = sigmoid(-0.7 * 2.0 + 0.6 * 0.4 + 0.3);
  const double o = sigmoid(0.25 * 2.0 + 0.8 * 0.4);
  const double c1 = f * c + i * z;
  const double h1 = o * std::tanh(c1);
  const LstmState s = lstm_cell(Tensor::vector({x}), {Tensor::vector({h}), Tensor::vector({c})}, w);
  EXPECT_NEAR(s.c[0], c1, 1e-12);
  EXPECT_NEAR(s.h[0], h1, 1e-12);
}

TEST(LstmCell, SaturatedForgetGateKeepsMemory) {
  std::mt19937_64 rng(1);
  LstmWeights w = LstmWeights::random(4, 3, rng);
  w.W_f.fill(0.0);
  w.Q_f.fill(0.0);
  w.b_f.fill(50.0);
  const Tensor x = random_tensor({3}, rng), h = random_tensor({4}, rng), c = random_tensor({4}, rng);
  const LstmState s = lstm_cell(x, {h, c}, w);
  const LstmState ref = reference_cell(as_vec(x), as_vec(h), as_vec(c), w);
  for (std::size_t r = 0; r < 4; ++r) {
    // i * z from the reference equals c' - f c with f = sigmoid(50).
    const double iz = ref.c[r] - sigmoid(50.0) * c[r];
    EXPECT_LT(std::abs(s.c[r] - (c[r] + iz)), 1e-10);
  }
}

TEST(LstmCell, MatchesReferenceOnRandomInputs) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const LstmWeights w = LstmWeights::random(5, 4, rng);
    const Tensor x = random_tensor({4}, rng), h = random_tensor({5}, rng), c = random_tensor({5}, rng);
    const LstmState s = lstm_cell(x, {h, c}, w);
    const LstmState ref = reference_cell(as_vec(x), as_vec(h), as_vec(c), w);
    EXPECT_LT(max_abs_diff(s.h, ref.h), 1e-12);
    EXPECT_LT(max_abs_diff(s.c, ref.c), 1e-12);
  }
}

TEST(LstmCell, ShapeMismatchRejected) {
  const LstmWeights w = LstmWeights::zeros(3, 2);
  EXPECT_THROW(lstm_cell(Tensor({3}), {Tensor({3}), Tensor({3})}, w), ShapeError);
  EXPECT_THROW(lstm_cell(Tensor({2}), {Tensor({2}), Tensor({3})}, w), ShapeError);
}

TEST(SequentialEmbedding, SingleStepEqualsOneCell) {
  std::mt19937_64 rng(3);
  const LstmWeights w = LstmWeights::random(4, 5, rng);
  const Tensor window = random_tensor({3, 1, 5}, rng);
  const Tensor e = sequential_embedding(window, w);
  const LstmState s = lstm_cell(window.reshaped({3, 5}), {Tensor({3, 4}), Tensor({3, 4})}, w);
  EXPECT_EQ(e, s.h);
}

TEST(SequentialEmbedding, MatchesExplicitUnroll) {
  std::mt19937_64 rng(4);
  const LstmWeights w = LstmWeights::random(2, 2, rng);
  const Tensor window = random_tensor({3, 3, 2}, rng);
  const Tensor e = sequential_embedding(window, w);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> h(2, 0.0), c(2, 0.0);
    for (std::size_t t = 0; t < 3; ++t) {
      const LstmState s = reference_cell({window.at(i, t, 0), window.at(i, t, 1)}, h, c, w);
      h = as_vec(s.h);
      c = as_vec(s.c);
    }
    EXPECT_NEAR(e.at(i, 0), h[0], 1e-12);
    EXPECT_NEAR(e.at(i, 1), h[1], 1e-12);
  }
}

TEST(SequentialEmbedding, IdenticalWindowsGiveIdenticalRows) {
  std::mt19937_64 rng(5);
  const LstmWeights w = LstmWeights::random(6, 5, rng);
  Tensor window = random_tensor({2, 4, 5}, rng);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t f = 0; f < 5; ++f) window.at(1, t, f) = window.at(0, t, f);
  const Tensor e = sequential_embedding(window, w);
  for (std::size_t u = 0; u < 6; ++u) EXPECT_EQ(e.at(0, u), e.at(1, u));
}

TEST(SequentialEmbedding, HiddenStateStrictlyInsideUnitInterval) {
  std::mt19937_64 rng(6);
  LstmWeights w = LstmWeights::random(8, 5, rng);
  const Tensor window = random_tensor({10, 6, 5}, rng, -3, 3);
  for (double v : sequential_embedding(window, w).data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(SequentialEmbedding, PermutingStocksPermutesRows) {
  std::mt19937_64 rng(7);
  const LstmWeights w = LstmWeights::random(3, 5, rng);
  const Tensor window = random_tensor({4, 3, 5}, rng);
  const std::size_t perm[] = {2, 0, 3, 1};
  Tensor permuted(window.shape());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t f = 0; f < 5; ++f) permuted.at(i, t, f) = window.at(perm[i], t, f);
  const Tensor e = sequential_embedding(window, w), ep = sequential_embedding(permuted, w);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t u = 0; u < 3; ++u) EXPECT_EQ(ep.at(i, u), e.at(perm[i], u));
}

TEST(SequentialEmbedding, JointEqualsOneStockAtATime) {
  std::mt19937_64 rng(8);
  const LstmWeights w = LstmWeights::random(4, 5, rng);
  const Tensor window = random_tensor({3, 5, 5}, rng);
  const Tensor e = sequential_embedding(window, w);
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor one({1, 5, 5});
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t f = 0; f < 5; ++f) one.at(0, t, f) = window.at(i, t, f);
    const Tensor ei = sequential_embedding(one, w);
    for (std::size_t u = 0; u < 4; ++u) EXPECT_EQ(ei.at(0, u), e.at(i, u));
  }
}

TEST(SequentialEmbedding, WrongFeatureDimRejected) {
  std::mt19937_64 rng(9);
  const LstmWeights w = LstmWeights::random(4, 5, rng);
  EXPECT_THROW(sequential_embedding(Tensor({2, 3, 4}), w), ShapeError);
  EXPECT_THROW(sequential_embedding(Tensor({2, 0, 5}), w), ShapeError);
}

class Bptt : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(Bptt, GradientsOfEveryWeightPassFiniteDifferences) {
  std::mt19937_64 rng(GetParam());
  ParamSet params;
  LstmWeights::random(3, 5, rng).store(params);
  const Tensor window = random_tensor({4, 3, 5}, rng);
  const Tensor readout = random_tensor({4, 3}, rng);
  const Objective f = [&](Tape& t, const Bindings& b) {
    return sum(sequential_embedding(t, window, LstmVars::bind(b)) * t.constant(readout));
  };
  const GradCheckReport r = finite_diff_check(f, params);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param;
  EXPECT_EQ(r.params.size(), 12u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, Bptt, ::testing::Values(1, 2, 3, 4, 5));

TEST(LstmWeights, RandomInitWithinBound) {
  std::mt19937_64 rng(10);
  const LstmWeights w = LstmWeights::random(16, 5, rng);
  for (const Tensor* t : {&w.W_z, &w.Q_o, &w.b_f}) EXPECT_LE(t->max_abs(), 0.25);
  ParamSet p;
  w.store(p);
  const LstmWeights back = LstmWeights::load(p);
  EXPECT_EQ(back.Q_i, w.Q_i);
}
