#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "relrank/error.hpp"
#include "relrank/gradcheck.hpp"
#include "relrank/gradsuite.hpp"
#include "relrank/synth.hpp"
#include "relrank/trainer.hpp"
#include "test_util.hpp"

using namespace relrank;
using relrank::testing::random_tensor;
using relrank::testing::scratch_dir;

namespace {

double loss_oracle(const std::vector<double>& p, const std::vector<double>& r, double alpha) {
  const double n = static_cast<double>(p.size());
  double sq = 0, pair = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sq += (p[i] - r[i]) * (p[i] - r[i]);
    for (std::size_t j = 0; j < p.size(); ++j) pair += std::max(0.0, -(p[i] - p[j]) * (r[i] - r[j]));
  }
  return sq / n + alpha * pair / (n * n);
}

std::vector<double> uniform_vec(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

struct SmallMarket {
  SyntheticMarket market;
  MarketDataset data;
  DatasetSplit split;
};

SmallMarket small_market(std::uint64_t seed) {
  SmallMarket m;
  m.market = synth_market({.n_stocks = 6, .n_days = 70, .n_factors = 2, .seed = seed});
  const AlignedPrices al = align_calendar(m.market.prices);
  m.data = make_dataset(build_features(al.series), build_labels(al.series));
  const std::size_t l = m.data.n_labeled_days();
  m.split = chronological_split(l, l * 6 / 10, l * 8 / 10);
  return m;
}

RankModelConfig small_config(ModelMode mode) {
  RankModelConfig c;
  c.mode = mode;
  c.window = 3;
  c.units = 4;
  c.epochs = 3;
  c.seed = 9;
  c.lr = 0.01;
  return c;
}

}  // namespace

TEST(Modes, NamesRoundTrip) {
  for (ModelMode m : {ModelMode::rank_lstm, ModelMode::gbr, ModelMode::gcn, ModelMode::rsr_e, ModelMode::rsr_i})
    EXPECT_EQ(parse_mode(mode_name(m)), m);
  EXPECT_THROW(parse_mode("rsr"), UsageError);
  EXPECT_FALSE(needs_relations(ModelMode::rank_lstm));
  EXPECT_TRUE(needs_relations(ModelMode::gbr));
  EXPECT_FALSE(uses_relational_embedding(ModelMode::gbr));
}

TEST(PredictScores, ZeroWeightsGiveBias) {
  std::mt19937_64 rng(1);
  const Tensor e = random_tensor({4, 3}, rng), eb = random_tensor({4, 3}, rng);
  const Tensor s = predict_scores(e, &eb, Tensor({6, 1}), 0.37);
  for (double v : s.data()) EXPECT_EQ(v, 0.37);
}

TEST(PredictScores, IdenticalInputsShareScore) {
  std::mt19937_64 rng(2);
  Tensor e = random_tensor({3, 2}, rng);
  e.at(2, 0) = e.at(0, 0), e.at(2, 1) = e.at(0, 1);
  const Tensor s = predict_scores(e, nullptr, random_tensor({2, 1}, rng), -0.1);
  EXPECT_EQ(s[0], s[2]);
}

TEST(PredictScores, HandInstance) {
  const Tensor e({2, 2}, {1.0, 2.0, -0.5, 0.25});
  const Tensor eb({2, 2}, {0.0, 3.0, 1.0, -1.0});
  const Tensor w({4, 1}, {0.5, -1.0, 2.0, 0.1});
  const Tensor s = predict_scores(e, &eb, w, 0.2);
  EXPECT_NEAR(s[0], 0.5 * 1 - 1.0 * 2 + 2.0 * 0 + 0.1 * 3 + 0.2, 1e-15);
  EXPECT_NEAR(s[1], 0.5 * -0.5 - 1.0 * 0.25 + 2.0 * 1 + 0.1 * -1 + 0.2, 1e-15);
}

TEST(PredictScores, ShapeMismatchRejected) {
  EXPECT_THROW(predict_scores(Tensor({2, 2}), nullptr, Tensor({4, 1}), 0.0), ShapeError);
  const Tensor eb({3, 2});
  EXPECT_THROW(predict_scores(Tensor({2, 2}), &eb, Tensor({4, 1}), 0.0), ShapeError);
}

TEST(RankingLoss, ExactPredictionIsZero) {
  const std::vector<double> r{0.1, -0.3, 0.02};
  for (double alpha : {0.0, 1.0, 10.0}) EXPECT_EQ(ranking_loss(r, r, alpha), 0.0);
}

TEST(RankingLoss, PureMseExample) {
  const std::vector<double> p{0.1, -0.1}, r{0.0, 0.0};
  EXPECT_NEAR(ranking_loss(p, r, 0.0), 0.01, 1e-15);
}

TEST(RankingLoss, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto p = uniform_vec(n, rng), r = uniform_vec(n, rng, -0.1, 0.1);
    const double alpha = trial % 3 == 0 ? 1.0 : 0.1 * trial;
    EXPECT_NEAR(ranking_loss(p, r, alpha), loss_oracle(p, r, alpha), 1e-12);
  }
}

TEST(RankingLoss, UnnormalizedDropsBothFactors) {
  std::mt19937_64 rng(4);
  const auto p = uniform_vec(5, rng), r = uniform_vec(5, rng);
  const double sq = ranking_loss(p, r, 0.0, true);
  const double full = ranking_loss(p, r, 2.0, true);
  EXPECT_NEAR(sq, 5.0 * ranking_loss(p, r, 0.0), 1e-12);
  EXPECT_NEAR(full - sq, 2.0 * 25.0 * (ranking_loss(p, r, 1.0) - ranking_loss(p, r, 0.0)), 1e-12);
}

TEST(RankingLoss, NonNegativeAndOrderPreservingHasNoPairTerm) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = uniform_vec(7, rng), r = uniform_vec(7, rng);
    EXPECT_GE(ranking_loss(p, r, 3.0), 0.0);
    // A monotone transform keeps every strict order of r.
    std::vector<double> mono(7);
    for (std::size_t i = 0; i < 7; ++i) mono[i] = 2.0 * r[i] + 0.5;
    EXPECT_NEAR(ranking_loss(mono, r, 5.0), ranking_loss(mono, r, 0.0), 1e-15);
  }
}

TEST(RankingLoss, PairTermIgnoresTruthShift) {
  std::mt19937_64 rng(6);
  const auto p = uniform_vec(6, rng), r = uniform_vec(6, rng);
  auto shifted = r;
  for (double& v : shifted) v += 0.7;
  const double pair = ranking_loss(p, r, 1.0) - ranking_loss(p, r, 0.0);
  const double pair_shifted = ranking_loss(p, shifted, 1.0) - ranking_loss(p, shifted, 0.0);
  EXPECT_NEAR(pair, pair_shifted, 1e-12);
}

TEST(RankingLoss, LengthMismatchRejected) {
  const std::vector<double> p{1, 2}, r{1, 2, 3};
  EXPECT_THROW(ranking_loss(p, r, 1.0), ShapeError);
}

TEST(RankingLoss, TapeValueAndGradientAgreeWithOracle) {
  std::mt19937_64 rng(7);
  for (bool unnorm : {false, true}) {
    ParamSet params;
    params.add("p", Tensor::vector(uniform_vec(6, rng)));
    const auto r = uniform_vec(6, rng);
    const Objective f = [&](Tape&, const Bindings& b) { return ranking_loss(b["p"], r, 1.5, unnorm); };
    const auto& pv = params.get("p").data();
    EXPECT_NEAR(evaluate_value(f, params), ranking_loss({pv.begin(), pv.end()}, r, 1.5, unnorm), 1e-14);
    EXPECT_LT(finite_diff_check(f, params).max_rel_error, 1e-6);
  }
}

TEST(Params, LayoutFollowsMode) {
  RankModelConfig c;
  c.units = 5;
  c.mode = ModelMode::rank_lstm;
  EXPECT_EQ(init_params(c, 2).get("fc.w").shape(), (Shape{5, 1}));
  EXPECT_FALSE(init_params(c, 2).contains("tgc.w"));
  c.mode = ModelMode::rsr_e;
  EXPECT_EQ(init_params(c, 2).get("tgc.w").numel(), 2u);
  EXPECT_EQ(init_params(c, 2).get("fc.w").shape(), (Shape{10, 1}));
  c.mode = ModelMode::rsr_i;
  EXPECT_EQ(init_params(c, 2).get("tgc.w").numel(), 12u);
  c.mode = ModelMode::gcn;
  EXPECT_EQ(init_params(c, 2).get("gcn.W").shape(), (Shape{5, 5}));
  ParamSet wrong = init_params(c, 2);
  c.mode = ModelMode::rsr_i;
  EXPECT_THROW(check_params(wrong, c, 2), ShapeError);
}

TEST(Params, CheckpointRoundTripGivesBitIdenticalPredictions) {
  const SmallMarket m = small_market(3);
  for (ModelMode mode : {ModelMode::rank_lstm, ModelMode::gcn, ModelMode::rsr_i}) {
    const RankModelConfig c = small_config(mode);
    const GraphContext g = make_graph_context(m.market.relations, c);
    const RankModel model{c, init_params(c, g.n_types), g};
    const auto path = scratch_dir("ranker_ckpt") / "m.ckpt";
    save_checkpoint(model.params, path);
    const RankModel loaded{c, load_checkpoint(path), g};
    const Tensor window = m.data.window(10, c.window);
    EXPECT_EQ(model.predict(window), loaded.predict(window));
  }
}

TEST(FullModel, GradientSuitePassesForEveryMode) {
  const GradSuiteReport report = run_gradient_suite();
  ASSERT_EQ(report.modes.size(), 5u);
  for (const ModeGradResult& r : report.modes) EXPECT_LT(r.worst_rel_error, 1e-4) << mode_name(r.mode) << r.worst_param;
  EXPECT_TRUE(report.passed);
}

TEST(FullModel, CorruptedGradientIsCaught) {
  GradSuiteOptions o;
  o.seeds = 1;
  o.corrupt = true;
  const GradSuiteReport report = run_gradient_suite(o);
  EXPECT_FALSE(report.passed);
  EXPECT_NE(format_report(report).find("FAILED"), std::string::npos);
}

TEST(FullModel, GbrObjectiveAddsWeightedRegularizer) {
  const GradInstance inst = make_grad_instance({}, 3);
  RankModelConfig c;
  c.mode = ModelMode::gbr;
  c.window = 2;
  c.units = 3;
  c.lambda = 0.7;
  const GraphContext g = make_graph_context(inst.relations, c);
  const ParamSet params = init_params(c, g.n_types);
  Tape tape;
  const Bindings b = params.bind(tape);
  const Tensor scores = forward_scores(tape, b, inst.window, c, &g).value();
  const double obj = day_objective(tape, b, inst.window, inst.truth, c, &g).value()[0];
  const std::vector<double> sv(scores.data().begin(), scores.data().end());
  EXPECT_NEAR(obj, ranking_loss(sv, inst.truth, c.alpha) + 0.7 * graph_regularizer(scores, g.laplacian), 1e-12);
}

TEST(Train, ZeroLearningRateKeepsInitialParams) {
  const SmallMarket m = small_market(4);
  RankModelConfig c = small_config(ModelMode::rsr_e);
  c.epochs = 1;
  c.lr = 0.0;
  const GraphContext g = make_graph_context(m.market.relations, c);
  const TrainResult r = train(m.data, m.split, &g, c);
  EXPECT_EQ(r.history.epochs.size(), 1u);
  EXPECT_EQ(r.history.selected_epoch, 1u);
  EXPECT_EQ(r.params, init_params(c, g.n_types));
}

TEST(Train, SameSeedGivesIdenticalHistoryAndParams) {
  const SmallMarket m = small_market(5);
  for (ModelMode mode : {ModelMode::gbr, ModelMode::rsr_i}) {
    const RankModelConfig c = small_config(mode);
    const GraphContext g = make_graph_context(m.market.relations, c);
    const TrainResult a = train(m.data, m.split, &g, c), b = train(m.data, m.split, &g, c);
    ASSERT_EQ(a.history.epochs.size(), 3u);
    for (std::size_t e = 0; e < 3; ++e) {
      EXPECT_EQ(a.history.epochs[e].train_loss, b.history.epochs[e].train_loss);
      EXPECT_EQ(a.history.epochs[e].val_irr, b.history.epochs[e].val_irr);
      EXPECT_EQ(a.history.epochs[e].epoch, e + 1);
    }
    EXPECT_EQ(a.history.selected_epoch, b.history.selected_epoch);
    EXPECT_EQ(a.params, b.params);
  }
}

TEST(Train, SelectedEpochHasBestValidationIrr) {
  const SmallMarket m = small_market(6);
  RankModelConfig c = small_config(ModelMode::rank_lstm);
  c.epochs = 5;
  const TrainResult r = train(m.data, m.split, nullptr, c);
  const auto& h = r.history;
  for (const EpochRecord& e : h.epochs) {
    EXPECT_LE(e.val_irr, h.selected().val_irr);
    if (e.epoch < h.selected_epoch) EXPECT_LT(e.val_irr, h.selected().val_irr);
  }
}

TEST(Train, EpochCallbackSeesEveryEpoch) {
  const SmallMarket m = small_market(7);
  std::vector<std::size_t> seen;
  train(m.data, m.split, nullptr, small_config(ModelMode::rank_lstm),
        [&](const EpochRecord& e) { seen.push_back(e.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Train, RelationalModeWithoutGraphIsUsageError) {
  const SmallMarket m = small_market(8);
  EXPECT_THROW(train(m.data, m.split, nullptr, small_config(ModelMode::rsr_i)), UsageError);
}

TEST(Train, WindowLongerThanHistoryIsDataError) {
  const SmallMarket m = small_market(8);
  RankModelConfig c = small_config(ModelMode::rank_lstm);
  c.window = 200;
  EXPECT_THROW(train(m.data, m.split, nullptr, c), DataError);
}

TEST(Grid, StandardGridHas48Cells) {
  RankModelConfig base;
  const GridSpec spec{{2, 4, 8, 16}, {16, 32, 64, 128}, {0.1, 1, 10}, {0.1, 1, 10}};
  const auto cells = expand_grid(base, spec);
  ASSERT_EQ(cells.size(), 48u);
  EXPECT_EQ(cells.front().window, 2u);
  EXPECT_EQ(cells.front().units, 16u);
  EXPECT_EQ(cells.front().alpha, 0.1);
  EXPECT_EQ(cells.back().window, 16u);
  EXPECT_EQ(cells.back().units, 128u);
  EXPECT_EQ(cells.back().alpha, 10.0);
  base.mode = ModelMode::gbr;
  EXPECT_EQ(expand_grid(base, spec).size(), 144u);
}

TEST(Grid, EmptyAxesFallBackToBase) {
  RankModelConfig base;
  base.window = 7;
  const auto cells = expand_grid(base, {{}, {8}, {}, {}});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].window, 7u);
  EXPECT_EQ(cells[0].units, 8u);
}

TEST(Grid, SinglePointReturnsThatConfig) {
  const SmallMarket m = small_market(9);
  RankModelConfig base = small_config(ModelMode::rank_lstm);
  const GridResult r = grid_search(m.data, m.split, nullptr, base, {{3}, {4}, {1.0}, {}});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.cells[0].config.window, 3u);
  EXPECT_EQ(r.cells[0].val_irr, r.cells[0].history.selected().val_irr);
}

TEST(Grid, TiesGoToSmallestConfigWhateverTheThreadCount) {
  // With lr = 0, alpha cannot change any prediction, so every cell ties.
  const SmallMarket m = small_market(10);
  RankModelConfig base = small_config(ModelMode::rank_lstm);
  base.lr = 0.0;
  base.epochs = 1;
  for (std::size_t jobs : {1u, 3u}) {
    const GridResult r = grid_search(m.data, m.split, nullptr, base, {{3}, {4}, {10.0, 0.1, 1.0}, {}}, jobs);
    ASSERT_EQ(r.cells.size(), 3u);
    EXPECT_EQ(r.cells[r.best].config.alpha, 0.1);
    EXPECT_EQ(r.cells[0].val_irr, r.cells[2].val_irr);
  }
}

TEST(Grid, ParallelMatchesSerial) {
  const SmallMarket m = small_market(11);
  const RankModelConfig base = small_config(ModelMode::rank_lstm);
  const GridSpec spec{{2, 3}, {3}, {0.1, 1.0}, {}};
  const GridResult a = grid_search(m.data, m.split, nullptr, base, spec, 1);
  const GridResult b = grid_search(m.data, m.split, nullptr, base, spec, 4);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].val_irr, b.cells[i].val_irr);
  EXPECT_EQ(a.best, b.best);
}
