#include "relrank/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <tuple>

#include "relrank/adam.hpp"
#include "relrank/backtest.hpp"
#include "relrank/error.hpp"

namespace relrank {

namespace {

std::vector<std::size_t> usable_days(DayRange range, std::size_t window) {
  std::vector<std::size_t> days;
  for (std::size_t t = std::max(range.begin, window - 1); t < range.end; ++t) days.push_back(t);
  return days;
}

auto config_key(const RankModelConfig& c) { return std::make_tuple(c.window, c.units, c.alpha, c.lambda); }

}  // namespace

TrainResult train(const MarketDataset& data, const DatasetSplit& split, const GraphContext* graph,
                  const RankModelConfig& config, const EpochCallback& on_epoch) {
  const std::size_t n_types = graph ? graph->n_types : 0;
  return train_from(init_params(config, n_types), data, split, graph, config, on_epoch);
}

TrainResult train_from(ParamSet initial, const MarketDataset& data, const DatasetSplit& split,
                       const GraphContext* graph, const RankModelConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  if (needs_relations(config.mode) && !graph) {
    throw UsageError(std::string(mode_name(config.mode)) + " needs a relation file");
  }
  if (split.val.end > data.n_labeled_days() || split.train.end > data.n_labeled_days()) {
    throw std::invalid_argument("split extends past the labeled days");
  }
  std::vector<std::size_t> days = usable_days(split.train, config.window);
  if (days.empty()) throw DataError("training split has no day with a full " + std::to_string(config.window) +
                                    "-day window");
  if (usable_days(split.val, config.window).empty()) {
    throw DataError("validation split has no day with a full " + std::to_string(config.window) + "-day window");
  }

  RankModel model{config, std::move(initial), {}};
  if (graph) model.graph = *graph;
  const GraphContext* g = model.graph ? &*model.graph : nullptr;
  AdamState adam = make_adam_state(model.params, {.lr = config.lr});
  std::seed_seq order_seed{std::uint32_t(config.seed), std::uint32_t(config.seed >> 32), std::uint32_t{0x5eed}};
  std::mt19937_64 order_rng(order_seed);

  TrainResult result;
  double best_irr = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(days.begin(), days.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t t : days) {
      const Tensor window = data.window(t, config.window);
      const std::vector<double> truth = data.returns_on(t);
      Tape tape;
      const Bindings b = model.params.bind(tape);
      const Var loss = day_objective(tape, b, window, truth, config, g);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", day " +
                             data.features.dates[t]);
      }
      loss_sum += value;
      const Gradients grads = tape.backward(loss);
      adam_step(model.params, b.gradients(grads, model.params), adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(days.size());
    const ScoredDays val = score_days(model, data, split.val);
    const BacktestResult bt = evaluate_scores(val.scores, val.truths, 1);
    rec.val_mse = bt.report.mse;
    rec.val_mrr = bt.report.mrr;
    rec.val_irr = bt.report.irr;
    result.history.epochs.push_back(rec);
    if (rec.val_irr > best_irr) {
      best_irr = rec.val_irr;
      result.history.selected_epoch = epoch;
      result.params = model.params;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::vector<RankModelConfig> expand_grid(const RankModelConfig& base, const GridSpec& spec) {
  const auto or_base = [](auto values, auto fallback) {
    if (values.empty()) values.push_back(fallback);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  };
  const auto windows = or_base(spec.windows, base.window);
  const auto units = or_base(spec.units, base.units);
  const auto alphas = or_base(spec.alphas, base.alpha);
  const auto lambdas = base.mode == ModelMode::gbr ? or_base(spec.lambdas, base.lambda)
                                                   : std::vector<double>{base.lambda};
  std::vector<RankModelConfig> out;
  for (std::size_t s : windows)
    for (std::size_t u : units)
      for (double a : alphas)
        for (double l : lambdas) {
          RankModelConfig c = base;
          c.window = s;
          c.units = u;
          c.alpha = a;
          c.lambda = l;
          out.push_back(c);
        }
  return out;
}

GridResult grid_search(const MarketDataset& data, const DatasetSplit& split, const GraphContext* graph,
                       const RankModelConfig& base, const GridSpec& spec, std::size_t jobs) {
  const std::vector<RankModelConfig> configs = expand_grid(base, spec);
  GridResult result;
  result.cells.resize(configs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        TrainResult r = train(data, split, graph, configs[i]);
        result.cells[i] = {configs[i], std::move(r.history), 0.0};
        result.cells[i].val_irr = result.cells[i].history.selected().val_irr;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = configs.size();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, configs.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    const GridCell& c = result.cells[i];
    const GridCell& b = result.cells[result.best];
    if (c.val_irr > b.val_irr || (c.val_irr == b.val_irr && config_key(c.config) < config_key(b.config))) {
      result.best = i;
    }
  }
  return result;
}

}  // namespace relrank
