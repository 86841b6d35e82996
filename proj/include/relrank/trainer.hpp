#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "relrank/marketdata.hpp"
#include "relrank/model.hpp"

namespace relrank {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mse = 0.0;
  double val_mrr = 0.0;
  double val_irr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;  // 1-based; best validation IRR, earliest on ties

  const EpochRecord& selected() const { return epochs.at(selected_epoch - 1); }
};

struct TrainResult {
  ParamSet params;  // snapshot from the selected epoch
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// One Adam step per training day, days visited in a seed-shuffled order each
/// epoch. Days whose window would start before the first feature day are
/// skipped. Throws NumericalError on a non-finite loss and DataError when the
/// training or validation split has no usable day.
TrainResult train(const MarketDataset& data, const DatasetSplit& split, const GraphContext* graph,
                  const RankModelConfig& config, const EpochCallback& on_epoch = {});

// Same, starting from given parameters instead of a fresh draw.
TrainResult train_from(ParamSet initial, const MarketDataset& data, const DatasetSplit& split,
                       const GraphContext* graph, const RankModelConfig& config, const EpochCallback& on_epoch = {});

struct GridSpec {
  std::vector<std::size_t> windows;
  std::vector<std::size_t> units;
  std::vector<double> alphas;
  // Only expanded for gbr; other modes keep the base lambda.
  std::vector<double> lambdas;
};

struct GridCell {
  RankModelConfig config;
  TrainHistory history;
  double val_irr = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // in expansion order
  std::size_t best = 0;
};

// Cartesian product in lexicographic (window, units, alpha, lambda) order.
// Empty axes fall back to the base value.
std::vector<RankModelConfig> expand_grid(const RankModelConfig& base, const GridSpec& spec);

/// Trains every cell (up to `jobs` at a time) and picks the highest selected
/// validation IRR; ties go to the lexicographically smallest configuration.
GridResult grid_search(const MarketDataset& data, const DatasetSplit& split, const GraphContext* graph,
                       const RankModelConfig& base, const GridSpec& spec, std::size_t jobs = 1);

}  // namespace relrank
