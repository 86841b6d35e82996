#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relrank/marketdata.hpp"
#include "relrank/model.hpp"
#include "relrank/tensor.hpp"

namespace relrank {

// Indices by descending score; equal scores keep ascending index order.
// Throws NumericalError on a non-finite score.
std::vector<std::size_t> rank_day(std::span<const double> scores);

// Mean squared error over every (day, stock) cell.
double metric_mse(const Tensor& predictions, const Tensor& truths);

struct TradeDay {
  std::string date;
  std::vector<std::size_t> ranking;   // by predicted score
  std::vector<std::size_t> selected;  // first min(k, N) of ranking
  std::vector<double> returns;        // realized 1-day return of every stock
  double day_return = 0.0;            // mean over selected
  double cumulative_irr = 0.0;
};

struct TradeLedger {
  std::size_t k = 1;
  std::vector<std::string> symbols;
  std::vector<TradeDay> days;
};

struct MetricsReport {
  double mse = 0.0;
  double mrr = 0.0;
  double irr = 0.0;
};

// Mean over days of 1 / (true rank of the top-1 predicted stock).
double metric_mrr(const TradeLedger& ledger, const Tensor& truths);

/// Daily buy-hold-sell over a D x N score matrix against D x N realized
/// returns. Budget is fixed per day, so IRR is the plain sum of day returns.
TradeLedger simulate(const Tensor& scores, const Tensor& truths, std::size_t k,
                     std::span<const std::string> dates = {}, std::span<const std::string> symbols = {});

struct BacktestResult {
  TradeLedger ledger;
  MetricsReport report;
};

BacktestResult evaluate_scores(const Tensor& scores, const Tensor& truths, std::size_t k,
                               std::span<const std::string> dates = {}, std::span<const std::string> symbols = {});

/// Model scores and realized returns for every day of `range` whose window
/// fits inside the feature history (day index >= S - 1).
struct ScoredDays {
  Tensor scores;  // D x N
  Tensor truths;  // D x N
  std::vector<std::size_t> day_index;
  std::vector<std::string> dates;
};

ScoredDays score_days(const RankModel& model, const MarketDataset& data, DayRange range);

// With `oracle` the model's scores are replaced by the realized returns.
BacktestResult run_backtest(const RankModel& model, const MarketDataset& data, DayRange range, std::size_t k,
                            bool oracle = false);

// day,selected_symbols,day_return,cumulative_irr (symbols joined by ';').
void write_ledger_csv(const TradeLedger& ledger, const std::filesystem::path& path);
// day,cumulative_irr
void write_curve_csv(const TradeLedger& ledger, const std::filesystem::path& path);
// {"mse": .., "mrr": .., "irr": ..}
std::string report_json(const MetricsReport& report);

}  // namespace relrank
