#include "relrank/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "relrank/error.hpp"

namespace relrank {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_grid(const Tensor& a, const Tensor& b, std::string_view who) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw ShapeError(std::string(who) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

std::span<const double> row_of(const Tensor& t, std::size_t r) { return t.data().subspan(r * t.cols(), t.cols()); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::size_t> rank_day(std::span<const double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericalError("non-finite score for stock " + std::to_string(i));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double metric_mse(const Tensor& predictions, const Tensor& truths) {
  check_grid(predictions, truths, "metric_mse");
  if (predictions.numel() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.numel(); ++i) {
    const double d = predictions[i] - truths[i];
    total += d * d;
  }
  return total / static_cast<double>(predictions.numel());
}

double metric_mrr(const TradeLedger& ledger, const Tensor& truths) {
  if (ledger.days.empty()) return 0.0;
  if (truths.rank() != 2 || truths.rows() != ledger.days.size()) {
    throw ShapeError("metric_mrr: " + std::to_string(ledger.days.size()) + " ledger days vs truths " +
                     shape_string(truths.shape()));
  }
  double total = 0.0;
  for (std::size_t d = 0; d < ledger.days.size(); ++d) {
    const std::size_t pick = ledger.days[d].ranking.at(0);
    const std::vector<std::size_t> truth_order = rank_day(row_of(truths, d));
    const auto pos = std::find(truth_order.begin(), truth_order.end(), pick) - truth_order.begin();
    total += 1.0 / static_cast<double>(pos + 1);
  }
  return total / static_cast<double>(ledger.days.size());
}

TradeLedger simulate(const Tensor& scores, const Tensor& truths, std::size_t k, std::span<const std::string> dates,
                     std::span<const std::string> symbols) {
  check_grid(scores, truths, "simulate");
  if (k == 0) throw std::invalid_argument("simulate: k must be at least 1");
  const std::size_t n_days = scores.rows(), n = scores.cols();
  if (!dates.empty() && dates.size() != n_days) throw ShapeError("simulate: dates do not match score rows");
  if (!symbols.empty() && symbols.size() != n) throw ShapeError("simulate: symbols do not match score columns");

  TradeLedger ledger;
  ledger.k = k;
  ledger.symbols.assign(symbols.begin(), symbols.end());
  double irr = 0.0;
  for (std::size_t d = 0; d < n_days; ++d) {
    TradeDay day;
    day.date = dates.empty() ? std::to_string(d) : dates[d];
    day.ranking = rank_day(row_of(scores, d));
    day.selected.assign(day.ranking.begin(), day.ranking.begin() + std::min(k, n));
    const auto r = row_of(truths, d);
    day.returns.assign(r.begin(), r.end());
    double sum = 0.0;
    for (std::size_t i : day.selected) sum += day.returns[i];
    day.day_return = day.selected.empty() ? 0.0 : sum / static_cast<double>(day.selected.size());
    irr += day.day_return;
    day.cumulative_irr = irr;
    ledger.days.push_back(std::move(day));
  }
  return ledger;
}

BacktestResult evaluate_scores(const Tensor& scores, const Tensor& truths, std::size_t k,
                               std::span<const std::string> dates, std::span<const std::string> symbols) {
  BacktestResult result;
  result.ledger = simulate(scores, truths, k, dates, symbols);
  result.report.mse = metric_mse(scores, truths);
  result.report.mrr = metric_mrr(result.ledger, truths);
  result.report.irr = result.ledger.days.empty() ? 0.0 : result.ledger.days.back().cumulative_irr;
  return result;
}

ScoredDays score_days(const RankModel& model, const MarketDataset& data, DayRange range) {
  const std::size_t s = model.config.window, n = data.n_stocks();
  if (range.end > data.n_labeled_days()) {
    throw std::invalid_argument("score_days: range ends at " + std::to_string(range.end) + " but only " +
                                std::to_string(data.n_labeled_days()) + " days have labels");
  }
  ScoredDays out;
  for (std::size_t t = std::max(range.begin, s - 1); t < range.end; ++t) out.day_index.push_back(t);
  out.scores = Tensor({out.day_index.size(), n});
  out.truths = Tensor({out.day_index.size(), n});
  for (std::size_t d = 0; d < out.day_index.size(); ++d) {
    const std::size_t t = out.day_index[d];
    const Tensor pred = model.predict(data.window(t, s));
    for (std::size_t i = 0; i < n; ++i) {
      out.scores.at(d, i) = pred[i];
      out.truths.at(d, i) = data.labels.at(i, t);
    }
    out.dates.push_back(data.features.dates[t]);
  }
  return out;
}

BacktestResult run_backtest(const RankModel& model, const MarketDataset& data, DayRange range, std::size_t k,
                            bool oracle) {
  const ScoredDays scored = score_days(model, data, range);
  if (scored.day_index.empty()) throw DataError("back-test range has no day with a full window and a label");
  return evaluate_scores(oracle ? scored.truths : scored.scores, scored.truths, k, scored.dates, data.symbols());
}

void write_ledger_csv(const TradeLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "day,selected_symbols,day_return,cumulative_irr\n";
  for (const TradeDay& day : ledger.days) {
    std::string names;
    for (std::size_t i : day.selected) {
      if (!names.empty()) names += ';';
      names += ledger.symbols.empty() ? std::to_string(i) : ledger.symbols[i];
    }
    out << day.date << ',' << names << ',' << fmt_double(day.day_return) << ',' << fmt_double(day.cumulative_irr)
        << '\n';
  }
}

void write_curve_csv(const TradeLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "day,cumulative_irr\n";
  for (const TradeDay& day : ledger.days) out << day.date << ',' << fmt_double(day.cumulative_irr) << '\n';
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["mse"] = report.mse;
  j["mrr"] = report.mrr;
  j["irr"] = report.irr;
  return j.dump(2) + "\n";
}

}  // namespace relrank
