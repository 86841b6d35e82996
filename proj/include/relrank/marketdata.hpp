#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relrank/tensor.hpp"

namespace relrank {

/// Daily closing prices of one symbol. Dates are ISO-8601 (YYYY-MM-DD), so
/// lexicographic order is chronological.
struct PriceSeries {
  std::string symbol;
  std::vector<std::string> dates;
  std::vector<double> closes;
};

// Feature layout per (stock, day): normalized close, then moving averages.
inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::array<std::size_t, 4> kMovingAverageWindows = {5, 10, 20, 30};
// Days without a full 30-day moving-average history.
inline constexpr std::size_t kWarmupDays = 29;
inline constexpr std::size_t kMinSeriesLength = 31;

/// N x F x 5 feature values over the usable (post warm-up) days.
struct FeatureTensor {
  Tensor values;
  std::vector<std::string> symbols;
  std::vector<std::string> dates;
  std::map<std::string, std::size_t, std::less<>> stock_index;
  std::map<std::string, std::size_t, std::less<>> day_index;

  std::size_t n_stocks() const { return symbols.size(); }
  std::size_t n_days() const { return dates.size(); }
};

/// 1-day return ratios on raw closes: values(i, t) = (p[t+1] - p[t]) / p[t],
/// where dates[t] is the buy day. The final calendar day has no entry.
struct ReturnMatrix {
  Tensor values;
  std::vector<std::string> dates;
};

struct RelationType {
  std::string name;
  bool symmetric = false;
};

/// Sparse multi-hot relation encoding: (src, dst) -> sorted set of relation
/// type indices. A stored edge always has at least one type.
class RelationTensor {
 public:
  using EdgeKey = std::pair<std::size_t, std::size_t>;

  RelationTensor() = default;
  RelationTensor(std::size_t n_stocks, std::vector<RelationType> types);

  // Merges `types` into edge src->dst. Rejects self edges and bad indices.
  void add(std::size_t src, std::size_t dst, std::span<const std::size_t> types);

  std::size_t n_stocks() const { return n_stocks_; }
  std::size_t n_types() const { return types_.size(); }
  const std::vector<RelationType>& types() const { return types_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::map<EdgeKey, std::vector<std::size_t>>& edges() const { return edges_; }

  // nullptr when there is no edge src->dst.
  const std::vector<std::size_t>* find(std::size_t src, std::size_t dst) const;
  std::vector<double> multi_hot(std::size_t src, std::size_t dst) const;

 private:
  std::size_t n_stocks_ = 0;
  std::vector<RelationType> types_;
  std::map<EdgeKey, std::vector<std::size_t>> edges_;
};

struct RelationLoadResult {
  RelationTensor tensor;
  std::size_t skipped_edges = 0;
  std::vector<std::string> warnings;
};

/// Half-open range of day indices.
struct DayRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }
};

struct DatasetSplit {
  DayRange train;
  DayRange val;
  DayRange test;
};

/// Features and labels on a shared day axis. labels(i, t) is the return
/// realized from feature day t to t+1, defined for t < n_labeled_days().
struct MarketDataset {
  FeatureTensor features;
  Tensor labels;

  std::size_t n_stocks() const { return features.n_stocks(); }
  std::size_t n_labeled_days() const { return labels.cols(); }
  const std::vector<std::string>& symbols() const { return features.symbols; }

  // N x S x 5 slice of feature days [t - S + 1, t].
  Tensor window(std::size_t t, std::size_t length) const;
  std::vector<double> returns_on(std::size_t t) const;
};

PriceSeries parse_price_csv(std::istream& in, std::string symbol, const std::string& source);
std::vector<PriceSeries> load_prices(const std::filesystem::path& dir);
void write_price_csv(const PriceSeries& series, const std::filesystem::path& path);

struct AlignedPrices {
  std::vector<PriceSeries> series;
  std::vector<std::string> calendar;
};

AlignedPrices align_calendar(std::vector<PriceSeries> prices);

FeatureTensor build_features(std::span<const PriceSeries> prices);
ReturnMatrix build_labels(std::span<const PriceSeries> prices);
MarketDataset make_dataset(FeatureTensor features, const ReturnMatrix& returns);
// load_prices -> align_calendar -> build_features/build_labels -> make_dataset.
MarketDataset load_market(const std::filesystem::path& price_dir);

RelationLoadResult load_relations(const std::filesystem::path& path, std::span<const std::string> universe);
RelationLoadResult parse_relations(std::string_view json_text, std::span<const std::string> universe);
void save_relations(const RelationTensor& rel, std::span<const std::string> symbols,
                    const std::filesystem::path& path);

DatasetSplit chronological_split(std::size_t n_days, std::size_t train_end, std::size_t val_end);

}  // namespace relrank
