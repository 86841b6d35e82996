#include "relrank/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relrank/error.hpp"

namespace relrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
  };
  if (!parse(0, 4, y) || !parse(5, 2, m) || !parse(8, 2, d)) return false;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

}  // namespace

// ---------------------------------------------------------------------------
// RelationTensor

RelationTensor::RelationTensor(std::size_t n_stocks, std::vector<RelationType> types)
    : n_stocks_(n_stocks), types_(std::move(types)) {}

void RelationTensor::add(std::size_t src, std::size_t dst, std::span<const std::size_t> types) {
  if (src >= n_stocks_ || dst >= n_stocks_) throw DataError("relation edge references a stock out of range");
  if (src == dst) throw DataError("self-edge on stock index " + std::to_string(src));
  if (types.empty()) throw DataError("relation edge without any relation type");
  auto& set = edges_[{src, dst}];
  for (std::size_t k : types) {
    if (k >= types_.size()) {
      throw DataError("relation type index " + std::to_string(k) + " out of range (K=" +
                      std::to_string(types_.size()) + ")");
    }
    set.push_back(k);
  }
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
}

const std::vector<std::size_t>* RelationTensor::find(std::size_t src, std::size_t dst) const {
  auto it = edges_.find({src, dst});
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<double> RelationTensor::multi_hot(std::size_t src, std::size_t dst) const {
  std::vector<double> a(types_.size(), 0.0);
  if (const auto* t = find(src, dst))
    for (std::size_t k : *t) a[k] = 1.0;
  return a;
}

// ---------------------------------------------------------------------------
// MarketDataset

Tensor MarketDataset::window(std::size_t t, std::size_t length) const {
  if (length == 0) throw std::invalid_argument("window length must be positive");
  if (t + 1 < length || t >= features.n_days()) {
    throw std::out_of_range("window of length " + std::to_string(length) + " ending at day " + std::to_string(t) +
                            " is outside the feature range");
  }
  const std::size_t n = n_stocks(), d = kFeatureCount, first = t + 1 - length;
  Tensor out({n, length, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < length; ++s)
      for (std::size_t f = 0; f < d; ++f) out.at(i, s, f) = features.values.at(i, first + s, f);
  return out;
}

std::vector<double> MarketDataset::returns_on(std::size_t t) const {
  if (t >= n_labeled_days()) throw std::out_of_range("day " + std::to_string(t) + " has no label");
  std::vector<double> r(n_stocks());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = labels.at(i, t);
  return r;
}

// ---------------------------------------------------------------------------
// Prices

PriceSeries parse_price_csv(std::istream& in, std::string symbol, const std::string& source) {
  PriceSeries out;
  out.symbol = std::move(symbol);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::pair<std::string, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    if (!header_seen) {
      if (text != "date,close") throw fail("expected header 'date,close'");
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos) {
      throw fail("malformed row '" + text + "'");
    }
    std::string date = trim(std::string_view(text).substr(0, comma));
    const std::string close_text = trim(std::string_view(text).substr(comma + 1));
    if (!valid_iso_date(date)) throw fail("malformed date '" + date + "'");
    double close = 0.0;
    auto [p, ec] = std::from_chars(close_text.data(), close_text.data() + close_text.size(), close);
    if (ec != std::errc() || p != close_text.data() + close_text.size() || !std::isfinite(close)) {
      throw fail("malformed close '" + close_text + "'");
    }
    if (close <= 0.0) throw fail("non-positive price " + close_text);
    rows.emplace_back(std::move(date), close);
  }
  if (!header_seen) throw DataError(source + ": empty price file");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].first == rows[i - 1].first) throw DataError(source + ": duplicate date " + rows[i].first);
  }
  for (auto& [d, c] : rows) {
    out.dates.push_back(std::move(d));
    out.closes.push_back(c);
  }
  return out;
}

std::vector<PriceSeries> load_prices(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("price directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no price CSV files in " + dir.string());
  std::vector<PriceSeries> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw DataError("cannot open " + f.string());
    out.push_back(parse_price_csv(in, f.stem().string(), f.string()));
  }
  return out;
}

void write_price_csv(const PriceSeries& series, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << "date,close\n";
  char buf[64];
  for (std::size_t t = 0; t < series.dates.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", series.closes[t]);
    os << series.dates[t] << ',' << buf << '\n';
  }
}

AlignedPrices align_calendar(std::vector<PriceSeries> prices) {
  if (prices.empty()) throw DataError("align_calendar: no price series");
  std::vector<std::string> calendar = prices.front().dates;
  for (std::size_t s = 1; s < prices.size(); ++s) {
    std::vector<std::string> next;
    std::set_intersection(calendar.begin(), calendar.end(), prices[s].dates.begin(), prices[s].dates.end(),
                          std::back_inserter(next));
    calendar = std::move(next);
  }
  if (calendar.empty()) throw DataError("align_calendar: price series share no trading day");
  for (auto& series : prices) {
    PriceSeries kept{series.symbol, {}, {}};
    std::size_t c = 0;
    for (std::size_t t = 0; t < series.dates.size() && c < calendar.size(); ++t) {
      if (series.dates[t] == calendar[c]) {
        kept.dates.push_back(series.dates[t]);
        kept.closes.push_back(series.closes[t]);
        ++c;
      }
    }
    series = std::move(kept);
  }
  return {std::move(prices), std::move(calendar)};
}

// ---------------------------------------------------------------------------
// Features and labels

namespace {

void require_aligned(std::span<const PriceSeries> prices, std::string_view who) {
  if (prices.empty()) throw DataError(std::string(who) + ": no price series");
  std::set<std::string> seen;
  for (const auto& s : prices) {
    if (s.dates.size() != s.closes.size()) throw DataError(s.symbol + ": dates and closes differ in length");
    if (s.dates != prices.front().dates) {
      throw DataError(std::string(who) + ": series " + s.symbol + " is not on the shared calendar");
    }
    if (!seen.insert(s.symbol).second) throw DataError(std::string(who) + ": duplicate symbol " + s.symbol);
  }
}

}  // namespace

FeatureTensor build_features(std::span<const PriceSeries> prices) {
  require_aligned(prices, "build_features");
  const std::size_t n = prices.size();
  const std::size_t len = prices.front().dates.size();
  if (len < kMinSeriesLength) {
    throw DataError("build_features: series of " + std::to_string(len) + " days is shorter than " +
                    std::to_string(kMinSeriesLength));
  }
  const std::size_t n_days = len - kWarmupDays;

  FeatureTensor ft;
  ft.values = Tensor({n, n_days, kFeatureCount});
  for (std::size_t t = 0; t < n_days; ++t) {
    ft.dates.push_back(prices.front().dates[t + kWarmupDays]);
    ft.day_index.emplace(ft.dates.back(), t);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& closes = prices[i].closes;
    ft.symbols.push_back(prices[i].symbol);
    ft.stock_index.emplace(prices[i].symbol, i);
    const double peak = *std::max_element(closes.begin(), closes.end());
    std::vector<double> norm(len);
    for (std::size_t t = 0; t < len; ++t) norm[t] = closes[t] / peak;

    // Running sums, one per window; the sum for window w at day t covers
    // norm[t - w + 1 .. t].
    std::array<double, kMovingAverageWindows.size()> running{};
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t k = 0; k < kMovingAverageWindows.size(); ++k) {
        const std::size_t w = kMovingAverageWindows[k];
        running[k] += norm[t];
        if (t >= w) running[k] -= norm[t - w];
      }
      if (t < kWarmupDays) continue;
      const std::size_t day = t - kWarmupDays;
      ft.values.at(i, day, 0) = norm[t];
      for (std::size_t k = 0; k < kMovingAverageWindows.size(); ++k) {
        ft.values.at(i, day, k + 1) = running[k] / static_cast<double>(kMovingAverageWindows[k]);
      }
    }
  }
  return ft;
}

ReturnMatrix build_labels(std::span<const PriceSeries> prices) {
  require_aligned(prices, "build_labels");
  const std::size_t n = prices.size();
  const std::size_t len = prices.front().dates.size();
  if (len < 2) throw DataError("build_labels: need at least two days");
  ReturnMatrix out;
  out.values = Tensor({n, len - 1});
  out.dates.assign(prices.front().dates.begin(), prices.front().dates.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = prices[i].closes;
    for (std::size_t t = 0; t + 1 < len; ++t) out.values.at(i, t) = (p[t + 1] - p[t]) / p[t];
  }
  return out;
}

MarketDataset make_dataset(FeatureTensor features, const ReturnMatrix& returns) {
  const std::size_t n = features.n_stocks();
  if (returns.values.rows() != n) throw DataError("make_dataset: feature and label stock counts differ");
  std::map<std::string_view, std::size_t> label_day;
  for (std::size_t t = 0; t < returns.dates.size(); ++t) label_day.emplace(returns.dates[t], t);

  // Feature days with a next-day return; they form a prefix of the feature axis.
  std::vector<std::size_t> source;
  for (const auto& date : features.dates) {
    auto it = label_day.find(date);
    if (it == label_day.end()) break;
    source.push_back(it->second);
  }
  if (source.empty()) throw DataError("make_dataset: no feature day has a label");
  MarketDataset ds;
  ds.labels = Tensor({n, source.size()});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < source.size(); ++t) ds.labels.at(i, t) = returns.values.at(i, source[t]);
  ds.features = std::move(features);
  return ds;
}

MarketDataset load_market(const fs::path& price_dir) {
  AlignedPrices aligned = align_calendar(load_prices(price_dir));
  return make_dataset(build_features(aligned.series), build_labels(aligned.series));
}

// ---------------------------------------------------------------------------
// Relations

RelationLoadResult parse_relations(std::string_view json_text, std::span<const std::string> universe) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("relation file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("types") || !doc.contains("edges")) {
    throw DataError("relation file must contain 'types' and 'edges'");
  }
  std::vector<RelationType> types;
  for (const auto& t : doc.at("types")) {
    if (!t.is_object() || !t.contains("name")) throw DataError("relation type entry without a name");
    types.push_back({t.at("name").get<std::string>(), t.value("symmetric", false)});
  }
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < universe.size(); ++i) index.emplace(universe[i], i);

  RelationLoadResult out{RelationTensor(universe.size(), types), 0, {}};
  for (const auto& e : doc.at("edges")) {
    if (!e.is_object() || !e.contains("src") || !e.contains("dst") || !e.contains("types")) {
      throw DataError("relation edge must have 'src', 'dst' and 'types'");
    }
    const auto src = e.at("src").get<std::string>();
    const auto dst = e.at("dst").get<std::string>();
    std::vector<std::size_t> ks;
    for (const auto& k : e.at("types")) {
      if (!k.is_number_integer() || k.get<long long>() < 0) throw DataError("relation type index must be >= 0");
      ks.push_back(k.get<std::size_t>());
    }
    for (std::size_t k : ks) {
      if (k >= types.size()) {
        throw DataError("relation type index " + std::to_string(k) + " out of range (K=" +
                        std::to_string(types.size()) + ")");
      }
    }
    if (src == dst) throw DataError("self-edge on " + src);
    auto si = index.find(src);
    auto di = index.find(dst);
    if (si == index.end() || di == index.end()) {
      ++out.skipped_edges;
      out.warnings.push_back("skipping edge " + src + "->" + dst + ": symbol outside the universe");
      continue;
    }
    out.tensor.add(si->second, di->second, ks);
    std::vector<std::size_t> mirrored;
    for (std::size_t k : ks)
      if (types[k].symmetric) mirrored.push_back(k);
    if (!mirrored.empty()) out.tensor.add(di->second, si->second, mirrored);
  }
  return out;
}

RelationLoadResult load_relations(const fs::path& path, std::span<const std::string> universe) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open relation file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_relations(ss.str(), universe);
}

void save_relations(const RelationTensor& rel, std::span<const std::string> symbols, const fs::path& path) {
  if (symbols.size() != rel.n_stocks()) throw std::invalid_argument("save_relations: symbol count mismatch");
  json doc;
  doc["types"] = json::array();
  for (const auto& t : rel.types()) doc["types"].push_back({{"name", t.name}, {"symmetric", t.symmetric}});
  doc["edges"] = json::array();
  for (const auto& [key, ks] : rel.edges()) {
    doc["edges"].push_back({{"src", symbols[key.first]}, {"dst", symbols[key.second]}, {"types", ks}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << doc.dump(1) << '\n';
}

DatasetSplit chronological_split(std::size_t n_days, std::size_t train_end, std::size_t val_end) {
  if (!(0 < train_end && train_end < val_end && val_end < n_days)) {
    throw std::invalid_argument("chronological_split: boundaries must satisfy 0 < " + std::to_string(train_end) +
                                " < " + std::to_string(val_end) + " < " + std::to_string(n_days));
  }
  return {{0, train_end}, {train_end, val_end}, {val_end, n_days}};
}

}  // namespace relrank
