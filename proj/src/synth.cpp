#include "relrank/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "relrank/error.hpp"

namespace relrank {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> business_days(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(count);
  sys_days d{year{2013} / January / 2};
  char buf[16];
  while (out.size() < count) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{d};
      std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    d += days{1};
  }
  return out;
}

std::string symbol_for(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "SYN%03zu", i);
  return buf;
}

}  // namespace

SyntheticMarket synth_market(const SynthOptions& o) {
  if (o.n_stocks == 0 || o.n_days == 0 || o.n_factors == 0) {
    throw std::invalid_argument("synth_market: stock, day and factor counts must be positive");
  }
  if (!(o.relation_density >= 0.0 && o.relation_density <= 1.0)) {
    throw std::invalid_argument("synth_market: relation density must lie in [0, 1]");
  }
  if (o.noise_scale < 0.0 || o.factor_volatility < 0.0 || std::abs(o.factor_persistence) >= 1.0) {
    throw std::invalid_argument("synth_market: invalid noise or factor parameters");
  }

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticMarket m;
  std::vector<std::size_t> order(o.n_stocks);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  m.factor_of.resize(o.n_stocks);
  for (std::size_t k = 0; k < o.n_stocks; ++k) m.factor_of[order[k]] = k % o.n_factors;

  // Factor paths, started from the stationary distribution of the AR(1).
  const double phi = o.factor_persistence;
  std::vector<std::vector<double>> factor(o.n_factors, std::vector<double>(o.n_days, 0.0));
  for (auto& path : factor) {
    path[0] = o.factor_volatility / std::sqrt(1.0 - phi * phi) * normal(rng);
    for (std::size_t t = 1; t < o.n_days; ++t) path[t] = phi * path[t - 1] + o.factor_volatility * normal(rng);
  }

  const auto dates = business_days(o.n_days);
  m.prices.resize(o.n_stocks);
  for (std::size_t i = 0; i < o.n_stocks; ++i) {
    PriceSeries& s = m.prices[i];
    s.symbol = symbol_for(i);
    s.dates = dates;
    s.closes.resize(o.n_days);
    s.closes[0] = 20.0 + 80.0 * unit(rng);
    for (std::size_t t = 1; t < o.n_days; ++t) {
      const double log_return = factor[m.factor_of[i]][t] + o.noise_scale * normal(rng);
      s.closes[t] = s.closes[t - 1] * std::exp(log_return);
    }
  }

  m.relations = RelationTensor(o.n_stocks, {{"same_factor", true}, {"random_link", true}});
  const std::size_t same[] = {kSameFactorRelation};
  const std::size_t random_link[] = {kRandomLinkRelation};
  for (std::size_t i = 0; i < o.n_stocks; ++i) {
    for (std::size_t j = i + 1; j < o.n_stocks; ++j) {
      if (m.factor_of[i] == m.factor_of[j]) {
        m.relations.add(i, j, same);
        m.relations.add(j, i, same);
      }
      if (unit(rng) < o.relation_density) {
        m.relations.add(i, j, random_link);
        m.relations.add(j, i, random_link);
      }
    }
  }
  return m;
}

void write_synthetic_market(const SyntheticMarket& market, const SynthOptions& o, const fs::path& dir) {
  const fs::path price_dir = dir / "prices";
  fs::create_directories(price_dir);
  std::vector<std::string> symbols;
  for (const auto& s : market.prices) {
    write_price_csv(s, price_dir / (s.symbol + ".csv"));
    symbols.push_back(s.symbol);
  }
  save_relations(market.relations, symbols, dir / "relations.json");

  nlohmann::ordered_json doc;
  doc["n_factors"] = o.n_factors;
  doc["factor_persistence"] = o.factor_persistence;
  doc["factor_volatility"] = o.factor_volatility;
  doc["noise_scale"] = o.noise_scale;
  doc["relation_density"] = o.relation_density;
  doc["seed"] = o.seed;
  nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < symbols.size(); ++i) assignment[symbols[i]] = market.factor_of[i];
  doc["assignment"] = assignment;
  std::ofstream os(dir / "factors.json", std::ios::trunc);
  if (!os) throw DataError("cannot write " + (dir / "factors.json").string());
  os << doc.dump(1) << '\n';
}

}  // namespace relrank
