#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "relrank/marketdata.hpp"

namespace relrank {

/// Planted-factor market generator. Each stock belongs to one latent factor;
/// its daily log-return is the factor's return plus idiosyncratic noise.
/// Factor returns follow an AR(1) process, so a factor's recent moves are
/// informative about its next move, and that signal is far easier to read
/// from the average of a factor's members than from one noisy series.
struct SynthOptions {
  std::size_t n_stocks = 20;
  std::size_t n_days = 120;
  std::size_t n_factors = 3;
  // Probability that an arbitrary unordered stock pair gets a random link.
  double relation_density = 0.05;
  // Standard deviation of the idiosyncratic daily log-return.
  double noise_scale = 0.02;
  std::uint64_t seed = 0;
  double factor_persistence = 0.5;
  double factor_volatility = 0.02;
};

struct SyntheticMarket {
  std::vector<PriceSeries> prices;
  RelationTensor relations;
  // factor_of[i] = planted factor of stock i.
  std::vector<std::size_t> factor_of;
};

inline constexpr std::size_t kSameFactorRelation = 0;
inline constexpr std::size_t kRandomLinkRelation = 1;

SyntheticMarket synth_market(const SynthOptions& options);

// Writes <dir>/prices/<SYMBOL>.csv, <dir>/relations.json and <dir>/factors.json.
void write_synthetic_market(const SyntheticMarket& market, const SynthOptions& options,
                            const std::filesystem::path& dir);

}  // namespace relrank
