#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "relrank/model.hpp"
#include "relrank/trainer.hpp"

namespace relrank {

/// Contents of a run configuration file (JSON). Relative paths are resolved
/// against the directory holding the file.
struct RunConfig {
  std::filesystem::path prices;
  std::optional<std::filesystem::path> relations;
  std::filesystem::path out_dir;
  RankModelConfig model;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  // Explicit [train_end, val_end) boundaries in labeled-day indices.
  std::optional<std::pair<std::size_t, std::size_t>> split_days;
  GridSpec grid;
};

// Throws UsageError on unknown keys, wrong types or out-of-range values.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Applies the RELRANK_SEED environment override, if set.
void apply_seed_override(RunConfig& config);

DatasetSplit split_for(const RunConfig& config, std::size_t n_labeled_days);

/// Entry point of the `relrank` tool. Exit codes: 0 success, 1 usage error,
/// 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace relrank
