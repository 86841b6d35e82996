#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relrank/model.hpp"

namespace relrank {

/// Finite-difference check of the full per-day objective of every model mode
/// on small random instances.
struct GradSuiteOptions {
  std::size_t n_stocks = 4;
  std::size_t window = 2;
  std::size_t units = 3;
  std::size_t n_types = 2;
  std::size_t input_dim = kFeatureCount;
  std::size_t seeds = 5;
  std::uint64_t base_seed = 0;
  double eps = 1e-5;
  double tolerance = 1e-4;
  // Test hook: perturb one analytic gradient entry so the check must fail.
  bool corrupt = false;
};

struct ModeGradResult {
  ModelMode mode = ModelMode::rank_lstm;
  double worst_rel_error = 0.0;
  std::string worst_param;
  std::uint64_t worst_seed = 0;
  std::size_t coordinates = 0;
  bool passed = false;
};

struct GradSuiteReport {
  std::vector<ModeGradResult> modes;
  bool passed = false;
};

// Random instance used by the suite: window, returns and relation graph.
struct GradInstance {
  Tensor window;
  std::vector<double> truth;
  RelationTensor relations;
};

GradInstance make_grad_instance(const GradSuiteOptions& options, std::uint64_t seed);

GradSuiteReport run_gradient_suite(const GradSuiteOptions& options = {});
std::string format_report(const GradSuiteReport& report);

}  // namespace relrank
