#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "relrank/marketdata.hpp"
#include "relrank/params.hpp"
#include "relrank/relational.hpp"
#include "relrank/tape.hpp"

namespace relrank {

enum class ModelMode { rank_lstm, gbr, gcn, rsr_e, rsr_i };

std::string_view mode_name(ModelMode mode);
// Throws UsageError for an unknown name.
ModelMode parse_mode(std::string_view name);

// Modes whose prediction layer sees a relational embedding.
bool uses_relational_embedding(ModelMode mode);
// Modes that cannot run without a relation file (gbr needs it for the Laplacian).
bool needs_relations(ModelMode mode);

struct RankModelConfig {
  ModelMode mode = ModelMode::rank_lstm;
  std::size_t window = 4;  // S
  std::size_t units = 32;  // U
  double alpha = 1.0;
  double lambda = 0.1;  // graph regularizer weight, gbr only
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double lr = 0.001;
  // Drop the 1/N and 1/N^2 factors of the ranking loss.
  bool loss_unnormalized = false;
  bool implicit_divide_by_degree = false;
  bool gcn_self_loops = false;
};

// Throws UsageError when a field is out of range.
void validate(const RankModelConfig& config);

/// Relation structures precomputed once per universe.
struct GraphContext {
  std::size_t n_types = 0;
  NeighborIndex index;
  NormalizedAdjacency adjacency;
  LaplacianMatrix laplacian;
};

GraphContext make_graph_context(const RelationTensor& rel, const RankModelConfig& config);

/// Fresh parameters for `config`, drawn from mt19937_64(config.seed).
/// Names: lstm.*, then tgc.w / tgc.b (rsr_e, rsr_i) or gcn.W / gcn.b (gcn),
/// then fc.w (concat dim x 1) and fc.b.
ParamSet init_params(const RankModelConfig& config, std::size_t n_types, std::size_t input_dim = kFeatureCount);

// Throws ShapeError when `params` does not hold exactly what `config` needs.
void check_params(const ParamSet& params, const RankModelConfig& config, std::size_t n_types,
                  std::size_t input_dim = kFeatureCount);

// r_hat_i = w . [e_i; e_bar_i] + b. `relational` is absent for rank_lstm/gbr.
Var predict_scores(Var embeddings, std::optional<Var> relational, Var w, Var b);
Tensor predict_scores(const Tensor& embeddings, const Tensor* relational, const Tensor& w, double b);

/// (1/N)||r_hat - r||^2 + alpha (1/N^2) sum_ij max(0, -(r_hat_i - r_hat_j)(r_i - r_j)).
/// With `unnormalized` both scale factors are 1.
Var ranking_loss(Var scores, std::span<const double> truth, double alpha, bool unnormalized = false);
double ranking_loss(std::span<const double> scores, std::span<const double> truth, double alpha,
                    bool unnormalized = false);

// Scores for one window (N x S x D) on `tape`.
Var forward_scores(Tape& tape, const Bindings& params, const Tensor& window, const RankModelConfig& config,
                   const GraphContext* graph);

// Full per-day training objective: ranking loss plus lambda * regularizer for gbr.
Var day_objective(Tape& tape, const Bindings& params, const Tensor& window, std::span<const double> truth,
                  const RankModelConfig& config, const GraphContext* graph);

/// A trained model ready for scoring.
struct RankModel {
  RankModelConfig config;
  ParamSet params;
  std::optional<GraphContext> graph;

  Tensor predict(const Tensor& window) const;
};

}  // namespace relrank
