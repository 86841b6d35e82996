#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "relrank/marketdata.hpp"
#include "relrank/tape.hpp"

namespace relrank {

struct Neighbor {
  std::size_t stock;
  std::vector<double> relation;  // multi-hot a_ji, length K
};

/// In-neighbour lists: in[i] holds every j with an edge j -> i, ascending by
/// j. The same edges are also kept as flat, destination-major arrays for
/// batched message passing.
struct NeighborIndex {
  std::size_t n_stocks = 0;
  std::size_t n_types = 0;
  std::vector<std::vector<Neighbor>> in;
  std::vector<std::size_t> degree;

  std::vector<std::size_t> edge_src;
  std::vector<std::size_t> edge_dst;
  Tensor edge_relations;  // M x K
  std::vector<double> inv_degree_per_edge;

  std::size_t edge_count() const { return edge_src.size(); }
};

NeighborIndex build_neighbor_index(const RelationTensor& rel);

enum class TgcMode { uniform, explicit_, implicit_ };

struct TgcOptions {
  // Implicit mode normally replaces 1/d_i by the softmax; this also divides.
  bool implicit_divide_by_degree = false;
  // Test hook: force every relation strength to this value (implicit mode:
  // every pre-softmax score).
  std::optional<double> fixed_strength;
};

/// Relation-strength parameters. explicit_: w has K entries;
/// implicit_: w has 2U + K entries ordered [e_i; e_j; a_ji].
struct TgcParams {
  TgcMode mode = TgcMode::uniform;
  Tensor w;
  double b = 0.0;

  static TgcParams random(TgcMode mode, std::size_t units, std::size_t n_types, std::mt19937_64& rng);
};

std::size_t tgc_weight_dim(TgcMode mode, std::size_t units, std::size_t n_types);

/// Unnormalised strength g(a_ji, e_i, e_j). explicit_: (e_i . e_j) * phi(w.a + b);
/// implicit_: phi(w.[e_i; e_j; a] + b); phi is the leaky rectifier.
double relation_strength(TgcMode mode, std::span<const double> a_ji, std::span<const double> e_i,
                         std::span<const double> e_j, const TgcParams& p);

// e_bar_i = mean of e_j over in-neighbours; zero for isolated stocks.
Var uniform_propagate(Var embeddings, const NeighborIndex& idx);
Tensor uniform_propagate(const Tensor& embeddings, const NeighborIndex& idx);

// Time-aware propagation. `w` and `b` are the relation-strength parameters
// (ignored in uniform mode, which may pass any variables).
Var tgc_propagate(Var embeddings, const NeighborIndex& idx, TgcMode mode, Var w, Var b,
                  const TgcOptions& options = {});
Tensor tgc_propagate(const Tensor& embeddings, const NeighborIndex& idx, const TgcParams& p,
                     const TgcOptions& options = {});

// Attention weights of implicit mode, flattened in edge order.
Tensor implicit_attention(const Tensor& embeddings, const NeighborIndex& idx, const TgcParams& p);

enum class AdjacencyNorm { column, symmetric };

/// Propagation matrix for the GCN layer, stored receiver-major:
/// matrix(i, j) is the weight of stock j in the output row of stock i.
/// `column` divides the binary adjacency A(j -> i) by the receiver's degree,
/// i.e. each column of the sender-major adjacency sums to one.
struct NormalizedAdjacency {
  Tensor matrix;
  AdjacencyNorm norm = AdjacencyNorm::column;
  bool self_loops = false;
};

NormalizedAdjacency normalized_adjacency(const RelationTensor& rel, AdjacencyNorm norm = AdjacencyNorm::column,
                                         bool self_loops = false);

// A_norm (E W + 1 b^T).
Var gcn_layer(Var embeddings, const NormalizedAdjacency& adj, Var weight, Var bias);
Tensor gcn_layer(const Tensor& embeddings, const NormalizedAdjacency& adj, const Tensor& weight,
                 const Tensor& bias);

/// L = D^{-1/2} (D - A) D^{-1/2} on the symmetrised binary relation graph.
struct LaplacianMatrix {
  Tensor matrix;
};

LaplacianMatrix graph_laplacian(const RelationTensor& rel);

// trace(Y L Y^T). `scores` is either one length-N row or an M x N matrix.
Var graph_regularizer(Var scores, const LaplacianMatrix& lap);
double graph_regularizer(const Tensor& scores, const LaplacianMatrix& lap);

}  // namespace relrank
