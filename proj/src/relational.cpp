#include "relrank/relational.hpp"

#include <cmath>

#include "relrank/error.hpp"

namespace relrank {

NeighborIndex build_neighbor_index(const RelationTensor& rel) {
  NeighborIndex idx;
  idx.n_stocks = rel.n_stocks();
  idx.n_types = rel.n_types();
  idx.in.resize(idx.n_stocks);
  idx.degree.assign(idx.n_stocks, 0);
  // The edge map is ordered by (src, dst); regroup by destination.
  for (const auto& [key, types] : rel.edges()) {
    const auto [src, dst] = key;
    idx.in[dst].push_back({src, rel.multi_hot(src, dst)});
  }
  for (std::size_t i = 0; i < idx.n_stocks; ++i) {
    idx.degree[i] = idx.in[i].size();
    for (const Neighbor& nb : idx.in[i]) {
      idx.edge_src.push_back(nb.stock);
      idx.edge_dst.push_back(i);
      idx.inv_degree_per_edge.push_back(1.0 / static_cast<double>(idx.degree[i]));
    }
  }
  const std::size_t m = idx.edge_src.size(), k = idx.n_types;
  idx.edge_relations = Tensor({m, k});
  std::size_t e = 0;
  for (std::size_t i = 0; i < idx.n_stocks; ++i)
    for (const Neighbor& nb : idx.in[i]) {
      for (std::size_t t = 0; t < k; ++t) idx.edge_relations.at(e, t) = nb.relation[t];
      ++e;
    }
  return idx;
}

std::size_t tgc_weight_dim(TgcMode mode, std::size_t units, std::size_t n_types) {
  switch (mode) {
    case TgcMode::uniform:
      return 0;
    case TgcMode::explicit_:
      return n_types;
    case TgcMode::implicit_:
      return 2 * units + n_types;
  }
  return 0;
}

TgcParams TgcParams::random(TgcMode mode, std::size_t units, std::size_t n_types, std::mt19937_64& rng) {
  TgcParams p;
  p.mode = mode;
  const std::size_t dim = tgc_weight_dim(mode, units, n_types);
  p.w = Tensor({dim});
  if (dim > 0) {
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(double(dim)), 1.0 / std::sqrt(double(dim)));
    for (double& v : p.w.data()) v = dist(rng);
  }
  return p;
}

double relation_strength(TgcMode mode, std::span<const double> a, std::span<const double> e_i,
                         std::span<const double> e_j, const TgcParams& p) {
  if (e_i.size() != e_j.size()) throw ShapeError("relation_strength: embedding sizes differ");
  const std::size_t u = e_i.size(), k = a.size();
  if (p.w.numel() != tgc_weight_dim(mode, u, k)) {
    throw ShapeError("relation_strength: w has " + std::to_string(p.w.numel()) + " entries, expected " +
                     std::to_string(tgc_weight_dim(mode, u, k)));
  }
  switch (mode) {
    case TgcMode::uniform:
      return 1.0;
    case TgcMode::explicit_: {
      double sim = 0.0, score = p.b;
      for (std::size_t c = 0; c < u; ++c) sim += e_i[c] * e_j[c];
      for (std::size_t t = 0; t < k; ++t) score += p.w[t] * a[t];
      return sim * apply_activation(Activation::leaky_relu, score);
    }
    case TgcMode::implicit_: {
      double score = p.b;
      for (std::size_t c = 0; c < u; ++c) score += p.w[c] * e_i[c] + p.w[u + c] * e_j[c];
      for (std::size_t t = 0; t < k; ++t) score += p.w[2 * u + t] * a[t];
      return apply_activation(Activation::leaky_relu, score);
    }
  }
  return 0.0;
}

namespace {

void check_embeddings(const Tensor& e, const NeighborIndex& idx, std::string_view who) {
  if (e.rank() != 2 || e.rows() != idx.n_stocks) {
    throw ShapeError(std::string(who) + ": embeddings " + shape_string(e.shape()) + " vs " +
                     std::to_string(idx.n_stocks) + " stocks");
  }
}

// Per-edge scalar regression phi(features * w + b) -> length-M vector.
Var edge_regression(Var features, Var w, Var b) {
  const std::size_t m = features.value().rows();
  const std::size_t dim = w.value().numel();
  if (features.value().cols() != dim) {
    throw ShapeError("relation strength weights " + shape_string(w.value().shape()) + " vs edge features " +
                     shape_string(features.value().shape()));
  }
  if (b.value().numel() != 1) throw ShapeError("relation strength bias must be a scalar");
  const Var score = add_bias(matmul(features, reshape(w, {dim, 1})), b);
  return reshape(activation(Activation::leaky_relu, score), {m});
}

}  // namespace

Var uniform_propagate(Var embeddings, const NeighborIndex& idx) {
  check_embeddings(embeddings.value(), idx, "uniform_propagate");
  Tape& tape = *embeddings.tape;
  const Var sources = gather_rows(embeddings, idx.edge_src);
  const Var weights = tape.constant(Tensor::vector(idx.inv_degree_per_edge));
  return scatter_add_rows(scale_rows(sources, weights), idx.edge_dst, idx.n_stocks);
}

Tensor uniform_propagate(const Tensor& embeddings, const NeighborIndex& idx) {
  Tape tape;
  return uniform_propagate(tape.constant(embeddings), idx).value();
}

Var tgc_propagate(Var embeddings, const NeighborIndex& idx, TgcMode mode, Var w, Var b, const TgcOptions& options) {
  if (mode == TgcMode::uniform) return uniform_propagate(embeddings, idx);
  check_embeddings(embeddings.value(), idx, "tgc_propagate");
  Tape& tape = *embeddings.tape;
  const std::size_t m = idx.edge_count();
  const Var sources = gather_rows(embeddings, idx.edge_src);
  const Var inv_degree = tape.constant(Tensor::vector(idx.inv_degree_per_edge));

  Var edge_weight;
  if (mode == TgcMode::explicit_) {
    Var strength;
    if (options.fixed_strength) {
      strength = tape.constant(Tensor({m}, *options.fixed_strength));
    } else {
      const Var targets = gather_rows(embeddings, idx.edge_dst);
      const Var similarity = row_dot(targets, sources);
      const Var importance = edge_regression(tape.constant(idx.edge_relations), w, b);
      strength = similarity * importance;
    }
    edge_weight = strength * inv_degree;
  } else {
    Var score;
    if (options.fixed_strength) {
      score = tape.constant(Tensor({m}, *options.fixed_strength));
    } else {
      const Var targets = gather_rows(embeddings, idx.edge_dst);
      const Var features = concat_cols(concat_cols(targets, sources), tape.constant(idx.edge_relations));
      score = edge_regression(features, w, b);
    }
    edge_weight = segment_softmax(score, idx.edge_dst, idx.n_stocks);
    if (options.implicit_divide_by_degree) edge_weight = edge_weight * inv_degree;
  }
  return scatter_add_rows(scale_rows(sources, edge_weight), idx.edge_dst, idx.n_stocks);
}

Tensor tgc_propagate(const Tensor& embeddings, const NeighborIndex& idx, const TgcParams& p,
                     const TgcOptions& options) {
  Tape tape;
  return tgc_propagate(tape.constant(embeddings), idx, p.mode, tape.constant(p.w),
                       tape.constant(Tensor::scalar(p.b)), options)
      .value();
}

Tensor implicit_attention(const Tensor& embeddings, const NeighborIndex& idx, const TgcParams& p) {
  check_embeddings(embeddings, idx, "implicit_attention");
  Tape tape;
  const Var e = tape.constant(embeddings);
  const Var features = concat_cols(concat_cols(gather_rows(e, idx.edge_dst), gather_rows(e, idx.edge_src)),
                                   tape.constant(idx.edge_relations));
  const Var score = edge_regression(features, tape.constant(p.w), tape.constant(Tensor::scalar(p.b)));
  return segment_softmax(score, idx.edge_dst, idx.n_stocks).value();
}

NormalizedAdjacency normalized_adjacency(const RelationTensor& rel, AdjacencyNorm norm, bool self_loops) {
  const std::size_t n = rel.n_stocks();
  // adjacency(i, j) = 1 when j -> i carries at least one relation.
  Tensor a({n, n});
  for (const auto& [key, _] : rel.edges()) {
    a.at(key.second, key.first) = 1.0;
    if (norm == AdjacencyNorm::symmetric) a.at(key.first, key.second) = 1.0;
  }
  if (self_loops)
    for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;

  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += a.at(i, j);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a.at(i, j) == 0.0) continue;
      a.at(i, j) = norm == AdjacencyNorm::column ? a.at(i, j) / degree[i]
                                                 : a.at(i, j) / std::sqrt(degree[i] * degree[j]);
    }
  }
  return {std::move(a), norm, self_loops};
}

Var gcn_layer(Var embeddings, const NormalizedAdjacency& adj, Var weight, Var bias) {
  const Tensor& e = embeddings.value();
  if (adj.matrix.cols() != e.rows()) {
    throw ShapeError("gcn_layer: adjacency " + shape_string(adj.matrix.shape()) + " vs embeddings " +
                     shape_string(e.shape()));
  }
  const Var transformed = add_bias(matmul(embeddings, weight), bias);
  return matmul(embeddings.tape->constant(adj.matrix), transformed);
}

Tensor gcn_layer(const Tensor& embeddings, const NormalizedAdjacency& adj, const Tensor& weight,
                 const Tensor& bias) {
  Tape tape;
  return gcn_layer(tape.constant(embeddings), adj, tape.constant(weight), tape.constant(bias)).value();
}

LaplacianMatrix graph_laplacian(const RelationTensor& rel) {
  const std::size_t n = rel.n_stocks();
  Tensor a({n, n});
  for (const auto& [key, _] : rel.edges()) {
    a.at(key.first, key.second) = 1.0;
    a.at(key.second, key.first) = 1.0;
  }
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += a.at(i, j);

  Tensor l({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] == 0.0) continue;
    l.at(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (a.at(i, j) != 0.0) l.at(i, j) = -a.at(i, j) / std::sqrt(degree[i] * degree[j]);
    }
  }
  return {std::move(l)};
}

namespace {

std::pair<std::size_t, std::size_t> score_layout(const Tensor& y, std::size_t n) {
  if (y.numel() == n) return {1, n};
  if (y.rank() == 2 && y.cols() == n) return {y.rows(), n};
  throw ShapeError("graph_regularizer: scores " + shape_string(y.shape()) + " vs Laplacian of " +
                   std::to_string(n) + " stocks");
}

}  // namespace

Var graph_regularizer(Var scores, const LaplacianMatrix& lap) {
  const auto [rows, cols] = score_layout(scores.value(), lap.matrix.rows());
  const double value = graph_regularizer(scores.value(), lap);
  const Var in[] = {scores};
  Tensor lcopy = lap.matrix;
  return scores.tape->push("graph_regularizer", in, Tensor::scalar(value),
                           [scores, lcopy = std::move(lcopy), rows, cols](Tape& t, const Tensor& g) {
                             Tensor* gy = t.grad_slot(scores);
                             if (!gy) return;
                             const Tensor& y = t.value(scores);
                             // d/dy (y L y^T) = y (L + L^T)
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t i = 0; i < cols; ++i) {
                                 double acc = 0.0;
                                 for (std::size_t j = 0; j < cols; ++j)
                                   acc += y[r * cols + j] * (lcopy.at(j, i) + lcopy.at(i, j));
                                 (*gy)[r * cols + i] += g[0] * acc;
                               }
                           });
}

double graph_regularizer(const Tensor& scores, const LaplacianMatrix& lap) {
  const std::size_t n = lap.matrix.rows();
  const auto [rows, cols] = score_layout(scores, n);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < cols; ++i) {
      const double yi = scores[r * cols + i];
      if (yi == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) total += yi * lap.matrix.at(i, j) * scores[r * cols + j];
    }
  return total;
}

}  // namespace relrank
