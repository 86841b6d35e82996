#include "relrank/model.hpp"

#include <cmath>
#include <random>

#include "relrank/error.hpp"
#include "relrank/lstm.hpp"

namespace relrank {

namespace {

struct ModeEntry {
  ModelMode mode;
  std::string_view name;
};

constexpr ModeEntry kModes[] = {{ModelMode::rank_lstm, "rank_lstm"},
                                {ModelMode::gbr, "gbr"},
                                {ModelMode::gcn, "gcn"},
                                {ModelMode::rsr_e, "rsr_e"},
                                {ModelMode::rsr_i, "rsr_i"}};

TgcMode tgc_mode(ModelMode mode) { return mode == ModelMode::rsr_e ? TgcMode::explicit_ : TgcMode::implicit_; }

std::size_t fc_dim(const RankModelConfig& config) {
  return uses_relational_embedding(config.mode) ? 2 * config.units : config.units;
}

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

std::string_view mode_name(ModelMode mode) {
  for (const auto& e : kModes)
    if (e.mode == mode) return e.name;
  return "?";
}

ModelMode parse_mode(std::string_view name) {
  for (const auto& e : kModes)
    if (e.name == name) return e.mode;
  throw UsageError("unknown mode '" + std::string(name) + "' (expected rank_lstm, gbr, gcn, rsr_e or rsr_i)");
}

bool uses_relational_embedding(ModelMode mode) {
  return mode == ModelMode::gcn || mode == ModelMode::rsr_e || mode == ModelMode::rsr_i;
}

bool needs_relations(ModelMode mode) { return mode != ModelMode::rank_lstm; }

void validate(const RankModelConfig& c) {
  if (c.window == 0) throw UsageError("window must be positive");
  if (c.units == 0) throw UsageError("units must be positive");
  if (c.epochs == 0) throw UsageError("epochs must be at least 1");
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw UsageError("alpha must be a finite value >= 0");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw UsageError("lambda must be a finite value >= 0");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw UsageError("lr must be a finite value >= 0");
}

GraphContext make_graph_context(const RelationTensor& rel, const RankModelConfig& config) {
  GraphContext g;
  g.n_types = rel.n_types();
  g.index = build_neighbor_index(rel);
  g.adjacency = normalized_adjacency(rel, AdjacencyNorm::column, config.gcn_self_loops);
  g.laplacian = graph_laplacian(rel);
  return g;
}

ParamSet init_params(const RankModelConfig& config, std::size_t n_types, std::size_t input_dim) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  const std::size_t u = config.units;
  ParamSet params;
  LstmWeights::random(u, input_dim, rng).store(params);
  switch (config.mode) {
    case ModelMode::rsr_e:
    case ModelMode::rsr_i: {
      const TgcParams tgc = TgcParams::random(tgc_mode(config.mode), u, n_types, rng);
      params.add("tgc.w", tgc.w);
      params.add("tgc.b", Tensor::scalar(tgc.b));
      break;
    }
    case ModelMode::gcn:
      params.add("gcn.W", uniform({u, u}, 1.0 / std::sqrt(double(u)), rng));
      params.add("gcn.b", Tensor({u}));
      break;
    case ModelMode::rank_lstm:
    case ModelMode::gbr:
      break;
  }
  const std::size_t dim = fc_dim(config);
  params.add("fc.w", uniform({dim, 1}, 1.0 / std::sqrt(double(dim)), rng));
  params.add("fc.b", Tensor({1}));
  return params;
}

void check_params(const ParamSet& params, const RankModelConfig& config, std::size_t n_types,
                  std::size_t input_dim) {
  RankModelConfig shape_only = config;
  const ParamSet expected = init_params(shape_only, n_types, input_dim);
  if (params.names() != expected.names()) {
    std::string got;
    for (const auto& n : params.names()) got += (got.empty() ? "" : ", ") + n;
    throw ShapeError("parameters do not match mode " + std::string(mode_name(config.mode)) + ": got {" + got + "}");
  }
  for (const auto& [name, value] : expected) {
    if (params.get(name).shape() != value.shape()) {
      throw ShapeError("parameter " + name + " has shape " + shape_string(params.get(name).shape()) +
                       ", expected " + shape_string(value.shape()));
    }
  }
}

Var predict_scores(Var embeddings, std::optional<Var> relational, Var w, Var b) {
  const Var features = relational ? concat_cols(embeddings, *relational) : embeddings;
  const std::size_t dim = features.value().cols();
  if (w.value().numel() != dim) {
    throw ShapeError("prediction weights " + shape_string(w.value().shape()) + " vs features " +
                     shape_string(features.value().shape()));
  }
  if (b.value().numel() != 1) throw ShapeError("prediction bias must be a scalar");
  const Var out = add_bias(matmul(features, reshape(w, {dim, 1})), reshape(b, {1}));
  return reshape(out, {features.value().rows()});
}

Tensor predict_scores(const Tensor& embeddings, const Tensor* relational, const Tensor& w, double b) {
  Tape tape;
  std::optional<Var> rel;
  if (relational) rel = tape.constant(*relational);
  return predict_scores(tape.constant(embeddings), rel, tape.constant(w), tape.constant(Tensor::scalar(b))).value();
}

double ranking_loss(std::span<const double> scores, std::span<const double> truth, double alpha, bool unnormalized) {
  if (scores.size() != truth.size()) {
    throw ShapeError("ranking_loss: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(truth.size()) + " returns");
  }
  if (alpha < 0.0) throw std::invalid_argument("ranking_loss: alpha must be >= 0");
  const std::size_t n = scores.size();
  if (n == 0) return 0.0;
  double squared = 0.0, pairwise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = scores[i] - truth[i];
    squared += d * d;
    for (std::size_t j = 0; j < n; ++j) {
      pairwise += std::max(0.0, -(scores[i] - scores[j]) * (truth[i] - truth[j]));
    }
  }
  const double nn = static_cast<double>(n);
  return unnormalized ? squared + alpha * pairwise : squared / nn + alpha * pairwise / (nn * nn);
}

Var ranking_loss(Var scores, std::span<const double> truth, double alpha, bool unnormalized) {
  const Tensor& s = scores.value();
  const double value = ranking_loss(s.data(), truth, alpha, unnormalized);
  const std::size_t n = truth.size();
  const double nn = static_cast<double>(std::max<std::size_t>(n, 1));
  const double c_sq = unnormalized ? 1.0 : 1.0 / nn;
  const double c_pair = unnormalized ? alpha : alpha / (nn * nn);
  std::vector<double> r(truth.begin(), truth.end());
  const Var in[] = {scores};
  return scores.tape->push("ranking_loss", in, Tensor::scalar(value),
                           [scores, r = std::move(r), c_sq, c_pair](Tape& t, const Tensor& g) {
                             Tensor* gs = t.grad_slot(scores);
                             if (!gs) return;
                             const Tensor& p = t.value(scores);
                             const std::size_t n = r.size();
                             for (std::size_t i = 0; i < n; ++i) {
                               double pair = 0.0;
                               for (std::size_t j = 0; j < n; ++j) {
                                 const double dr = r[i] - r[j];
                                 // Pairs (i,j) and (j,i) contribute the same slope.
                                 if (-(p[i] - p[j]) * dr > 0.0) pair -= dr;
                               }
                               (*gs)[i] += g[0] * (2.0 * c_sq * (p[i] - r[i]) + 2.0 * c_pair * pair);
                             }
                           });
}

Var forward_scores(Tape& tape, const Bindings& params, const Tensor& window, const RankModelConfig& config,
                   const GraphContext* graph) {
  const Var e = sequential_embedding(tape, window, LstmVars::bind(params));
  std::optional<Var> relational;
  if (uses_relational_embedding(config.mode)) {
    if (!graph) throw std::invalid_argument(std::string(mode_name(config.mode)) + " needs a relation graph");
    if (graph->index.n_stocks != window.dim(0)) {
      throw ShapeError("relation graph has " + std::to_string(graph->index.n_stocks) + " stocks, window has " +
                       std::to_string(window.dim(0)));
    }
    if (config.mode == ModelMode::gcn) {
      relational = gcn_layer(e, graph->adjacency, params["gcn.W"], params["gcn.b"]);
    } else {
      TgcOptions options;
      options.implicit_divide_by_degree = config.implicit_divide_by_degree;
      relational = tgc_propagate(e, graph->index, tgc_mode(config.mode), params["tgc.w"], params["tgc.b"], options);
    }
  }
  return predict_scores(e, relational, params["fc.w"], params["fc.b"]);
}

Var day_objective(Tape& tape, const Bindings& params, const Tensor& window, std::span<const double> truth,
                  const RankModelConfig& config, const GraphContext* graph) {
  const Var scores = forward_scores(tape, params, window, config, graph);
  Var loss = ranking_loss(scores, truth, config.alpha, config.loss_unnormalized);
  if (config.mode == ModelMode::gbr) {
    if (!graph) throw std::invalid_argument("gbr needs a relation graph");
    loss = loss + scale(graph_regularizer(scores, graph->laplacian), config.lambda);
  }
  return loss;
}

Tensor RankModel::predict(const Tensor& window) const {
  Tape tape;
  Bindings b;
  for (const auto& [name, value] : params) b.set(name, tape.constant(value));
  return forward_scores(tape, b, window, config, graph ? &*graph : nullptr).value();
}

}  // namespace relrank
