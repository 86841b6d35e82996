#include "relrank/gradsuite.hpp"

#include <cstdio>
#include <random>

#include "relrank/gradcheck.hpp"

namespace relrank {

namespace {

constexpr ModelMode kAllModes[] = {ModelMode::rank_lstm, ModelMode::gbr, ModelMode::gcn, ModelMode::rsr_e,
                                   ModelMode::rsr_i};

}  // namespace

GradInstance make_grad_instance(const GradSuiteOptions& o, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), centered(-1.0, 1.0);
  GradInstance inst;
  inst.window = Tensor({o.n_stocks, o.window, o.input_dim});
  for (double& v : inst.window.data()) v = unit(rng);
  for (std::size_t i = 0; i < o.n_stocks; ++i) inst.truth.push_back(centered(rng));

  std::vector<RelationType> types;
  for (std::size_t k = 0; k < o.n_types; ++k) types.push_back({"type" + std::to_string(k), false});
  inst.relations = RelationTensor(o.n_stocks, types);
  auto random_types = [&] {
    std::vector<std::size_t> t;
    for (std::size_t k = 0; k < o.n_types; ++k)
      if (unit(rng) < 0.5) t.push_back(k);
    if (t.empty()) t.push_back(static_cast<std::size_t>(unit(rng) * double(o.n_types)) % o.n_types);
    return t;
  };
  if (o.n_stocks > 1) {
    // A ring keeps every stock connected; extra edges are random.
    for (std::size_t i = 0; i < o.n_stocks; ++i) inst.relations.add((i + 1) % o.n_stocks, i, random_types());
    for (std::size_t j = 0; j < o.n_stocks; ++j)
      for (std::size_t i = 0; i < o.n_stocks; ++i)
        if (i != j && unit(rng) < 0.4) inst.relations.add(j, i, random_types());
  }
  return inst;
}

GradSuiteReport run_gradient_suite(const GradSuiteOptions& o) {
  GradSuiteReport report;
  report.passed = true;
  for (ModelMode mode : kAllModes) {
    ModeGradResult res;
    res.mode = mode;
    for (std::size_t s = 0; s < o.seeds; ++s) {
      const std::uint64_t seed = o.base_seed + s;
      const GradInstance inst = make_grad_instance(o, seed);
      RankModelConfig config;
      config.mode = mode;
      config.window = o.window;
      config.units = o.units;
      config.alpha = 1.0;
      config.lambda = 0.5;
      config.seed = seed;
      const GraphContext graph = make_graph_context(inst.relations, config);
      ParamSet params = init_params(config, o.n_types, o.input_dim);
      // Nonzero biases so no parameter sits at a symmetric point.
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
      std::uniform_real_distribution<double> dist(-0.5, 0.5);
      for (const char* name : {"fc.b", "tgc.b", "gcn.b"})
        if (params.contains(name))
          for (double& v : params.get(name).data()) v = dist(rng);

      const Objective f = [&](Tape& tape, const Bindings& b) {
        return day_objective(tape, b, inst.window, inst.truth, config, &graph);
      };
      GradientTamper tamper;
      if (o.corrupt) {
        tamper = [](ParamSet& g) { g.get("fc.w")[0] += 0.1; };
      }
      const GradCheckReport r = finite_diff_check(f, params, o.eps, tamper);
      res.coordinates += r.coordinates;
      if (r.max_rel_error > res.worst_rel_error || res.worst_param.empty()) {
        res.worst_rel_error = r.max_rel_error;
        res.worst_param = r.worst_param;
        res.worst_seed = seed;
      }
    }
    res.passed = res.worst_rel_error < o.tolerance;
    report.passed = report.passed && res.passed;
    report.modes.push_back(res);
  }
  return report;
}

std::string format_report(const GradSuiteReport& report) {
  std::string out;
  char line[160];
  for (const ModeGradResult& m : report.modes) {
    std::snprintf(line, sizeof line, "%-9s worst_rel_err=%.3e param=%s seed=%llu coords=%zu %s\n",
                  std::string(mode_name(m.mode)).c_str(), m.worst_rel_error, m.worst_param.c_str(),
                  static_cast<unsigned long long>(m.worst_seed), m.coordinates, m.passed ? "ok" : "FAIL");
    out += line;
  }
  out += report.passed ? "gradcheck passed\n" : "gradcheck FAILED\n";
  return out;
}

}  // namespace relrank
