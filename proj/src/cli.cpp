#include "relrank/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relrank/backtest.hpp"
#include "relrank/error.hpp"
#include "relrank/gradsuite.hpp"
#include "relrank/params.hpp"
#include "relrank/synth.hpp"

namespace relrank {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kCheckpointName = "model.ckpt";

const std::set<std::string, std::less<>> kConfigKeys = {
    "prices", "relations", "out_dir", "mode", "window", "units", "alpha", "lambda", "epochs", "seed", "lr",
    "loss_unnormalized", "implicit_divide_by_degree", "gcn_self_loops", "train_fraction", "val_fraction",
    "split_days", "grid"};
const std::set<std::string, std::less<>> kGridKeys = {"window", "units", "alpha", "lambda"};

template <class T>
T get_as(const json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + std::string(key) + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, std::string_view key) {
  if (!j.is_number_unsigned()) throw UsageError("config key '" + std::string(key) + "' must be a non-negative integer");
  return j.get<std::size_t>();
}

double get_number(const json& j, std::string_view key) {
  if (!j.is_number()) throw UsageError("config key '" + std::string(key) + "' must be a number");
  return j.get<double>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

ojson config_json(const RunConfig& c) {
  ojson j;
  j["prices"] = c.prices.string();
  j["relations"] = c.relations ? ojson(c.relations->string()) : ojson(nullptr);
  j["out_dir"] = c.out_dir.string();
  j["mode"] = std::string(mode_name(c.model.mode));
  j["window"] = c.model.window;
  j["units"] = c.model.units;
  j["alpha"] = c.model.alpha;
  j["lambda"] = c.model.lambda;
  j["epochs"] = c.model.epochs;
  j["seed"] = c.model.seed;
  j["lr"] = c.model.lr;
  j["loss_unnormalized"] = c.model.loss_unnormalized;
  j["implicit_divide_by_degree"] = c.model.implicit_divide_by_degree;
  j["gcn_self_loops"] = c.model.gcn_self_loops;
  j["train_fraction"] = c.train_fraction;
  j["val_fraction"] = c.val_fraction;
  if (c.split_days) j["split_days"] = {c.split_days->first, c.split_days->second};
  return j;
}

ojson range_json(DayRange r) { return ojson::array({r.begin, r.end}); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inputs shared by train, gridsearch, backtest and eval.
struct LoadedData {
  MarketDataset market;
  std::optional<GraphContext> graph;
  DatasetSplit split;
};

void check_inputs(const RunConfig& c) {
  if (needs_relations(c.model.mode) && !c.relations) {
    throw UsageError("mode " + std::string(mode_name(c.model.mode)) + " requires a 'relations' file in the config");
  }
  if (!fs::is_directory(c.prices)) throw DataError("price directory not found: " + c.prices.string());
  bool any_csv = false;
  for (const auto& entry : fs::directory_iterator(c.prices)) any_csv = any_csv || entry.path().extension() == ".csv";
  if (!any_csv) throw DataError("no .csv price files in " + c.prices.string());
  if (c.relations && !fs::is_regular_file(*c.relations)) {
    throw DataError("relation file not found: " + c.relations->string());
  }
}

LoadedData load_data(const RunConfig& c, std::ostream& err) {
  check_inputs(c);
  LoadedData d;
  d.market = load_market(c.prices);
  if (c.relations && needs_relations(c.model.mode)) {
    RelationLoadResult rel = load_relations(*c.relations, d.market.symbols());
    for (const auto& w : rel.warnings) err << "warning: " << w << "\n";
    d.graph = make_graph_context(rel.tensor, c.model);
  }
  d.split = split_for(c, d.market.n_labeled_days());
  return d;
}

ojson history_json(const TrainHistory& h) {
  ojson rows = ojson::array();
  for (const EpochRecord& r : h.epochs) {
    ojson row;
    row["epoch"] = r.epoch;
    row["train_loss"] = r.train_loss;
    row["val_mse"] = r.val_mse;
    row["val_mrr"] = r.val_mrr;
    row["val_irr"] = r.val_irr;
    rows.push_back(row);
  }
  return rows;
}

ojson manifest_json(const RunConfig& c, const LoadedData& d, const TrainHistory& h) {
  ojson m;
  m["config"] = config_json(c);
  m["seed"] = c.model.seed;
  m["symbols"] = d.market.symbols();
  m["split"] = {{"train", range_json(d.split.train)}, {"val", range_json(d.split.val)},
                {"test", range_json(d.split.test)}};
  m["epochs"] = history_json(h);
  m["selected_epoch"] = h.selected_epoch;
  m["validation"] = {{"mse", h.selected().val_mse}, {"mrr", h.selected().val_mrr}, {"irr", h.selected().val_irr}};
  m["checkpoint"] = kCheckpointName;
  return m;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

EpochCallback progress(std::ostream& err, bool quiet) {
  if (quiet) return {};
  return [&err](const EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3zu  loss %.6g  val mse %.6g  mrr %.4f  irr %.4f\n", r.epoch,
                  r.train_loss, r.val_mse, r.val_mrr, r.val_irr);
    err << line;
  };
}

int cmd_synth(const SynthOptions& o, const fs::path& out_dir, bool force, std::ostream& out) {
  if (o.n_stocks == 0) throw UsageError("--stocks must be at least 1");
  if (o.n_factors == 0) throw UsageError("--factors must be at least 1");
  if (o.n_days < kMinSeriesLength) throw UsageError("--days must be at least " + std::to_string(kMinSeriesLength));
  if (o.relation_density < 0.0 || o.relation_density > 1.0) throw UsageError("--density must lie in [0, 1]");
  if (fs::exists(out_dir)) {
    if (!force) throw UsageError("output directory " + out_dir.string() + " exists (use --force to overwrite)");
    fs::remove_all(out_dir / "prices");
  }
  const SyntheticMarket market = synth_market(o);
  write_synthetic_market(market, o, out_dir);
  out << "wrote " << market.prices.size() << " price series and " << market.relations.edge_count()
      << " relation edges to " << out_dir.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& config_path, bool quiet, std::ostream& out, std::ostream& err) {
  RunConfig c = load_run_config(config_path);
  apply_seed_override(c);
  check_inputs(c);
  const LoadedData d = load_data(c, err);
  prepare_out_dir(c.out_dir);
  const TrainResult r = train(d.market, d.split, d.graph ? &*d.graph : nullptr, c.model, progress(err, quiet));
  save_checkpoint(r.params, c.out_dir / kCheckpointName);
  write_text(c.out_dir / kManifestName, manifest_json(c, d, r.history).dump(2) + "\n");
  const EpochRecord& best = r.history.selected();
  out << "selected epoch " << best.epoch << ": val mse " << best.val_mse << ", mrr " << best.val_mrr << ", irr "
      << best.val_irr << "\n";
  return 0;
}

int cmd_gridsearch(const fs::path& config_path, std::size_t jobs, std::ostream& out, std::ostream& err) {
  RunConfig c = load_run_config(config_path);
  apply_seed_override(c);
  check_inputs(c);
  if (jobs == 0) throw UsageError("--jobs must be at least 1");
  const LoadedData d = load_data(c, err);
  prepare_out_dir(c.out_dir);
  const GraphContext* g = d.graph ? &*d.graph : nullptr;
  const GridResult grid = grid_search(d.market, d.split, g, c.model, c.grid, jobs);

  ojson table = ojson::array();
  for (const GridCell& cell : grid.cells) {
    ojson row;
    row["window"] = cell.config.window;
    row["units"] = cell.config.units;
    row["alpha"] = cell.config.alpha;
    row["lambda"] = cell.config.lambda;
    row["selected_epoch"] = cell.history.selected_epoch;
    row["val_mse"] = cell.history.selected().val_mse;
    row["val_mrr"] = cell.history.selected().val_mrr;
    row["val_irr"] = cell.val_irr;
    table.push_back(row);
  }
  ojson summary;
  summary["config"] = config_json(c);
  summary["cells"] = table;
  summary["best"] = grid.best;
  write_text(c.out_dir / "grid.json", summary.dump(2) + "\n");

  // Retrain the winner so its checkpoint and manifest match a plain `train`.
  RunConfig best = c;
  best.model = grid.cells[grid.best].config;
  const TrainResult r = train(d.market, d.split, g, best.model);
  save_checkpoint(r.params, c.out_dir / kCheckpointName);
  write_text(c.out_dir / kManifestName, manifest_json(best, d, r.history).dump(2) + "\n");
  out << grid.cells.size() << " configurations; best window " << best.model.window << ", units "
      << best.model.units << ", alpha " << best.model.alpha;
  if (best.model.mode == ModelMode::gbr) out << ", lambda " << best.model.lambda;
  out << " (val irr " << grid.cells[grid.best].val_irr << ")\n";
  return 0;
}

struct LoadedModel {
  RunConfig config;
  LoadedData data;
  RankModel model;
};

LoadedModel load_model(const fs::path& checkpoint, const std::optional<fs::path>& manifest_path, std::ostream& err) {
  const fs::path mpath = manifest_path ? *manifest_path : checkpoint.parent_path() / kManifestName;
  if (!fs::is_regular_file(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
  if (!fs::is_regular_file(mpath)) throw DataError("manifest not found: " + mpath.string());
  json manifest;
  try {
    manifest = json::parse(read_text(mpath));
  } catch (const json::exception& e) {
    throw DataError(mpath.string() + ": " + e.what());
  }
  if (!manifest.contains("config")) throw DataError(mpath.string() + ": missing 'config'");
  ojson cfg = manifest["config"];
  if (cfg.contains("relations") && cfg["relations"].is_null()) cfg.erase("relations");

  LoadedModel lm;
  lm.config = parse_run_config(cfg.dump());
  lm.data = load_data(lm.config, err);
  if (manifest.contains("symbols") && manifest["symbols"].get<std::vector<std::string>>() != lm.data.market.symbols()) {
    throw DataError("the price data no longer matches the universe the model was trained on");
  }
  lm.model.config = lm.config.model;
  lm.model.params = load_checkpoint(checkpoint);
  lm.model.graph = lm.data.graph;
  try {
    check_params(lm.model.params, lm.model.config, lm.data.graph ? lm.data.graph->n_types : 0);
  } catch (const ShapeError& e) {
    throw DataError(checkpoint.string() + ": " + e.what());
  }
  return lm;
}

DayRange pick_range(const DatasetSplit& split, const std::string& name) {
  if (name == "test") return split.test;
  if (name == "val") return split.val;
  if (name == "train") return split.train;
  throw UsageError("--split must be train, val or test");
}

int cmd_backtest(const fs::path& checkpoint, const std::optional<fs::path>& manifest, std::size_t k, bool oracle,
                 std::optional<fs::path> out_dir, const std::string& split, std::ostream& out, std::ostream& err) {
  if (k < 1) throw UsageError("--k must be at least 1");
  pick_range({}, split);
  const LoadedModel lm = load_model(checkpoint, manifest, err);
  const BacktestResult bt = run_backtest(lm.model, lm.data.market, pick_range(lm.data.split, split), k, oracle);
  const fs::path dir = out_dir ? *out_dir : checkpoint.parent_path();
  prepare_out_dir(dir);
  const std::string tag = "top" + std::to_string(k) + (oracle ? "_oracle" : "") + (split == "test" ? "" : "_" + split);
  write_ledger_csv(bt.ledger, dir / ("ledger_" + tag + ".csv"));
  write_curve_csv(bt.ledger, dir / ("curve_" + tag + ".csv"));
  write_text(dir / ("report_" + tag + ".json"), report_json(bt.report));
  out << report_json(bt.report);
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const std::optional<fs::path>& manifest, const std::string& split,
             std::ostream& out, std::ostream& err) {
  pick_range({}, split);
  const LoadedModel lm = load_model(checkpoint, manifest, err);
  const BacktestResult bt = run_backtest(lm.model, lm.data.market, pick_range(lm.data.split, split), 1);
  out << report_json(bt.report);
  return 0;
}

int cmd_gradcheck(const GradSuiteOptions& o, std::ostream& out) {
  if (o.n_stocks < 2 || o.window == 0 || o.units == 0 || o.n_types == 0 || o.seeds == 0) {
    throw UsageError("gradcheck needs --stocks >= 2 and positive --window, --units, --types, --seeds");
  }
  const GradSuiteReport report = run_gradient_suite(o);
  out << format_report(report);
  return report.passed ? 0 : 3;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.contains(key)) throw UsageError("unknown config key '" + key + "'");
  }
  RunConfig c;
  RankModelConfig& m = c.model;
  if (!j.contains("prices")) throw UsageError("config needs 'prices' (directory of price CSVs)");
  c.prices = resolve(base_dir, get_as<std::string>(j["prices"], "prices"));
  if (j.contains("relations") && !j["relations"].is_null()) {
    c.relations = resolve(base_dir, get_as<std::string>(j["relations"], "relations"));
  }
  if (!j.contains("out_dir")) throw UsageError("config needs 'out_dir'");
  c.out_dir = resolve(base_dir, get_as<std::string>(j["out_dir"], "out_dir"));
  if (j.contains("mode")) m.mode = parse_mode(get_as<std::string>(j["mode"], "mode"));
  if (j.contains("window")) m.window = get_count(j["window"], "window");
  if (j.contains("units")) m.units = get_count(j["units"], "units");
  if (j.contains("alpha")) m.alpha = get_number(j["alpha"], "alpha");
  if (j.contains("lambda")) m.lambda = get_number(j["lambda"], "lambda");
  if (j.contains("epochs")) m.epochs = get_count(j["epochs"], "epochs");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw UsageError("config key 'seed' must be a non-negative integer");
    m.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("lr")) m.lr = get_number(j["lr"], "lr");
  if (j.contains("loss_unnormalized")) m.loss_unnormalized = get_as<bool>(j["loss_unnormalized"], "loss_unnormalized");
  if (j.contains("implicit_divide_by_degree")) {
    m.implicit_divide_by_degree = get_as<bool>(j["implicit_divide_by_degree"], "implicit_divide_by_degree");
  }
  if (j.contains("gcn_self_loops")) m.gcn_self_loops = get_as<bool>(j["gcn_self_loops"], "gcn_self_loops");
  if (j.contains("train_fraction")) c.train_fraction = get_number(j["train_fraction"], "train_fraction");
  if (j.contains("val_fraction")) c.val_fraction = get_number(j["val_fraction"], "val_fraction");
  if (j.contains("split_days")) {
    const json& s = j["split_days"];
    if (!s.is_array() || s.size() != 2) throw UsageError("'split_days' must be [train_end, val_end]");
    c.split_days = {get_count(s[0], "split_days"), get_count(s[1], "split_days")};
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) throw UsageError("'grid' must be an object");
    for (const auto& [key, _] : g.items()) {
      if (!kGridKeys.contains(key)) throw UsageError("unknown grid key '" + key + "'");
    }
    auto counts = [&](const char* key) {
      std::vector<std::size_t> v;
      if (g.contains(key)) {
        if (!g[key].is_array() || g[key].empty()) throw UsageError(std::string("grid '") + key + "' must be a nonempty list");
        for (const json& x : g[key]) {
          v.push_back(get_count(x, key));
          if (v.back() == 0) throw UsageError(std::string("grid '") + key + "' values must be positive");
        }
      }
      return v;
    };
    auto numbers = [&](const char* key) {
      std::vector<double> v;
      if (g.contains(key)) {
        if (!g[key].is_array() || g[key].empty()) throw UsageError(std::string("grid '") + key + "' must be a nonempty list");
        for (const json& x : g[key]) {
          v.push_back(get_number(x, key));
          if (!(v.back() >= 0.0)) throw UsageError(std::string("grid '") + key + "' values must be >= 0");
        }
      }
      return v;
    };
    c.grid.windows = counts("window");
    c.grid.units = counts("units");
    c.grid.alphas = numbers("alpha");
    c.grid.lambdas = numbers("lambda");
  }
  validate(m);
  if (!(c.train_fraction > 0.0) || !(c.val_fraction > 0.0) || !(c.train_fraction + c.val_fraction < 1.0)) {
    throw UsageError("train_fraction and val_fraction must be positive with a sum below 1");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::absolute(path).parent_path());
}

void apply_seed_override(RunConfig& config) {
  const char* env = std::getenv("RELRANK_SEED");
  if (!env || !*env) return;
  std::uint64_t seed = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("RELRANK_SEED must be a non-negative integer, got '" + std::string(s) + "'");
  }
  config.model.seed = seed;
}

DatasetSplit split_for(const RunConfig& c, std::size_t n) {
  std::size_t b1, b2;
  if (c.split_days) {
    std::tie(b1, b2) = *c.split_days;
  } else {
    b1 = static_cast<std::size_t>(static_cast<double>(n) * c.train_fraction);
    b2 = static_cast<std::size_t>(static_cast<double>(n) * (c.train_fraction + c.val_fraction));
  }
  if (!(0 < b1 && b1 < b2 && b2 < n)) {
    throw DataError("cannot split " + std::to_string(n) + " labeled days at " + std::to_string(b1) + " / " +
                    std::to_string(b2));
  }
  return chronological_split(n, b1, b2);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relational stock ranking: data synthesis, training, grid search and back-testing"};
  app.require_subcommand(1);

  SynthOptions so;
  std::string synth_out;
  bool force = false;
  auto* synth = app.add_subcommand("synth", "Generate a planted-factor synthetic market");
  synth->add_option("--stocks", so.n_stocks, "Number of stocks")->capture_default_str();
  synth->add_option("--days", so.n_days, "Number of trading days")->capture_default_str();
  synth->add_option("--factors", so.n_factors, "Number of latent factors")->capture_default_str();
  synth->add_option("--density", so.relation_density, "Probability of a random link per stock pair")
      ->capture_default_str();
  synth->add_option("--noise", so.noise_scale, "Idiosyncratic daily log-return std")->capture_default_str();
  synth->add_option("--persistence", so.factor_persistence, "AR(1) coefficient of factor returns")
      ->capture_default_str();
  synth->add_option("--volatility", so.factor_volatility, "Factor innovation std")->capture_default_str();
  synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_flag("--force", force, "Overwrite an existing output directory");

  std::string config_path;
  bool quiet = false;
  auto* trn = app.add_subcommand("train", "Train one model from a config file");
  trn->add_option("--config", config_path, "Run configuration (JSON)")->required();
  trn->add_flag("--quiet", quiet, "Suppress per-epoch progress");

  std::size_t jobs = 1;
  auto* grid = app.add_subcommand("gridsearch", "Grid search over window, units, alpha (and lambda for gbr)");
  grid->add_option("--config", config_path, "Run configuration (JSON)")->required();
  grid->add_option("--jobs", jobs, "Parallel training jobs")->capture_default_str();

  std::string checkpoint, manifest, bt_out, split = "test";
  int k = 1;
  bool oracle = false;
  auto* bt = app.add_subcommand("backtest", "Top-k daily buy-hold-sell simulation");
  bt->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  bt->add_option("--manifest", manifest, "Run manifest (default: manifest.json next to the checkpoint)");
  bt->add_option("--k", k, "Number of stocks bought per day")->capture_default_str();
  bt->add_flag("--oracle", oracle, "Use realized returns as scores (perfect foresight)");
  bt->add_option("--out", bt_out, "Output directory (default: checkpoint directory)");
  bt->add_option("--split", split, "train, val or test")->capture_default_str();

  GradSuiteOptions go;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every model mode");
  gc->add_option("--stocks", go.n_stocks)->capture_default_str();
  gc->add_option("--window", go.window)->capture_default_str();
  gc->add_option("--units", go.units)->capture_default_str();
  gc->add_option("--types", go.n_types)->capture_default_str();
  gc->add_option("--seeds", go.seeds, "Number of random instances per mode")->capture_default_str();
  gc->add_option("--seed", go.base_seed, "First seed")->capture_default_str();
  gc->add_option("--tolerance", go.tolerance)->capture_default_str();
  gc->add_flag("--corrupt", go.corrupt, "Perturb one analytic gradient (harness self-test)");

  auto* ev = app.add_subcommand("eval", "Report MSE/MRR/IRR of a checkpoint on one split");
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  ev->add_option("--manifest", manifest, "Run manifest (default: manifest.json next to the checkpoint)");
  ev->add_option("--split", split, "train, val or test")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
  try {
    if (*synth) return cmd_synth(so, synth_out, force, out);
    if (*trn) return cmd_train(config_path, quiet, out, err);
    if (*grid) return cmd_gridsearch(config_path, jobs, out, err);
    if (*bt) {
      if (k < 1) throw UsageError("--k must be at least 1");
      return cmd_backtest(checkpoint, opt_path(manifest), static_cast<std::size_t>(k), oracle, opt_path(bt_out),
                          split, out, err);
    }
    if (*gc) return cmd_gradcheck(go, out);
    if (*ev) return cmd_eval(checkpoint, opt_path(manifest), split, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace relrank
