#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "error.hpp"
#include "io_util.hpp"
#include "rng.hpp"
#include "sbm.hpp"
#include "stats.hpp"

namespace netate {

namespace {

using nlohmann::json;

// ---- strict config readers -------------------------------------------------

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown config key " + where + "." + key);
  }
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(where + " must be a nonnegative integer");
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + " must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + " must be a string");
  return v.get<std::string>();
}

const json* get(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

void parse_graph(const json& j, GraphSpec& spec) {
  check_keys(j, "graph", {"path", "format", "sbm", "save"});
  if (const json* v = get(j, "path")) spec.path = as_string(*v, "graph.path");
  if (const json* v = get(j, "format"))
    spec.format = edge_list_format_from_string(as_string(*v, "graph.format"));
  if (const json* v = get(j, "save")) spec.save = as_bool(*v, "graph.save");
  if (const json* v = get(j, "sbm")) {
    check_keys(*v, "graph.sbm", {"block_sizes", "within_prob", "between_prob"});
    spec.has_sbm = true;
    const json* sizes = get(*v, "block_sizes");
    if (!sizes || !sizes->is_array() || sizes->empty())
      throw ConfigError("graph.sbm.block_sizes must be a non-empty array");
    for (const auto& s : *sizes) {
      const std::uint64_t size = as_u64(s, "graph.sbm.block_sizes[]");
      if (size > UINT32_MAX) throw ConfigError("graph.sbm.block_sizes[] value too large");
      spec.sbm_block_sizes.push_back(static_cast<std::uint32_t>(size));
    }
    if (const json* w = get(*v, "within_prob"))
      spec.sbm_within_prob = as_double(*w, "graph.sbm.within_prob");
    if (const json* b = get(*v, "between_prob"))
      spec.sbm_between_prob = as_double(*b, "graph.sbm.between_prob");
  }
  if (!spec.path.empty() && spec.has_sbm)
    throw ConfigError("graph.path and graph.sbm are mutually exclusive");
}

void parse_simulation(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "simulation",
             {"confounder_column", "propensity_levels", "beta", "exogeneity_p", "quantile_bins",
              "from_propensities", "dataset"});
  auto& sim = cfg.simulation;
  if (const json* v = get(j, "confounder_column"))
    sim.confounder_column = as_string(*v, "simulation.confounder_column");
  if (const json* v = get(j, "propensity_levels")) {
    if (!v->is_array() || v->empty())
      throw ConfigError("simulation.propensity_levels must be a non-empty array");
    sim.propensity_levels.clear();
    for (const auto& g : *v)
      sim.propensity_levels.push_back(as_double(g, "simulation.propensity_levels[]"));
  }
  if (const json* v = get(j, "beta")) sim.beta = as_double(*v, "simulation.beta");
  if (const json* v = get(j, "exogeneity_p"))
    sim.exogeneity_p = as_double(*v, "simulation.exogeneity_p");
  if (const json* v = get(j, "quantile_bins"))
    sim.quantile_bins = static_cast<std::uint32_t>(as_u64(*v, "simulation.quantile_bins"));
  if (const json* v = get(j, "from_propensities"))
    cfg.simulation_from_propensities = as_string(*v, "simulation.from_propensities");
  if (const json* v = get(j, "dataset")) cfg.simulation_dataset = as_string(*v, "simulation.dataset");
  if (!cfg.simulation_dataset.empty() && !cfg.simulation_from_propensities.empty())
    throw ConfigError("simulation.dataset and simulation.from_propensities are mutually exclusive");
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"dimension", "learning_rate", "step_count", "pretrain_steps", "walk_edges",
              "negatives_per_positive", "w_edge", "w_outcome", "w_treatment", "restart_prob",
              "degree_biased_negatives"});
  if (const json* v = get(j, "dimension"))
    t.dimension = static_cast<std::uint32_t>(as_u64(*v, "train.dimension"));
  if (const json* v = get(j, "learning_rate")) t.learning_rate = as_double(*v, "train.learning_rate");
  if (const json* v = get(j, "step_count")) t.step_count = as_u64(*v, "train.step_count");
  if (const json* v = get(j, "pretrain_steps")) t.pretrain_steps = as_u64(*v, "train.pretrain_steps");
  if (const json* v = get(j, "walk_edges")) t.walk_edges = as_u64(*v, "train.walk_edges");
  if (const json* v = get(j, "negatives_per_positive"))
    t.negatives_per_positive =
        static_cast<std::uint32_t>(as_u64(*v, "train.negatives_per_positive"));
  if (const json* v = get(j, "w_edge")) t.w_edge = as_double(*v, "train.w_edge");
  if (const json* v = get(j, "w_outcome")) t.w_outcome = as_double(*v, "train.w_outcome");
  if (const json* v = get(j, "w_treatment")) t.w_treatment = as_double(*v, "train.w_treatment");
  if (const json* v = get(j, "restart_prob")) t.restart_prob = as_double(*v, "train.restart_prob");
  if (const json* v = get(j, "degree_biased_negatives"))
    t.degree_biased_negatives = as_bool(*v, "train.degree_biased_negatives");
}

void parse_crossfit(const json& j, CrossfitSpec& c) {
  check_keys(j, "crossfit", {"k", "stratify", "oracle", "clip_epsilon", "nuisance_path"});
  if (const json* v = get(j, "k")) c.k = static_cast<std::uint32_t>(as_u64(*v, "crossfit.k"));
  if (const json* v = get(j, "stratify")) c.stratify = as_bool(*v, "crossfit.stratify");
  if (const json* v = get(j, "oracle")) c.oracle = as_bool(*v, "crossfit.oracle");
  if (const json* v = get(j, "clip_epsilon")) {
    c.clip_epsilon = as_double(*v, "crossfit.clip_epsilon");
    if (!(c.clip_epsilon >= 0.0 && c.clip_epsilon < 0.5))
      throw ConfigError("crossfit.clip_epsilon must be in [0, 0.5)");
  }
  if (const json* v = get(j, "nuisance_path")) c.nuisance_path = as_string(*v, "crossfit.nuisance_path");
}

void parse_estimate(const json& j, EstimateSpec& e) {
  check_keys(j, "estimate", {"estimators", "baselines", "level", "checkpoint"});
  if (const json* v = get(j, "estimators")) {
    if (!v->is_array() || v->empty())
      throw ConfigError("estimate.estimators must be a non-empty array");
    e.estimators.clear();
    for (const auto& s : *v)
      e.estimators.push_back(estimator_from_string(as_string(s, "estimate.estimators[]")));
  }
  if (const json* v = get(j, "baselines")) {
    if (!v->is_array()) throw ConfigError("estimate.baselines must be an array");
    e.baselines.clear();
    for (const auto& s : *v) {
      const std::string b = as_string(s, "estimate.baselines[]");
      if (b != "unadjusted" && b != "two_stage")
        throw ConfigError("unknown baseline '" + b + "' (expected unadjusted or two_stage)");
      e.baselines.push_back(b);
    }
  }
  if (const json* v = get(j, "level")) {
    e.level = as_double(*v, "estimate.level");
    if (!(e.level > 0.0 && e.level < 1.0)) throw ConfigError("estimate.level must be in (0, 1)");
  }
  if (const json* v = get(j, "checkpoint")) e.checkpoint = as_string(*v, "estimate.checkpoint");
}

void parse_sweep(const json& j, SweepSpec& s) {
  check_keys(j, "sweep", {"grid", "base_nuisance"});
  if (const json* v = get(j, "grid")) {
    if (!v->is_array()) throw ConfigError("sweep.grid must be an array");
    s.grid.clear();
    for (const auto& p : *v) s.grid.push_back(as_double(p, "sweep.grid[]"));
  }
  if (const json* v = get(j, "base_nuisance")) s.base_nuisance = as_string(*v, "sweep.base_nuisance");
}

void parse_diagnose(const json& j, DiagnoseSpec& d) {
  check_keys(j, "diagnose", {"checkpoint", "pair_count"});
  if (const json* v = get(j, "checkpoint")) d.checkpoint = as_string(*v, "diagnose.checkpoint");
  if (const json* v = get(j, "pair_count")) d.pair_count = as_u64(*v, "diagnose.pair_count");
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"seed", "out_dir", "threads", "graph", "attributes", "simulation", "train",
              "crossfit", "estimate", "sweep", "diagnose"});
  ExperimentConfig cfg;
  if (const json* v = get(j, "seed")) cfg.seed = as_u64(*v, "seed");
  if (const json* v = get(j, "out_dir")) cfg.out_dir = as_string(*v, "out_dir");
  if (const json* v = get(j, "threads")) {
    cfg.threads = static_cast<std::uint32_t>(as_u64(*v, "threads"));
    if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  }
  if (const json* v = get(j, "graph")) parse_graph(*v, cfg.graph);
  if (const json* v = get(j, "attributes")) {
    check_keys(*v, "attributes", {"path"});
    if (const json* p = get(*v, "path")) cfg.attributes_path = as_string(*p, "attributes.path");
  }
  if (const json* v = get(j, "simulation")) parse_simulation(*v, cfg);
  if (const json* v = get(j, "train")) parse_train(*v, cfg.train);
  if (const json* v = get(j, "crossfit")) parse_crossfit(*v, cfg.crossfit);
  if (const json* v = get(j, "estimate")) parse_estimate(*v, cfg.estimate);
  if (const json* v = get(j, "sweep")) parse_sweep(*v, cfg.sweep);
  if (const json* v = get(j, "diagnose")) parse_diagnose(*v, cfg.diagnose);
  if (cfg.graph.has_sbm && !cfg.attributes_path.empty())
    throw ConfigError("graph.sbm already provides attributes; attributes.path not allowed");
  return cfg;
}

json effective_config(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir.string();
  j["threads"] = cfg.threads;
  j["graph"]["path"] = cfg.graph.path;
  j["graph"]["format"] = cfg.graph.format == EdgeListFormat::tsv ? "tsv" : "csv";
  j["graph"]["save"] = cfg.graph.save;
  if (cfg.graph.has_sbm) {
    j["graph"]["sbm"]["block_sizes"] = cfg.graph.sbm_block_sizes;
    j["graph"]["sbm"]["within_prob"] = cfg.graph.sbm_within_prob;
    j["graph"]["sbm"]["between_prob"] = cfg.graph.sbm_between_prob;
  }
  j["attributes"]["path"] = cfg.attributes_path;
  j["simulation"]["confounder_column"] = cfg.simulation.confounder_column;
  j["simulation"]["propensity_levels"] = cfg.simulation.propensity_levels;
  j["simulation"]["beta"] = cfg.simulation.beta;
  j["simulation"]["exogeneity_p"] = cfg.simulation.exogeneity_p;
  j["simulation"]["quantile_bins"] = cfg.simulation.quantile_bins;
  j["simulation"]["from_propensities"] = cfg.simulation_from_propensities;
  j["simulation"]["dataset"] = cfg.simulation_dataset;
  j["train"]["dimension"] = cfg.train.dimension;
  j["train"]["learning_rate"] = cfg.train.learning_rate;
  j["train"]["step_count"] = cfg.train.step_count;
  j["train"]["pretrain_steps"] = cfg.train.pretrain_steps;
  j["train"]["walk_edges"] = cfg.train.walk_edges;
  j["train"]["negatives_per_positive"] = cfg.train.negatives_per_positive;
  j["train"]["w_edge"] = cfg.train.w_edge;
  j["train"]["w_outcome"] = cfg.train.w_outcome;
  j["train"]["w_treatment"] = cfg.train.w_treatment;
  j["train"]["restart_prob"] = cfg.train.restart_prob;
  j["train"]["degree_biased_negatives"] = cfg.train.degree_biased_negatives;
  j["crossfit"]["k"] = cfg.crossfit.k;
  j["crossfit"]["stratify"] = cfg.crossfit.stratify;
  j["crossfit"]["oracle"] = cfg.crossfit.oracle;
  j["crossfit"]["clip_epsilon"] = cfg.crossfit.clip_epsilon;
  j["crossfit"]["nuisance_path"] = cfg.crossfit.nuisance_path;
  json estimators = json::array();
  for (const auto e : cfg.estimate.estimators) estimators.push_back(to_string(e));
  j["estimate"]["estimators"] = estimators;
  j["estimate"]["baselines"] = cfg.estimate.baselines;
  j["estimate"]["level"] = cfg.estimate.level;
  j["estimate"]["checkpoint"] = cfg.estimate.checkpoint;
  j["sweep"]["grid"] = cfg.sweep.grid;
  j["sweep"]["base_nuisance"] = cfg.sweep.base_nuisance;
  j["diagnose"]["checkpoint"] = cfg.diagnose.checkpoint;
  j["diagnose"]["pair_count"] = cfg.diagnose.pair_count;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  return hex64(fnv1a64(effective_config(cfg).dump()));
}

namespace {

// ---- shared pipeline plumbing ----------------------------------------------

struct PipelineInputs {
  bool has_graph = false;
  Graph graph;
  std::vector<std::uint64_t> external_ids;
  bool has_attrs = false;
  AttributeTable attrs;
  std::uint64_t dropped_self_loops = 0;
  std::uint64_t dropped_duplicates = 0;
  std::uint64_t skipped_attr_rows = 0;
};

PipelineInputs acquire_graph(const ExperimentConfig& cfg, bool need_graph, bool need_attrs) {
  PipelineInputs in;
  if (!cfg.graph.path.empty()) {
    EdgeListLoadResult loaded = load_edge_list(cfg.graph.path, cfg.graph.format);
    in.graph = std::move(loaded.graph);
    in.external_ids = std::move(loaded.external_ids);
    in.dropped_self_loops = loaded.dropped_self_loops;
    in.dropped_duplicates = loaded.dropped_duplicates;
    in.has_graph = true;
    if (!cfg.attributes_path.empty()) {
      in.attrs = AttributeTable::load_csv(cfg.attributes_path, in.external_ids,
                                          &in.skipped_attr_rows);
      in.has_attrs = true;
    }
  } else if (cfg.graph.has_sbm) {
    SbmResult sbm = generate_sbm_graph(cfg.graph.sbm_block_sizes, cfg.graph.sbm_within_prob,
                                       cfg.graph.sbm_between_prob,
                                       derive_seed(cfg.seed, kSeedSbm));
    in.graph = std::move(sbm.graph);
    in.attrs = std::move(sbm.attrs);
    in.has_graph = true;
    in.has_attrs = true;
  }
  if (need_graph && !in.has_graph)
    throw ConfigError("no graph configured (set graph.path or graph.sbm)");
  if (need_attrs && !in.has_attrs)
    throw ConfigError("no attributes configured (set attributes.path or graph.sbm)");
  return in;
}

SimulatedDataset acquire_dataset(const ExperimentConfig& cfg, const PipelineInputs& in,
                                 const NuisanceTable* sim_base) {
  SimulatedDataset data;
  if (!cfg.simulation_dataset.empty()) {
    data = load_dataset(cfg.simulation_dataset);
  } else if (sim_base != nullptr || !cfg.simulation_from_propensities.empty()) {
    NuisanceTable loaded;
    const NuisanceTable* base = sim_base;
    if (!base) {
      loaded = load_nuisance_table(cfg.simulation_from_propensities);
      base = &loaded;
    }
    // Mirrors simulate_treatment_outcome's internal seeding so runs driven by
    // a propensity table line up with attribute-driven ones.
    const std::uint64_t sim_seed = derive_seed(cfg.seed, kSeedSimulate);
    std::vector<double> g = base->g;
    if (cfg.simulation.exogeneity_p > 0.0)
      g = mix_exogenous(g, cfg.simulation.exogeneity_p, derive_seed(sim_seed, 1));
    data = simulate_from_propensities(g, cfg.simulation.beta, derive_seed(sim_seed, 2));
  } else {
    if (!in.has_attrs)
      throw ConfigError("simulation needs attributes (or simulation.dataset / "
                        "simulation.from_propensities)");
    SimulationConfig sc = cfg.simulation;
    sc.rng_seed = derive_seed(cfg.seed, kSeedSimulate);
    data = simulate_treatment_outcome(in.attrs, sc);
  }
  if (in.has_graph && data.size() != in.graph.node_count())
    throw DataError("dataset has " + std::to_string(data.size()) + " units but the graph has " +
                    std::to_string(in.graph.node_count()) + " nodes");
  return data;
}

UnitTable units_from(const SimulatedDataset& data, const std::vector<std::uint32_t>& fold_of) {
  UnitTable units;
  units.treatment = data.treatment;
  units.outcome = data.outcome;
  units.fold = fold_of.empty() ? std::vector<std::uint32_t>(data.size(), 0) : fold_of;
  units.has_label.assign(data.size(), 1);
  units.validate();
  return units;
}

std::string file_comment(const ExperimentConfig& cfg, const std::string& command) {
  return "command=" + command + " config_hash=" + config_hash(cfg) +
         " seed=" + std::to_string(cfg.seed);
}

json base_manifest(const ExperimentConfig& cfg, const std::string& command) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["config"] = effective_config(cfg);
  return m;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command, const json& m) {
  auto out = open_output(cfg.out_dir / ("manifest_" + command + ".json"));
  out << m.dump(2) << '\n';
  if (!out) throw DataError("failed writing manifest for " + command);
}

void note_graph_stats(json& m, const PipelineInputs& in) {
  if (!in.has_graph) return;
  m["graph"]["node_count"] = in.graph.node_count();
  m["graph"]["edge_count"] = in.graph.edge_count();
  m["graph"]["isolated_nodes"] = in.graph.isolated_count();
  if (in.dropped_self_loops) m["graph"]["dropped_self_loops"] = in.dropped_self_loops;
  if (in.dropped_duplicates) m["graph"]["dropped_duplicates"] = in.dropped_duplicates;
  if (in.skipped_attr_rows) m["graph"]["skipped_attribute_rows"] = in.skipped_attr_rows;
}

void maybe_save_generated_graph(const ExperimentConfig& cfg, const PipelineInputs& in, json& m) {
  if (!cfg.graph.save || !cfg.graph.has_sbm || !in.has_graph) return;
  const auto edges_path = cfg.out_dir / "edges.tsv";
  const auto attrs_path = cfg.out_dir / "attributes.csv";
  save_edge_list(in.graph, edges_path, EdgeListFormat::tsv);
  in.attrs.save_csv(attrs_path);
  m["files"]["edges"] = edges_path.string();
  m["files"]["attributes"] = attrs_path.string();
}

std::string summary_label(const EstimateReport& r) {
  return r.variant == "two_stage" ? "two_stage" : to_string(r.estimator);
}

struct EstimateOutcome {
  PipelineInputs inputs;
  SimulatedDataset data;
  std::vector<EstimateReport> reports;
};

bool has_baseline(const ExperimentConfig& cfg, const std::string& name) {
  return std::find(cfg.estimate.baselines.begin(), cfg.estimate.baselines.end(), name) !=
         cfg.estimate.baselines.end();
}

EstimateOutcome estimate_impl(const ExperimentConfig& cfg, const NuisanceTable* sim_base) {
  if (cfg.estimate.estimators.empty())
    throw ConfigError("estimate.estimators must not be empty");
  const bool from_file = !cfg.crossfit.nuisance_path.empty();
  const bool two_stage = has_baseline(cfg, "two_stage");
  const bool dataset_from_attrs = cfg.simulation_dataset.empty() &&
                                  cfg.simulation_from_propensities.empty() && sim_base == nullptr;
  const bool needs_training = !from_file && !cfg.crossfit.oracle;
  const bool need_graph = needs_training || two_stage || dataset_from_attrs;

  EstimateOutcome out;
  out.inputs = acquire_graph(cfg, need_graph, dataset_from_attrs);
  out.data = acquire_dataset(cfg, out.inputs, sim_base);
  const std::size_t n = out.data.size();

  NuisanceTable table;
  FoldAssignment folds;
  if (from_file) {
    if (cfg.crossfit.oracle)
      throw ConfigError("crossfit.oracle and crossfit.nuisance_path are mutually exclusive");
    table = load_nuisance_table(cfg.crossfit.nuisance_path);
    if (table.size() != n)
      throw DataError("nuisance table has " + std::to_string(table.size()) + " rows but the "
                      "dataset has " + std::to_string(n) + " units");
    folds.fold_of = table.fold;
    folds.k = table.fold_count();
    folds.rng_seed = 0;
  } else {
    const std::uint64_t fold_seed = derive_seed(cfg.seed, kSeedFolds);
    folds = cfg.crossfit.stratify
                ? make_stratified_folds(out.data.treatment, cfg.crossfit.k, fold_seed)
                : make_folds(n, cfg.crossfit.k, fold_seed);
    if (cfg.crossfit.oracle) {
      table = oracle_nuisances(out.data.true_propensity, cfg.simulation.beta, folds);
    } else {
      TrainConfig tc = cfg.train;
      tc.rng_seed = derive_seed(cfg.seed, kSeedTrain);
      table = crossfit_nuisances(out.inputs.graph, units_from(out.data, folds.fold_of), folds,
                                 tc, {cfg.threads});
    }
  }

  if (cfg.crossfit.clip_epsilon > 0.0)
    table = clip_propensities(table, cfg.crossfit.clip_epsilon);

  const UnitTable units = units_from(out.data, table.fold);
  const std::string variant = cfg.crossfit.oracle ? "oracle" : "default";

  // estimate_* report at the default 95% level; rescale when configured.
  const auto apply_level = [&cfg](EstimateReport& r) {
    if (cfg.estimate.level == r.level) return;
    const double z = normal_quantile(0.5 + cfg.estimate.level / 2.0);
    const double half = z * r.if_sigma / std::sqrt(static_cast<double>(r.n));
    r.level = cfg.estimate.level;
    r.ci_low = r.psi_hat - half;
    r.ci_high = r.psi_hat + half;
  };

  for (const Estimator e : cfg.estimate.estimators) {
    EstimateReport r = estimate(e, table, units);
    apply_level(r);
    if (e != Estimator::unadjusted) r.variant = variant;
    out.reports.push_back(std::move(r));
  }

  for (const std::string& b : cfg.estimate.baselines) {
    if (b == "unadjusted") {
      EstimateReport r = estimate_unadjusted(units);
      apply_level(r);
      out.reports.push_back(std::move(r));
    } else {  // two_stage
      EmbeddingModel base_model;
      if (!cfg.estimate.checkpoint.empty()) {
        base_model = load_model(cfg.estimate.checkpoint);
        if (base_model.node_count() != n)
          throw DataError("two_stage checkpoint covers " +
                          std::to_string(base_model.node_count()) + " nodes, expected " +
                          std::to_string(n));
      } else {
        TrainConfig bc = cfg.train;
        bc.w_outcome = 0.0;
        bc.w_treatment = 0.0;
        bc.rng_seed = derive_seed(cfg.seed, kSeedTrainBase);
        base_model = train(out.inputs.graph, units, bc);
      }
      TrainConfig hc = cfg.train;
      hc.rng_seed = derive_seed(cfg.seed, kSeedTrain);
      NuisanceTable frozen =
          crossfit_heads_on_frozen(out.inputs.graph, units, folds, hc, base_model, {cfg.threads});
      if (cfg.crossfit.clip_epsilon > 0.0)
        frozen = clip_propensities(frozen, cfg.crossfit.clip_epsilon);
      EstimateReport r = estimate_aiptw(frozen, units);
      r.variant = "two_stage";
      apply_level(r);
      out.reports.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

json run_simulate(const ExperimentConfig& cfg) {
  if (!cfg.simulation_dataset.empty())
    throw ConfigError("simulate does not accept simulation.dataset");
  const bool from_propensities = !cfg.simulation_from_propensities.empty();
  PipelineInputs in = acquire_graph(cfg, /*need_graph=*/!from_propensities,
                                    /*need_attrs=*/!from_propensities);
  const SimulatedDataset data = acquire_dataset(cfg, in, nullptr);

  std::filesystem::create_directories(cfg.out_dir);
  const auto dataset_path = cfg.out_dir / "dataset.csv";
  save_dataset(data, dataset_path, {file_comment(cfg, "simulate")});

  json m = base_manifest(cfg, "simulate");
  m["n"] = data.size();
  m["true_ate"] = data.true_ate;
  m["beta"] = cfg.simulation.beta;
  std::uint64_t treated = 0;
  for (const auto t : data.treatment) treated += t;
  m["treated_count"] = treated;
  m["files"]["dataset"] = dataset_path.string();
  note_graph_stats(m, in);
  maybe_save_generated_graph(cfg, in, m);
  write_manifest(cfg, "simulate", m);
  return m;
}

json run_embed(const ExperimentConfig& cfg) {
  const bool needs_labels = cfg.train.w_outcome > 0.0 || cfg.train.w_treatment > 0.0;
  PipelineInputs in = acquire_graph(cfg, /*need_graph=*/true, /*need_attrs=*/false);

  UnitTable units;
  if (needs_labels) {
    const SimulatedDataset data = acquire_dataset(cfg, in, nullptr);
    units = units_from(data, {});
  } else {
    units.treatment.assign(in.graph.node_count(), 0);
    units.outcome.assign(in.graph.node_count(), 0.0);
    units.fold.assign(in.graph.node_count(), 0);
    units.has_label.assign(in.graph.node_count(), 0);
  }

  TrainConfig tc = cfg.train;
  tc.rng_seed = derive_seed(cfg.seed, kSeedTrain);
  const EmbeddingModel model = train(in.graph, units, tc);

  std::filesystem::create_directories(cfg.out_dir);
  const auto model_path = cfg.out_dir / "model.bin";
  save_model(model, model_path);

  json m = base_manifest(cfg, "embed");
  m["node_count"] = model.node_count();
  m["dimension"] = model.p;
  m["steps"] = cfg.train.pretrain_steps + cfg.train.step_count;
  m["supervised"] = needs_labels;
  m["files"]["model"] = model_path.string();
  note_graph_stats(m, in);
  maybe_save_generated_graph(cfg, in, m);
  write_manifest(cfg, "embed", m);
  return m;
}

json run_crossfit(const ExperimentConfig& cfg) {
  if (!cfg.crossfit.nuisance_path.empty())
    throw ConfigError("crossfit.nuisance_path is an estimate-time input; crossfit would have "
                      "nothing to do");
  const bool dataset_from_attrs =
      cfg.simulation_dataset.empty() && cfg.simulation_from_propensities.empty();
  const bool need_graph = !cfg.crossfit.oracle || dataset_from_attrs;
  PipelineInputs in = acquire_graph(cfg, need_graph, dataset_from_attrs);
  const SimulatedDataset data = acquire_dataset(cfg, in, nullptr);
  const std::size_t n = data.size();

  const std::uint64_t fold_seed = derive_seed(cfg.seed, kSeedFolds);
  const FoldAssignment folds =
      cfg.crossfit.stratify ? make_stratified_folds(data.treatment, cfg.crossfit.k, fold_seed)
                            : make_folds(n, cfg.crossfit.k, fold_seed);

  NuisanceTable table;
  if (cfg.crossfit.oracle) {
    table = oracle_nuisances(data.true_propensity, cfg.simulation.beta, folds);
  } else {
    TrainConfig tc = cfg.train;
    tc.rng_seed = derive_seed(cfg.seed, kSeedTrain);
    table = crossfit_nuisances(in.graph, units_from(data, folds.fold_of), folds, tc,
                               {cfg.threads});
  }

  std::filesystem::create_directories(cfg.out_dir);
  const auto table_path = cfg.out_dir / "nuisance.csv";
  save_nuisance_table(table, table_path, {file_comment(cfg, "crossfit")});

  json m = base_manifest(cfg, "crossfit");
  m["n"] = n;
  m["k"] = folds.k;
  m["oracle"] = cfg.crossfit.oracle;
  m["files"]["nuisance"] = table_path.string();
  note_graph_stats(m, in);
  maybe_save_generated_graph(cfg, in, m);
  write_manifest(cfg, "crossfit", m);
  return m;
}

json run_estimate(const ExperimentConfig& cfg) {
  EstimateOutcome outcome = estimate_impl(cfg, nullptr);
  std::filesystem::create_directories(cfg.out_dir);

  json m = base_manifest(cfg, "estimate");
  m["n"] = outcome.data.size();
  m["beta"] = cfg.simulation.beta;
  const auto summary_path = cfg.out_dir / "summary.csv";
  {
    auto out = open_output(summary_path);
    out << "# " << file_comment(cfg, "estimate") << '\n';
    out << "estimator,beta,psi_hat,fold_std,if_sigma,ci_lo,ci_hi\n";
    for (const auto& r : outcome.reports) {
      out << summary_label(r) << ',' << fmt_double(cfg.simulation.beta) << ','
          << fmt_double(r.psi_hat) << ',' << fmt_double(r.fold_std) << ','
          << fmt_double(r.if_sigma) << ',' << fmt_double(r.ci_low) << ','
          << fmt_double(r.ci_high) << '\n';
    }
    if (!out) throw DataError("failed writing summary: " + summary_path.string());
  }
  m["files"]["summary"] = summary_path.string();

  for (const auto& r : outcome.reports) {
    const std::string label = summary_label(r);
    const auto report_path = cfg.out_dir / ("report_" + label + ".json");
    auto out = open_output(report_path);
    out << report_to_json(r) << '\n';
    if (!out) throw DataError("failed writing report: " + report_path.string());
    m["files"]["report_" + label] = report_path.string();
    m["reports"][label] = {{"psi_hat", r.psi_hat},
                           {"ci", {r.ci_low, r.ci_high}},
                           {"fold_std", r.fold_std},
                           {"if_sigma", r.if_sigma},
                           {"degenerate_ci", r.degenerate_ci}};
  }
  note_graph_stats(m, outcome.inputs);
  maybe_save_generated_graph(cfg, outcome.inputs, m);
  write_manifest(cfg, "estimate", m);
  return m;
}

json run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep.grid.empty()) throw ConfigError("sweep.grid must not be empty");
  if (cfg.sweep.base_nuisance.empty())
    throw ConfigError("sweep needs sweep.base_nuisance (a nuisance table supplying the base "
                      "propensities)");
  for (const double p : cfg.sweep.grid)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sweep.grid values must be in [0, 1]");

  const NuisanceTable base = load_nuisance_table(cfg.sweep.base_nuisance);

  std::filesystem::create_directories(cfg.out_dir);
  const auto sweep_path = cfg.out_dir / "sweep.csv";
  auto out = open_output(sweep_path);
  out << "# " << file_comment(cfg, "sweep") << '\n';
  out << "p,estimator,psi_hat,ci_lo,ci_hi\n";

  json m = base_manifest(cfg, "sweep");
  json rows = json::array();
  for (std::size_t i = 0; i < cfg.sweep.grid.size(); ++i) {
    const double p = cfg.sweep.grid[i];
    ExperimentConfig sub = cfg;
    sub.seed = derive_seed(cfg.seed, kSeedSweepBase + i);
    sub.simulation.exogeneity_p = p;
    sub.simulation_from_propensities = cfg.sweep.base_nuisance;
    sub.simulation_dataset.clear();
    const EstimateOutcome outcome = estimate_impl(sub, &base);
    for (const auto& r : outcome.reports) {
      out << fmt_double(p) << ',' << summary_label(r) << ',' << fmt_double(r.psi_hat) << ','
          << fmt_double(r.ci_low) << ',' << fmt_double(r.ci_high) << '\n';
      rows.push_back({{"p", p},
                      {"estimator", summary_label(r)},
                      {"psi_hat", r.psi_hat},
                      {"ci", {r.ci_low, r.ci_high}}});
    }
  }
  if (!out) throw DataError("failed writing sweep results: " + sweep_path.string());
  out.close();

  m["rows"] = rows;
  m["files"]["sweep"] = sweep_path.string();
  write_manifest(cfg, "sweep", m);
  return m;
}

json run_diagnose(const ExperimentConfig& cfg) {
  if (cfg.diagnose.checkpoint.empty())
    throw ConfigError("diagnose needs diagnose.checkpoint (a saved model)");
  const EmbeddingModel model = load_model(cfg.diagnose.checkpoint);
  const double stat = embedding_dependence_diagnostic(model, cfg.diagnose.pair_count,
                                                      derive_seed(cfg.seed, kSeedDiagnose));
  std::filesystem::create_directories(cfg.out_dir);
  json m = base_manifest(cfg, "diagnose");
  m["node_count"] = model.node_count();
  m["dimension"] = model.p;
  m["pair_count"] = cfg.diagnose.pair_count;
  m["dependence_statistic"] = stat;
  write_manifest(cfg, "diagnose", m);
  return m;
}

json run_command(const std::string& command, const json& config) {
  const ExperimentConfig cfg = parse_config(config);
  if (command == "simulate") return run_simulate(cfg);
  if (command == "embed") return run_embed(cfg);
  if (command == "crossfit") return run_crossfit(cfg);
  if (command == "estimate") return run_estimate(cfg);
  if (command == "sweep") return run_sweep(cfg);
  if (command == "diagnose") return run_diagnose(cfg);
  throw ConfigError("unknown command '" + command +
                    "' (expected simulate, embed, crossfit, estimate, sweep, diagnose)");
}

}  // namespace netate
