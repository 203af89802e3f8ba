#include "netate.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "json.hpp"

#include "attributes.hpp"
#include "crossfit.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "graph.hpp"
#include "pipeline.hpp"
#include "sbm.hpp"
#include "simulate.hpp"
#include "units.hpp"

struct netate_graph {
  netate::Graph g;
};
struct netate_attrs {
  netate::AttributeTable t;
};
struct netate_dataset {
  netate::SimulatedDataset d;
};
struct netate_folds {
  netate::FoldAssignment f;
};
struct netate_model {
  netate::EmbeddingModel m;
};
struct netate_nuisance {
  netate::NuisanceTable t;
};
struct netate_report {
  netate::EstimateReport r;
};

namespace {

thread_local std::string t_last_error;

netate_status status_of(netate::ErrorKind kind) {
  switch (kind) {
    case netate::ErrorKind::config: return NETATE_ERR_CONFIG;
    case netate::ErrorKind::data: return NETATE_ERR_DATA;
    case netate::ErrorKind::numeric: return NETATE_ERR_NUMERIC;
    case netate::ErrorKind::invalid: return NETATE_ERR_INVALID;
  }
  return NETATE_ERR_INTERNAL;
}

template <typename F>
netate_status guarded(F&& body) noexcept {
  try {
    body();
    t_last_error.clear();
    return NETATE_OK;
  } catch (const netate::Error& e) {
    t_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    t_last_error = e.what();
    return NETATE_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return NETATE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return NETATE_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown failure";
    return NETATE_ERR_INTERNAL;
  }
}

netate_status fail_invalid(const char* message) noexcept {
  t_last_error = message;
  return NETATE_ERR_INVALID;
}

// malloc'd so callers pair it with netate_string_free / free
char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

netate::TrainConfig to_train_config(const netate_train_options& o) {
  netate::TrainConfig c;
  c.dimension = o.dimension;
  c.learning_rate = o.learning_rate;
  c.step_count = o.step_count;
  c.pretrain_steps = o.pretrain_steps;
  c.walk_edges = o.walk_edges;
  c.negatives_per_positive = o.negatives_per_positive;
  c.w_edge = o.w_edge;
  c.w_outcome = o.w_outcome;
  c.w_treatment = o.w_treatment;
  c.restart_prob = o.restart_prob;
  c.degree_biased_negatives = o.degree_biased_negatives != 0;
  c.rng_seed = o.rng_seed;
  if (o.masked_fold >= 0) c.masked_fold = static_cast<std::uint32_t>(o.masked_fold);
  c.freeze_embeddings = o.freeze_embeddings != 0;
  return c;
}

// Labeled units from a dataset; folds default to a single fold 0.
netate::UnitTable units_from(const netate::SimulatedDataset& d, const netate_folds* folds) {
  netate::UnitTable u;
  u.treatment = d.treatment;
  u.outcome = d.outcome;
  if (folds != nullptr) {
    if (folds->f.fold_of.size() != d.size())
      throw netate::InvalidArgument("fold assignment and dataset sizes differ");
    u.fold = folds->f.fold_of;
  } else {
    u.fold.assign(d.size(), 0);
  }
  u.has_label.assign(d.size(), 1);
  return u;
}

netate::SimulationConfig parse_simulation_json(const char* config_json) {
  netate::SimulationConfig cfg;
  if (config_json == nullptr) return cfg;
  const nlohmann::json j = nlohmann::json::parse(config_json);
  if (!j.is_object()) throw netate::ConfigError("simulation config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "confounder_column") {
      cfg.confounder_column = value.get<std::string>();
    } else if (key == "propensity_levels") {
      cfg.propensity_levels = value.get<std::vector<double>>();
    } else if (key == "beta") {
      cfg.beta = value.get<double>();
    } else if (key == "exogeneity_p") {
      cfg.exogeneity_p = value.get<double>();
    } else if (key == "quantile_bins") {
      cfg.quantile_bins = value.get<std::uint32_t>();
    } else if (key == "rng_seed") {
      cfg.rng_seed = value.get<std::uint64_t>();
    } else {
      throw netate::ConfigError("unknown simulation config key: " + key);
    }
  }
  return cfg;
}

}  // namespace

extern "C" {

const char* netate_version(void) { return "0.1.0"; }

const char* netate_last_error(void) { return t_last_error.c_str(); }

void netate_string_free(char* s) { std::free(s); }

netate_status netate_run(const char* command, const char* config_json, char** manifest_json) {
  if (command == nullptr) return fail_invalid("command is null");
  if (config_json == nullptr) return fail_invalid("config_json is null");
  return guarded([&] {
    const nlohmann::json cfg = nlohmann::json::parse(config_json);
    const nlohmann::json manifest = netate::run_command(command, cfg);
    if (manifest_json != nullptr) *manifest_json = dup_string(manifest.dump(2));
  });
}

/* ---- graphs and attribute tables ---------------------------------------- */

netate_status netate_graph_load(const char* path, const char* format, netate_graph** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("path and out must be non-null");
  return guarded([&] {
    const auto fmt = netate::edge_list_format_from_string(format == nullptr ? "tsv" : format);
    auto loaded = netate::load_edge_list(path, fmt);
    *out = new netate_graph{std::move(loaded.graph)};
  });
}

netate_status netate_graph_sbm(const uint32_t* block_sizes, size_t n_blocks, double within_prob,
                               double between_prob, uint64_t seed, netate_graph** graph_out,
                               netate_attrs** attrs_out) {
  if (block_sizes == nullptr || graph_out == nullptr)
    return fail_invalid("block_sizes and graph_out must be non-null");
  return guarded([&] {
    std::vector<std::uint32_t> sizes(block_sizes, block_sizes + n_blocks);
    auto result = netate::generate_sbm_graph(sizes, within_prob, between_prob, seed);
    *graph_out = new netate_graph{std::move(result.graph)};
    if (attrs_out != nullptr) *attrs_out = new netate_attrs{std::move(result.attrs)};
  });
}

netate_status netate_graph_save(const netate_graph* g, const char* path, const char* format) {
  if (g == nullptr || path == nullptr) return fail_invalid("graph and path must be non-null");
  return guarded([&] {
    const auto fmt = netate::edge_list_format_from_string(format == nullptr ? "tsv" : format);
    netate::save_edge_list(g->g, path, fmt);
  });
}

uint32_t netate_graph_node_count(const netate_graph* g) {
  return g == nullptr ? 0 : g->g.node_count();
}

uint64_t netate_graph_edge_count(const netate_graph* g) {
  return g == nullptr ? 0 : g->g.edge_count();
}

uint32_t netate_graph_degree(const netate_graph* g, uint32_t node) {
  if (g == nullptr || node >= g->g.node_count()) return 0;
  return g->g.degree(node);
}

int netate_graph_has_edge(const netate_graph* g, uint32_t a, uint32_t b) {
  if (g == nullptr || a >= g->g.node_count() || b >= g->g.node_count()) return 0;
  return g->g.has_edge(a, b) ? 1 : 0;
}

void netate_graph_free(netate_graph* g) { delete g; }

netate_status netate_attrs_load(const char* path, uint64_t node_count, netate_attrs** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("path and out must be non-null");
  return guarded([&] {
    auto table = netate::AttributeTable::load_csv(path, static_cast<std::size_t>(node_count));
    *out = new netate_attrs{std::move(table)};
  });
}

int netate_attrs_has_column(const netate_attrs* a, const char* name) {
  if (a == nullptr || name == nullptr) return 0;
  return a->t.has_column(name) ? 1 : 0;
}

void netate_attrs_free(netate_attrs* a) { delete a; }

/* ---- simulated datasets -------------------------------------------------- */

netate_status netate_simulate(const netate_attrs* attrs, const char* config_json,
                              netate_dataset** out) {
  if (attrs == nullptr || out == nullptr) return fail_invalid("attrs and out must be non-null");
  return guarded([&] {
    const auto cfg = parse_simulation_json(config_json);
    *out = new netate_dataset{netate::simulate_treatment_outcome(attrs->t, cfg)};
  });
}

netate_status netate_simulate_from_propensities(const double* g, size_t n, double beta,
                                                uint64_t seed, netate_dataset** out) {
  if (g == nullptr || out == nullptr) return fail_invalid("g and out must be non-null");
  return guarded([&] {
    std::vector<double> props(g, g + n);
    *out = new netate_dataset{netate::simulate_from_propensities(props, beta, seed)};
  });
}

netate_status netate_mix_exogenous(const double* base, size_t n, double p, uint64_t seed,
                                   double* out) {
  if (base == nullptr || out == nullptr) return fail_invalid("base and out must be non-null");
  return guarded([&] {
    std::vector<double> input(base, base + n);
    const auto mixed = netate::mix_exogenous(input, p, seed);
    std::memcpy(out, mixed.data(), n * sizeof(double));
  });
}

netate_status netate_dataset_load(const char* path, netate_dataset** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("path and out must be non-null");
  return guarded([&] { *out = new netate_dataset{netate::load_dataset(path)}; });
}

netate_status netate_dataset_save(const netate_dataset* d, const char* path) {
  if (d == nullptr || path == nullptr) return fail_invalid("dataset and path must be non-null");
  return guarded([&] { netate::save_dataset(d->d, path); });
}

size_t netate_dataset_size(const netate_dataset* d) { return d == nullptr ? 0 : d->d.size(); }

netate_status netate_dataset_columns(const netate_dataset* d, uint8_t* treatment, double* outcome,
                                     double* true_g) {
  if (d == nullptr) return fail_invalid("dataset is null");
  const std::size_t n = d->d.size();
  if (treatment != nullptr) std::memcpy(treatment, d->d.treatment.data(), n * sizeof(uint8_t));
  if (outcome != nullptr) std::memcpy(outcome, d->d.outcome.data(), n * sizeof(double));
  if (true_g != nullptr) std::memcpy(true_g, d->d.true_propensity.data(), n * sizeof(double));
  t_last_error.clear();
  return NETATE_OK;
}

void netate_dataset_free(netate_dataset* d) { delete d; }

/* ---- fold assignments ---------------------------------------------------- */

netate_status netate_folds_make(size_t n, uint32_t k, uint64_t seed, netate_folds** out) {
  if (out == nullptr) return fail_invalid("out is null");
  return guarded([&] { *out = new netate_folds{netate::make_folds(n, k, seed)}; });
}

netate_status netate_folds_make_stratified(const netate_dataset* d, uint32_t k, uint64_t seed,
                                           netate_folds** out) {
  if (d == nullptr || out == nullptr) return fail_invalid("dataset and out must be non-null");
  return guarded(
      [&] { *out = new netate_folds{netate::make_stratified_folds(d->d.treatment, k, seed)}; });
}

uint32_t netate_folds_k(const netate_folds* f) { return f == nullptr ? 0 : f->f.k; }

size_t netate_folds_size(const netate_folds* f) { return f == nullptr ? 0 : f->f.fold_of.size(); }

netate_status netate_folds_of(const netate_folds* f, uint32_t* fold_of) {
  if (f == nullptr || fold_of == nullptr) return fail_invalid("folds and fold_of must be non-null");
  std::memcpy(fold_of, f->f.fold_of.data(), f->f.fold_of.size() * sizeof(uint32_t));
  t_last_error.clear();
  return NETATE_OK;
}

void netate_folds_free(netate_folds* f) { delete f; }

/* ---- embedding models ---------------------------------------------------- */

void netate_train_options_init(netate_train_options* opt) {
  if (opt == nullptr) return;
  const netate::TrainConfig defaults;
  opt->dimension = defaults.dimension;
  opt->learning_rate = defaults.learning_rate;
  opt->step_count = defaults.step_count;
  opt->pretrain_steps = defaults.pretrain_steps;
  opt->walk_edges = defaults.walk_edges;
  opt->negatives_per_positive = defaults.negatives_per_positive;
  opt->w_edge = defaults.w_edge;
  opt->w_outcome = defaults.w_outcome;
  opt->w_treatment = defaults.w_treatment;
  opt->restart_prob = defaults.restart_prob;
  opt->degree_biased_negatives = defaults.degree_biased_negatives ? 1 : 0;
  opt->rng_seed = defaults.rng_seed;
  opt->masked_fold = -1;
  opt->freeze_embeddings = defaults.freeze_embeddings ? 1 : 0;
}

netate_status netate_model_train(const netate_graph* g, const netate_dataset* d,
                                 const netate_folds* folds, const netate_train_options* opt,
                                 const netate_model* init, netate_model** out) {
  if (g == nullptr || opt == nullptr || out == nullptr)
    return fail_invalid("graph, options and out must be non-null");
  if (opt->freeze_embeddings != 0 && init == nullptr)
    return fail_invalid("freeze_embeddings requires an init model");
  return guarded([&] {
    const auto cfg = to_train_config(*opt);
    netate::UnitTable units;
    if (d != nullptr) {
      if (d->d.size() != g->g.node_count())
        throw netate::InvalidArgument("dataset and graph sizes differ");
      units = units_from(d->d, folds);
    } else {
      units.treatment.assign(g->g.node_count(), 0);
      units.outcome.assign(g->g.node_count(), 0.0);
      units.fold.assign(g->g.node_count(), 0);
      units.has_label.assign(g->g.node_count(), 0);
    }
    auto model = netate::train(g->g, units, cfg, init == nullptr ? nullptr : &init->m);
    *out = new netate_model{std::move(model)};
  });
}

netate_status netate_model_load(const char* path, netate_model** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("path and out must be non-null");
  return guarded([&] { *out = new netate_model{netate::load_model(path)}; });
}

netate_status netate_model_save(const netate_model* m, const char* path) {
  if (m == nullptr || path == nullptr) return fail_invalid("model and path must be non-null");
  return guarded([&] { netate::save_model(m->m, path); });
}

uint64_t netate_model_node_count(const netate_model* m) {
  return m == nullptr ? 0 : m->m.node_count();
}

uint32_t netate_model_dimension(const netate_model* m) { return m == nullptr ? 0 : m->m.p; }

netate_status netate_model_predict(const netate_model* m, const uint32_t* nodes, size_t n,
                                   double* q0, double* q1, double* g) {
  if (m == nullptr || nodes == nullptr) return fail_invalid("model and nodes must be non-null");
  return guarded([&] {
    std::vector<netate::NodeId> ids(nodes, nodes + n);
    const auto nuis = netate::predict_nuisances(m->m, ids);
    if (q0 != nullptr) std::memcpy(q0, nuis.q0.data(), n * sizeof(double));
    if (q1 != nullptr) std::memcpy(q1, nuis.q1.data(), n * sizeof(double));
    if (g != nullptr) std::memcpy(g, nuis.g.data(), n * sizeof(double));
  });
}

netate_status netate_model_dependence(const netate_model* m, uint64_t pair_count, uint64_t seed,
                                      double* statistic_out) {
  if (m == nullptr || statistic_out == nullptr)
    return fail_invalid("model and statistic_out must be non-null");
  return guarded(
      [&] { *statistic_out = netate::embedding_dependence_diagnostic(m->m, pair_count, seed); });
}

void netate_model_free(netate_model* m) { delete m; }

/* ---- cross-fitted nuisance tables ---------------------------------------- */

netate_status netate_crossfit(const netate_graph* g, const netate_dataset* d,
                              const netate_folds* folds, const netate_train_options* opt,
                              uint32_t threads, netate_nuisance** out) {
  if (g == nullptr || d == nullptr || folds == nullptr || opt == nullptr || out == nullptr)
    return fail_invalid("graph, dataset, folds, options and out must be non-null");
  return guarded([&] {
    const auto units = units_from(d->d, folds);
    netate::CrossfitOptions options;
    options.threads = threads == 0 ? 1 : threads;
    auto table = netate::crossfit_nuisances(g->g, units, folds->f, to_train_config(*opt), options);
    *out = new netate_nuisance{std::move(table)};
  });
}

netate_status netate_crossfit_two_stage(const netate_graph* g, const netate_dataset* d,
                                        const netate_folds* folds,
                                        const netate_train_options* opt,
                                        const netate_model* frozen, uint32_t threads,
                                        netate_nuisance** out) {
  if (g == nullptr || d == nullptr || folds == nullptr || opt == nullptr || frozen == nullptr ||
      out == nullptr)
    return fail_invalid("graph, dataset, folds, options, frozen and out must be non-null");
  return guarded([&] {
    const auto units = units_from(d->d, folds);
    netate::CrossfitOptions options;
    options.threads = threads == 0 ? 1 : threads;
    auto table = netate::crossfit_heads_on_frozen(g->g, units, folds->f, to_train_config(*opt),
                                                  frozen->m, options);
    *out = new netate_nuisance{std::move(table)};
  });
}

netate_status netate_nuisance_oracle(const netate_dataset* d, const netate_folds* folds,
                                     double beta, netate_nuisance** out) {
  if (d == nullptr || out == nullptr) return fail_invalid("dataset and out must be non-null");
  return guarded([&] {
    netate::FoldAssignment assignment;
    if (folds != nullptr) {
      if (folds->f.fold_of.size() != d->d.size())
        throw netate::InvalidArgument("fold assignment and dataset sizes differ");
      assignment = folds->f;
    } else {
      assignment.fold_of.assign(d->d.size(), 0);
      assignment.k = 1;
    }
    *out = new netate_nuisance{netate::oracle_nuisances(d->d.true_propensity, beta, assignment)};
  });
}

netate_status netate_nuisance_clip(const netate_nuisance* t, double epsilon,
                                   netate_nuisance** out) {
  if (t == nullptr || out == nullptr) return fail_invalid("table and out must be non-null");
  return guarded([&] { *out = new netate_nuisance{netate::clip_propensities(t->t, epsilon)}; });
}

netate_status netate_nuisance_load(const char* path, netate_nuisance** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("path and out must be non-null");
  return guarded([&] { *out = new netate_nuisance{netate::load_nuisance_table(path)}; });
}

netate_status netate_nuisance_save(const netate_nuisance* t, const char* path) {
  if (t == nullptr || path == nullptr) return fail_invalid("table and path must be non-null");
  return guarded([&] { netate::save_nuisance_table(t->t, path); });
}

size_t netate_nuisance_size(const netate_nuisance* t) { return t == nullptr ? 0 : t->t.size(); }

netate_status netate_nuisance_columns(const netate_nuisance* t, double* q0, double* q1, double* g,
                                      uint32_t* fold) {
  if (t == nullptr) return fail_invalid("table is null");
  const std::size_t n = t->t.size();
  if (q0 != nullptr) std::memcpy(q0, t->t.q0.data(), n * sizeof(double));
  if (q1 != nullptr) std::memcpy(q1, t->t.q1.data(), n * sizeof(double));
  if (g != nullptr) std::memcpy(g, t->t.g.data(), n * sizeof(double));
  if (fold != nullptr) std::memcpy(fold, t->t.fold.data(), n * sizeof(uint32_t));
  t_last_error.clear();
  return NETATE_OK;
}

void netate_nuisance_free(netate_nuisance* t) { delete t; }

/* ---- estimate reports ---------------------------------------------------- */

netate_status netate_estimate(const char* estimator, const netate_nuisance* t,
                              const netate_dataset* d, netate_report** out) {
  if (estimator == nullptr || t == nullptr || d == nullptr || out == nullptr)
    return fail_invalid("estimator, table, dataset and out must be non-null");
  return guarded([&] {
    const auto which = netate::estimator_from_string(estimator);
    netate::UnitTable units;
    units.treatment = d->d.treatment;
    units.outcome = d->d.outcome;
    units.fold = t->t.fold;  // estimators read folds from the nuisance table
    units.has_label.assign(d->d.size(), 1);
    *out = new netate_report{netate::estimate(which, t->t, units)};
  });
}

netate_status netate_estimate_unadjusted(const netate_dataset* d, const netate_folds* folds,
                                         netate_report** out) {
  if (d == nullptr || out == nullptr) return fail_invalid("dataset and out must be non-null");
  return guarded([&] {
    const auto units = units_from(d->d, folds);
    *out = new netate_report{netate::estimate_unadjusted(units)};
  });
}

double netate_report_psi(const netate_report* r) { return r == nullptr ? 0.0 : r->r.psi_hat; }

netate_status netate_report_ci(const netate_report* r, double* lo, double* hi) {
  if (r == nullptr) return fail_invalid("report is null");
  if (lo != nullptr) *lo = r->r.ci_low;
  if (hi != nullptr) *hi = r->r.ci_high;
  t_last_error.clear();
  return NETATE_OK;
}

netate_status netate_report_json(const netate_report* r, char** json_out) {
  if (r == nullptr || json_out == nullptr)
    return fail_invalid("report and json_out must be non-null");
  return guarded([&] { *json_out = dup_string(netate::report_to_json(r->r)); });
}

void netate_report_free(netate_report* r) { delete r; }

}  // extern "C"
