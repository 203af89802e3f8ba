/* netate — network-adjusted treatment effect estimation.
 *
 * C interface to the netate shared library. All functions that can fail
 * return a netate_status; on failure netate_last_error() holds a message
 * (thread-local, valid until the next call on the same thread). Objects are
 * opaque handles released with their matching _free function; strings
 * returned through char** out-params are released with netate_string_free.
 */
#ifndef NETATE_H
#define NETATE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NETATE_API
#elif defined(__GNUC__)
#define NETATE_API __attribute__((visibility("default")))
#else
#define NETATE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum netate_status {
  NETATE_OK = 0,
  NETATE_ERR_INVALID = 1,  /* bad argument at the API boundary */
  NETATE_ERR_CONFIG = 2,   /* bad option or parameter combination */
  NETATE_ERR_DATA = 3,     /* bad file contents or input values */
  NETATE_ERR_NUMERIC = 4,  /* divergence or undefined arithmetic */
  NETATE_ERR_INTERNAL = 5
} netate_status;

NETATE_API const char* netate_version(void);
NETATE_API const char* netate_last_error(void);
NETATE_API void netate_string_free(char* s);

/* One-call pipeline. command is one of simulate, embed, crossfit, estimate,
 * sweep, diagnose; config_json holds the experiment configuration (see the
 * README for the key set). On success *manifest_json receives the manifest
 * the command wrote to its output directory. */
NETATE_API netate_status netate_run(const char* command, const char* config_json,
                                    char** manifest_json);

/* ---- graphs and attribute tables ---------------------------------------- */

typedef struct netate_graph netate_graph;
typedef struct netate_attrs netate_attrs;

/* format: "tsv" or "csv" */
NETATE_API netate_status netate_graph_load(const char* path, const char* format,
                                           netate_graph** out);
NETATE_API netate_status netate_graph_sbm(const uint32_t* block_sizes, size_t n_blocks,
                                          double within_prob, double between_prob, uint64_t seed,
                                          netate_graph** graph_out, netate_attrs** attrs_out);
NETATE_API netate_status netate_graph_save(const netate_graph* g, const char* path,
                                           const char* format);
NETATE_API uint32_t netate_graph_node_count(const netate_graph* g);
NETATE_API uint64_t netate_graph_edge_count(const netate_graph* g);
NETATE_API uint32_t netate_graph_degree(const netate_graph* g, uint32_t node);
NETATE_API int netate_graph_has_edge(const netate_graph* g, uint32_t a, uint32_t b);
NETATE_API void netate_graph_free(netate_graph* g);

/* CSV with header; first column node_id holds internal ids 0..node_count-1 */
NETATE_API netate_status netate_attrs_load(const char* path, uint64_t node_count,
                                           netate_attrs** out);
NETATE_API int netate_attrs_has_column(const netate_attrs* a, const char* name);
NETATE_API void netate_attrs_free(netate_attrs* a);

/* ---- simulated datasets -------------------------------------------------- */

typedef struct netate_dataset netate_dataset;

/* config_json keys: confounder_column, propensity_levels, beta, exogeneity_p,
 * quantile_bins, rng_seed (all optional except propensity_levels/confounder
 * matching the attribute table) */
NETATE_API netate_status netate_simulate(const netate_attrs* attrs, const char* config_json,
                                         netate_dataset** out);
NETATE_API netate_status netate_simulate_from_propensities(const double* g, size_t n, double beta,
                                                           uint64_t seed, netate_dataset** out);
/* out must hold n doubles; may alias base */
NETATE_API netate_status netate_mix_exogenous(const double* base, size_t n, double p,
                                              uint64_t seed, double* out);
NETATE_API netate_status netate_dataset_load(const char* path, netate_dataset** out);
NETATE_API netate_status netate_dataset_save(const netate_dataset* d, const char* path);
NETATE_API size_t netate_dataset_size(const netate_dataset* d);
/* each out-array must hold netate_dataset_size entries; pass NULL to skip */
NETATE_API netate_status netate_dataset_columns(const netate_dataset* d, uint8_t* treatment,
                                                double* outcome, double* true_g);
NETATE_API void netate_dataset_free(netate_dataset* d);

/* ---- fold assignments ---------------------------------------------------- */

typedef struct netate_folds netate_folds;

NETATE_API netate_status netate_folds_make(size_t n, uint32_t k, uint64_t seed,
                                           netate_folds** out);
NETATE_API netate_status netate_folds_make_stratified(const netate_dataset* d, uint32_t k,
                                                      uint64_t seed, netate_folds** out);
NETATE_API uint32_t netate_folds_k(const netate_folds* f);
NETATE_API size_t netate_folds_size(const netate_folds* f);
/* fold_of must hold netate_folds_size entries */
NETATE_API netate_status netate_folds_of(const netate_folds* f, uint32_t* fold_of);
NETATE_API void netate_folds_free(netate_folds* f);

/* ---- embedding models ---------------------------------------------------- */

typedef struct netate_model netate_model;

typedef struct netate_train_options {
  uint32_t dimension;
  double learning_rate;
  uint64_t step_count;
  uint64_t pretrain_steps;
  uint64_t walk_edges;
  uint32_t negatives_per_positive;
  double w_edge;
  double w_outcome;
  double w_treatment;
  double restart_prob;
  int degree_biased_negatives;
  uint64_t rng_seed;
  int32_t masked_fold; /* -1 = none */
  int freeze_embeddings;
} netate_train_options;

NETATE_API void netate_train_options_init(netate_train_options* opt);

/* dataset may be NULL for purely unsupervised training; folds may be NULL
 * (all units in fold 0). init may be NULL; with it, training continues from
 * the given parameters (required when freeze_embeddings is set). */
NETATE_API netate_status netate_model_train(const netate_graph* g, const netate_dataset* d,
                                            const netate_folds* folds,
                                            const netate_train_options* opt,
                                            const netate_model* init, netate_model** out);
NETATE_API netate_status netate_model_load(const char* path, netate_model** out);
NETATE_API netate_status netate_model_save(const netate_model* m, const char* path);
NETATE_API uint64_t netate_model_node_count(const netate_model* m);
NETATE_API uint32_t netate_model_dimension(const netate_model* m);
/* q0/q1/g must hold n entries each; pass NULL to skip */
NETATE_API netate_status netate_model_predict(const netate_model* m, const uint32_t* nodes,
                                              size_t n, double* q0, double* q1, double* g);
NETATE_API netate_status netate_model_dependence(const netate_model* m, uint64_t pair_count,
                                                 uint64_t seed, double* statistic_out);
NETATE_API void netate_model_free(netate_model* m);

/* ---- cross-fitted nuisance tables ---------------------------------------- */

typedef struct netate_nuisance netate_nuisance;

NETATE_API netate_status netate_crossfit(const netate_graph* g, const netate_dataset* d,
                                         const netate_folds* folds,
                                         const netate_train_options* opt, uint32_t threads,
                                         netate_nuisance** out);
/* two-stage: heads fit per fold on the frozen embeddings */
NETATE_API netate_status netate_crossfit_two_stage(const netate_graph* g, const netate_dataset* d,
                                                   const netate_folds* folds,
                                                   const netate_train_options* opt,
                                                   const netate_model* frozen, uint32_t threads,
                                                   netate_nuisance** out);
/* fills the table from the dataset's true propensities and the closed-form
 * outcome model at the given beta */
NETATE_API netate_status netate_nuisance_oracle(const netate_dataset* d,
                                                const netate_folds* folds, double beta,
                                                netate_nuisance** out);
NETATE_API netate_status netate_nuisance_clip(const netate_nuisance* t, double epsilon,
                                              netate_nuisance** out);
NETATE_API netate_status netate_nuisance_load(const char* path, netate_nuisance** out);
NETATE_API netate_status netate_nuisance_save(const netate_nuisance* t, const char* path);
NETATE_API size_t netate_nuisance_size(const netate_nuisance* t);
/* each out-array must hold netate_nuisance_size entries; pass NULL to skip */
NETATE_API netate_status netate_nuisance_columns(const netate_nuisance* t, double* q0, double* q1,
                                                 double* g, uint32_t* fold);
NETATE_API void netate_nuisance_free(netate_nuisance* t);

/* ---- estimate reports ---------------------------------------------------- */

typedef struct netate_report netate_report;

/* estimator: q, iptw, aiptw, tmle, or unadjusted */
NETATE_API netate_status netate_estimate(const char* estimator, const netate_nuisance* t,
                                         const netate_dataset* d, netate_report** out);
/* folds may be NULL (single fold) */
NETATE_API netate_status netate_estimate_unadjusted(const netate_dataset* d,
                                                    const netate_folds* folds,
                                                    netate_report** out);
NETATE_API double netate_report_psi(const netate_report* r);
NETATE_API netate_status netate_report_ci(const netate_report* r, double* lo, double* hi);
NETATE_API netate_status netate_report_json(const netate_report* r, char** json_out);
NETATE_API void netate_report_free(netate_report* r);

#ifdef __cplusplus
}
#endif

#endif /* NETATE_H */
