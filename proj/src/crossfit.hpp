#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "graph.hpp"
#include "units.hpp"

namespace netate {

struct FoldAssignment {
  std::vector<std::uint32_t> fold_of;
  std::uint32_t k = 0;
  std::uint64_t rng_seed = 0;
};

// Uniform random balanced partition: fold sizes differ by at most one.
FoldAssignment make_folds(std::size_t n, std::uint32_t k, std::uint64_t rng_seed);

// Balanced within each treatment arm (and overall still within one).
FoldAssignment make_stratified_folds(const std::vector<std::uint8_t>& treatment, std::uint32_t k,
                                     std::uint64_t rng_seed);

struct FoldProvenance {
  std::uint32_t masked_fold = 0;
  std::uint64_t train_seed = 0;
  std::string method;  // "joint" | "two_stage" | "oracle" | "file"
};

// Out-of-fold nuisance estimates: row i was produced by the model that had
// fold_of[i] masked during training.
struct NuisanceTable {
  std::vector<double> q0, q1, g;
  std::vector<std::uint32_t> fold;
  std::vector<FoldProvenance> provenance;  // one entry per fold
  double clip_epsilon = 0.0;               // 0 = never clipped
  std::uint64_t clipped_count = 0;

  std::size_t size() const { return g.size(); }
  std::uint32_t fold_count() const { return static_cast<std::uint32_t>(provenance.size()); }
  void validate() const;
};

struct CrossfitOptions {
  std::uint32_t threads = 1;  // fold trainings run concurrently when > 1
};

// Trains one model per fold (fold k's labels masked, per-fold seed derived
// from cfg.rng_seed) and assembles predictions out-of-fold.
NuisanceTable crossfit_nuisances(const Graph& g, const UnitTable& units,
                                 const FoldAssignment& folds, const TrainConfig& cfg,
                                 const CrossfitOptions& options = {});

// Two-stage variant: embeddings come frozen from `base`; only per-fold heads
// are fit (heads reset to zero, fold labels masked as usual).
NuisanceTable crossfit_heads_on_frozen(const Graph& g, const UnitTable& units,
                                       const FoldAssignment& folds, const TrainConfig& cfg,
                                       const EmbeddingModel& base,
                                       const CrossfitOptions& options = {});

// Bypasses training: fills the table from the simulation ground truth
// (g = true propensity, Q from the closed-form outcome model).
NuisanceTable oracle_nuisances(const std::vector<double>& true_propensity, double beta,
                               const FoldAssignment& folds);

// CSV interchange: header node_id,fold,q0,q1,g; '#' lines ignored.
void save_nuisance_table(const NuisanceTable& table, const std::filesystem::path& path,
                         const std::vector<std::string>& comment_lines = {});
NuisanceTable load_nuisance_table(const std::filesystem::path& path);

}  // namespace netate
