#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossfit.hpp"
#include "embedding.hpp"
#include "units.hpp"

namespace netate {

enum class Estimator { q, iptw, aiptw, tmle, unadjusted };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct EstimateReport {
  Estimator estimator = Estimator::aiptw;
  std::string variant = "default";  // "default" | "two_stage" | "oracle"
  double psi_hat = 0.0;
  std::vector<double> fold_values;
  double fold_std = 0.0;  // sample std (n-1) of the per-fold estimates
  double if_sigma = 0.0;  // sigma-hat from the pooled efficient scores
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  double clip_epsilon = 0.0;
  std::uint64_t n = 0;
  std::uint64_t clipped_count = 0;
  bool degenerate_ci = false;  // sigma-hat collapsed to zero
};

// Clamp propensities into [epsilon, 1-epsilon]; the returned table records
// epsilon and how many rows moved.
NuisanceTable clip_propensities(const NuisanceTable& table, double epsilon);

// All four adjusted estimators are computed per fold and averaged, so
// psi_hat always equals the mean of fold_values. The nuisance table's fold
// column defines the folds.
EstimateReport estimate_q(const NuisanceTable& table, const UnitTable& units);
EstimateReport estimate_iptw(const NuisanceTable& table, const UnitTable& units);
EstimateReport estimate_aiptw(const NuisanceTable& table, const UnitTable& units);
EstimateReport estimate_tmle(const NuisanceTable& table, const UnitTable& units);

// Difference in arm means, per fold (folds from the unit table) and averaged.
EstimateReport estimate_unadjusted(const UnitTable& units);

EstimateReport estimate(Estimator which, const NuisanceTable& table, const UnitTable& units);

struct InfluenceStats {
  double sigma = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  bool degenerate = false;
};

// Plug-in efficient score phi_i = H_i (y_i - Qhat(t_i)) + (Q1 - Q0) - psi;
// sigma^2 = mean(phi^2) over all rows pooled, CI = psi +/- z * sigma / sqrt(n).
InfluenceStats influence_variance(const NuisanceTable& table, const UnitTable& units,
                                  double psi_hat, double level = 0.95);

// Mean absolute cross-node coordinate moment over random pairs, coordinates
// clamped to [-1, 1]; near zero for independent mean-zero embeddings, equals
// the mean squared coordinate when all embeddings coincide. Inspection only.
double embedding_dependence_diagnostic(const EmbeddingModel& model, std::uint64_t pair_count,
                                       std::uint64_t rng_seed);

std::string report_to_json(const EstimateReport& report);

}  // namespace netate
