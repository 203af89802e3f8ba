#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attributes.hpp"

namespace netate {

struct SimulationConfig {
  std::string confounder_column = "block";
  std::vector<double> propensity_levels = {0.15, 0.5, 0.85};  // one per category level
  double beta = 1.0;          // confounding strength
  double exogeneity_p = 0.0;  // 0 = fully confounder-driven, 1 = pure noise
  std::uint32_t quantile_bins = 3;  // discretization for real confounder columns
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SimulatedDataset {
  std::vector<std::uint8_t> treatment;
  std::vector<double> outcome;
  std::vector<double> true_propensity;
  double true_ate = 1.0;

  std::size_t size() const { return treatment.size(); }
};

// t_i ~ Bernoulli(g_i), y_i = t_i + beta * (g_i - 0.5) + N(0,1). The additive
// treatment term makes the true effect exactly 1 regardless of beta.
SimulatedDataset simulate_from_propensities(const std::vector<double>& propensities, double beta,
                                            std::uint64_t rng_seed);

// Propensities come from the confounder column: category level k maps to
// propensity_levels[k] (real columns are quantile-binned first). With
// exogeneity_p > 0 the levels are blended with fresh noise before drawing.
SimulatedDataset simulate_treatment_outcome(const AttributeTable& attrs,
                                            const SimulationConfig& cfg);

// sigmoid((1-p) * logit(base_i) + p * xi_i) with xi i.i.d. standard normal.
// p = 0 returns the input untouched.
std::vector<double> mix_exogenous(const std::vector<double>& base_propensity, double p,
                                  std::uint64_t rng_seed);

// CSV interchange: header node_id,t,y,true_g; '#' lines ignored.
void save_dataset(const SimulatedDataset& data, const std::filesystem::path& path,
                  const std::vector<std::string>& comment_lines = {});
SimulatedDataset load_dataset(const std::filesystem::path& path);

}  // namespace netate
