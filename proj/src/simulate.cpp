#include "simulate.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "io_util.hpp"
#include "rng.hpp"

namespace netate {

void SimulationConfig::validate() const {
  if (confounder_column.empty()) throw ConfigError("confounder_column must be set");
  if (propensity_levels.empty()) throw ConfigError("propensity_levels must be non-empty");
  for (const double g : propensity_levels)
    if (!(g > 0.0 && g < 1.0))
      throw ConfigError("propensity levels must be strictly inside (0, 1)");
  if (!(exogeneity_p >= 0.0 && exogeneity_p <= 1.0))
    throw ConfigError("exogeneity_p must be in [0, 1]");
  if (quantile_bins == 0) throw ConfigError("quantile_bins must be positive");
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
}

SimulatedDataset simulate_from_propensities(const std::vector<double>& propensities, double beta,
                                            std::uint64_t rng_seed) {
  const std::size_t n = propensities.size();
  if (n == 0) throw InvalidArgument("simulate_from_propensities: no units");
  for (const double g : propensities)
    if (!(g > 0.0 && g < 1.0))
      throw DataError("simulate_from_propensities: propensities must be in (0, 1)");

  SimulatedDataset data;
  data.treatment.resize(n);
  data.outcome.resize(n);
  data.true_propensity = propensities;
  data.true_ate = 1.0;
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = propensities[i];
    const std::uint8_t t = rng.bernoulli(g) ? 1 : 0;
    data.treatment[i] = t;
    data.outcome[i] = static_cast<double>(t) + beta * (g - 0.5) + rng.normal();
  }
  return data;
}

SimulatedDataset simulate_treatment_outcome(const AttributeTable& attrs,
                                            const SimulationConfig& cfg) {
  cfg.validate();
  const Column conf = categorical_view(attrs, cfg.confounder_column, cfg.quantile_bins);
  if (conf.level_count() != cfg.propensity_levels.size())
    throw ConfigError("confounder '" + cfg.confounder_column + "' has " +
                      std::to_string(conf.level_count()) + " levels but " +
                      std::to_string(cfg.propensity_levels.size()) +
                      " propensity levels were configured");
  std::vector<double> g(attrs.node_count());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (conf.missing[i])
      throw DataError("confounder '" + cfg.confounder_column + "' is missing for node " +
                      std::to_string(i));
    g[i] = cfg.propensity_levels[conf.codes[i]];
  }
  if (cfg.exogeneity_p > 0.0)
    g = mix_exogenous(g, cfg.exogeneity_p, derive_seed(cfg.rng_seed, 1));
  return simulate_from_propensities(g, cfg.beta, derive_seed(cfg.rng_seed, 2));
}

std::vector<double> mix_exogenous(const std::vector<double>& base_propensity, double p,
                                  std::uint64_t rng_seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("exogeneity p must be in [0, 1]");
  for (const double g : base_propensity)
    if (!(g > 0.0 && g < 1.0))
      throw DataError("mix_exogenous: base propensity outside (0, 1), logit undefined");
  if (p == 0.0) return base_propensity;

  std::vector<double> out(base_propensity.size());
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double g = base_propensity[i];
    const double logit = std::log(g) - std::log1p(-g);
    const double mixed = (1.0 - p) * logit + p * rng.normal();
    const double s = 1.0 / (1.0 + std::exp(-mixed));
    // keep strictly inside (0, 1) even under extreme logits
    out[i] = std::min(std::max(s, 1e-15), 1.0 - 1e-15);
  }
  return out;
}

void save_dataset(const SimulatedDataset& data, const std::filesystem::path& path,
                  const std::vector<std::string>& comment_lines) {
  auto out = open_output(path);
  for (const auto& c : comment_lines) out << "# " << c << '\n';
  out << "node_id,t,y,true_g\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << ',' << static_cast<unsigned>(data.treatment[i]) << ','
        << fmt_double(data.outcome[i]) << ',' << fmt_double(data.true_propensity[i]) << '\n';
  }
  if (!out) throw DataError("failed writing dataset: " + path.string());
}

SimulatedDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::uint64_t line_no = 0;
  bool header_seen = false;
  SimulatedDataset data;
  // filled in by the caller when a manifest is available
  data.true_ate = std::numeric_limits<double>::quiet_NaN();
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (!header_seen) {
      if (sv != "node_id,t,y,true_g")
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": expected header node_id,t,y,true_g");
      header_seen = true;
      continue;
    }
    const auto fields = split(sv, ',');
    if (fields.size() != 4)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    const auto id = parse_u64(trim(fields[0]));
    const auto t = parse_u64(trim(fields[1]));
    const auto y = parse_double(trim(fields[2]));
    const auto g = parse_double(trim(fields[3]));
    if (!id || !t || !y || !g || *t > 1)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    if (*id != data.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": node ids must be dense and ascending");
    data.treatment.push_back(static_cast<std::uint8_t>(*t));
    data.outcome.push_back(*y);
    data.true_propensity.push_back(*g);
  }
  if (!header_seen) throw DataError(path.string() + ": empty dataset file");
  if (data.size() == 0) throw DataError(path.string() + ": dataset has no rows");
  return data;
}

}  // namespace netate
