#include "estimators.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "error.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace netate {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::q: return "q";
    case Estimator::iptw: return "iptw";
    case Estimator::aiptw: return "aiptw";
    case Estimator::tmle: return "tmle";
    case Estimator::unadjusted: return "unadjusted";
  }
  throw InvalidArgument("unknown estimator enum value");
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "q") return Estimator::q;
  if (s == "iptw") return Estimator::iptw;
  if (s == "aiptw") return Estimator::aiptw;
  if (s == "tmle") return Estimator::tmle;
  if (s == "unadjusted") return Estimator::unadjusted;
  throw ConfigError("unknown estimator '" + s + "' (expected q, iptw, aiptw, tmle, unadjusted)");
}

NuisanceTable clip_propensities(const NuisanceTable& table, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw InvalidArgument("clip epsilon must be in (0, 0.5)");
  NuisanceTable out = table;
  out.clip_epsilon = epsilon;
  out.clipped_count = 0;
  for (auto& g : out.g) {
    const double clamped = std::min(std::max(g, epsilon), 1.0 - epsilon);
    if (clamped != g) ++out.clipped_count;
    g = clamped;
  }
  return out;
}

namespace {

// The inverse-probability weight with sign: 1/g for treated, -1/(1-g) for
// control, so that H * (anything) carries the arm contrast.
inline double clever_covariate(std::uint8_t t, double g) {
  return t ? 1.0 / g : -1.0 / (1.0 - g);
}

void check_inputs(const NuisanceTable& table, const UnitTable& units) {
  units.validate();
  table.validate();
  if (table.size() == 0) throw InvalidArgument("empty nuisance table");
  if (table.size() != units.size())
    throw InvalidArgument("nuisance table and unit table disagree on unit count");
}

void check_propensity_usable(double g) {
  if (!(g > 0.0 && g < 1.0))
    throw NumericError("propensity estimate at 0 or 1; run clip_propensities first");
}

std::vector<std::vector<std::uint32_t>> rows_by_fold(const std::vector<std::uint32_t>& fold,
                                                     std::uint32_t k) {
  std::vector<std::vector<std::uint32_t>> rows(k);
  for (std::size_t i = 0; i < fold.size(); ++i)
    rows[fold[i]].push_back(static_cast<std::uint32_t>(i));
  for (std::uint32_t f = 0; f < k; ++f)
    if (rows[f].empty()) throw DataError("fold " + std::to_string(f) + " has no units");
  return rows;
}

// Shared scaffolding: compute one value per fold, average, and attach the
// pooled influence-function interval.
template <typename FoldValue>
EstimateReport fold_averaged(Estimator which, const NuisanceTable& table, const UnitTable& units,
                             FoldValue fold_value) {
  check_inputs(table, units);
  const auto rows = rows_by_fold(table.fold, table.fold_count());
  EstimateReport report;
  report.estimator = which;
  report.n = table.size();
  report.clip_epsilon = table.clip_epsilon;
  report.clipped_count = table.clipped_count;
  report.fold_values.reserve(rows.size());
  for (const auto& fold_rows : rows) report.fold_values.push_back(fold_value(fold_rows));
  report.psi_hat = mean(report.fold_values);
  report.fold_std = sample_std(report.fold_values);
  const InfluenceStats stats = influence_variance(table, units, report.psi_hat);
  report.if_sigma = stats.sigma;
  report.ci_low = stats.ci_low;
  report.ci_high = stats.ci_high;
  report.level = stats.level;
  report.degenerate_ci = stats.degenerate;
  return report;
}

}  // namespace

EstimateReport estimate_q(const NuisanceTable& table, const UnitTable& units) {
  return fold_averaged(Estimator::q, table, units, [&](const std::vector<std::uint32_t>& rows) {
    double s = 0.0;
    for (const auto i : rows) s += table.q1[i] - table.q0[i];
    return s / static_cast<double>(rows.size());
  });
}

EstimateReport estimate_iptw(const NuisanceTable& table, const UnitTable& units) {
  return fold_averaged(Estimator::iptw, table, units,
                       [&](const std::vector<std::uint32_t>& rows) {
                         double s = 0.0;
                         for (const auto i : rows) {
                           check_propensity_usable(table.g[i]);
                           s += clever_covariate(units.treatment[i], table.g[i]) *
                                units.outcome[i];
                         }
                         return s / static_cast<double>(rows.size());
                       });
}

EstimateReport estimate_aiptw(const NuisanceTable& table, const UnitTable& units) {
  return fold_averaged(
      Estimator::aiptw, table, units, [&](const std::vector<std::uint32_t>& rows) {
        double s = 0.0;
        for (const auto i : rows) {
          check_propensity_usable(table.g[i]);
          const double qt = units.treatment[i] ? table.q1[i] : table.q0[i];
          s += table.q1[i] - table.q0[i] +
               clever_covariate(units.treatment[i], table.g[i]) * (units.outcome[i] - qt);
        }
        return s / static_cast<double>(rows.size());
      });
}

EstimateReport estimate_tmle(const NuisanceTable& table, const UnitTable& units) {
  return fold_averaged(
      Estimator::tmle, table, units, [&](const std::vector<std::uint32_t>& rows) {
        // one least-squares fluctuation step along the clever covariate
        double hr = 0.0, hh = 0.0;
        for (const auto i : rows) {
          check_propensity_usable(table.g[i]);
          const double h = clever_covariate(units.treatment[i], table.g[i]);
          const double qt = units.treatment[i] ? table.q1[i] : table.q0[i];
          hr += h * (units.outcome[i] - qt);
          hh += h * h;
        }
        if (hh == 0.0) throw NumericError("TMLE fluctuation undefined: sum of H^2 is zero");
        const double eps = hr / hh;
        double s = 0.0;
        for (const auto i : rows) {
          const double q1_star = table.q1[i] + eps / table.g[i];
          const double q0_star = table.q0[i] - eps / (1.0 - table.g[i]);
          s += q1_star - q0_star;
        }
        return s / static_cast<double>(rows.size());
      });
}

EstimateReport estimate_unadjusted(const UnitTable& units) {
  units.validate();
  if (units.size() == 0) throw InvalidArgument("empty unit table");
  const std::uint32_t k = 1 + *std::max_element(units.fold.begin(), units.fold.end());
  const auto rows = rows_by_fold(units.fold, k);

  EstimateReport report;
  report.estimator = Estimator::unadjusted;
  report.n = units.size();
  report.fold_values.reserve(rows.size());
  for (std::uint32_t f = 0; f < rows.size(); ++f) {
    double sum1 = 0.0, sum0 = 0.0;
    std::uint64_t n1 = 0, n0 = 0;
    for (const auto i : rows[f]) {
      if (units.treatment[i]) {
        sum1 += units.outcome[i];
        ++n1;
      } else {
        sum0 += units.outcome[i];
        ++n0;
      }
    }
    if (n1 == 0 || n0 == 0)
      throw DataError("fold " + std::to_string(f) + " has an empty treatment arm");
    report.fold_values.push_back(sum1 / static_cast<double>(n1) -
                                 sum0 / static_cast<double>(n0));
  }
  report.psi_hat = mean(report.fold_values);
  report.fold_std = sample_std(report.fold_values);

  // Two-sample variance on the pooled data, scaled so that the usual
  // sigma / sqrt(n) interval applies.
  std::vector<double> y1, y0;
  for (std::size_t i = 0; i < units.size(); ++i)
    (units.treatment[i] ? y1 : y0).push_back(units.outcome[i]);
  const double var =
      sample_variance(y1) / static_cast<double>(y1.size()) +
      sample_variance(y0) / static_cast<double>(y0.size());
  report.if_sigma = std::sqrt(static_cast<double>(units.size()) * var);
  const double z = normal_quantile(0.5 + report.level / 2.0);
  const double half = z * report.if_sigma / std::sqrt(static_cast<double>(units.size()));
  report.ci_low = report.psi_hat - half;
  report.ci_high = report.psi_hat + half;
  report.degenerate_ci = report.if_sigma == 0.0;
  return report;
}

EstimateReport estimate(Estimator which, const NuisanceTable& table, const UnitTable& units) {
  switch (which) {
    case Estimator::q: return estimate_q(table, units);
    case Estimator::iptw: return estimate_iptw(table, units);
    case Estimator::aiptw: return estimate_aiptw(table, units);
    case Estimator::tmle: return estimate_tmle(table, units);
    case Estimator::unadjusted: return estimate_unadjusted(units);
  }
  throw InvalidArgument("unknown estimator enum value");
}

InfluenceStats influence_variance(const NuisanceTable& table, const UnitTable& units,
                                  double psi_hat, double level) {
  check_inputs(table, units);
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("CI level must be in (0, 1)");
  const std::size_t n = table.size();
  double ssq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    check_propensity_usable(table.g[i]);
    const double qt = units.treatment[i] ? table.q1[i] : table.q0[i];
    const double phi = clever_covariate(units.treatment[i], table.g[i]) *
                           (units.outcome[i] - qt) +
                       (table.q1[i] - table.q0[i]) - psi_hat;
    ssq += phi * phi;
  }
  InfluenceStats stats;
  stats.level = level;
  stats.sigma = std::sqrt(ssq / static_cast<double>(n));
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * stats.sigma / std::sqrt(static_cast<double>(n));
  stats.ci_low = psi_hat - half;
  stats.ci_high = psi_hat + half;
  stats.degenerate = stats.sigma == 0.0;
  return stats;
}

double embedding_dependence_diagnostic(const EmbeddingModel& model, std::uint64_t pair_count,
                                       std::uint64_t rng_seed) {
  const std::size_t n = model.node_count();
  if (n < 2) throw InvalidArgument("dependence diagnostic needs at least 2 nodes");
  if (pair_count == 0) throw InvalidArgument("dependence diagnostic needs pair_count >= 1");
  const std::uint32_t p = model.p;

  // Coordinates clamped to [-1, 1] act as the bounded test functions. No
  // empirical mean is subtracted: by Cauchy-Schwarz the per-coordinate pair
  // moment is at most the coordinate's second moment, with equality exactly
  // when all embeddings coincide, so perfect dependence reads as the maximal
  // value instead of being centered away.
  const auto clamped = [&](NodeId i, std::uint32_t c) {
    return std::min(std::max(model.embedding(i)[c], -1.0), 1.0);
  };

  Rng rng(rng_seed);
  std::vector<double> acc(p, 0.0);
  for (std::uint64_t k = 0; k < pair_count; ++k) {
    const NodeId i = static_cast<NodeId>(rng.below(n));
    NodeId j;
    do {
      j = static_cast<NodeId>(rng.below(n));
    } while (j == i);
    for (std::uint32_t c = 0; c < p; ++c) acc[c] += clamped(i, c) * clamped(j, c);
  }
  double stat = 0.0;
  for (std::uint32_t c = 0; c < p; ++c)
    stat += std::abs(acc[c] / static_cast<double>(pair_count));
  return stat / static_cast<double>(p);
}

std::string report_to_json(const EstimateReport& report) {
  nlohmann::json j;
  j["estimator"] = to_string(report.estimator);
  j["variant"] = report.variant;
  j["psi_hat"] = report.psi_hat;
  j["fold_values"] = report.fold_values;
  j["fold_std"] = report.fold_std;
  j["if_sigma"] = report.if_sigma;
  j["ci"] = {report.ci_low, report.ci_high};
  j["level"] = report.level;
  j["clip_epsilon"] = report.clip_epsilon;
  j["n"] = report.n;
  j["clipped_count"] = report.clipped_count;
  j["degenerate_ci"] = report.degenerate_ci;
  return j.dump(2);
}

}  // namespace netate
