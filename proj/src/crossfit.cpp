#include "crossfit.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "error.hpp"
#include "io_util.hpp"
#include "rng.hpp"

namespace netate {

namespace {

void check_fold_args(std::size_t n, std::uint32_t k) {
  if (k < 2) throw ConfigError("cross-fitting needs K >= 2 (no out-of-fold data otherwise)");
  if (k > n)
    throw ConfigError("cannot split " + std::to_string(n) + " units into " + std::to_string(k) +
                      " folds");
}

std::vector<std::uint32_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

FoldAssignment make_folds(std::size_t n, std::uint32_t k, std::uint64_t rng_seed) {
  check_fold_args(n, k);
  FoldAssignment folds;
  folds.k = k;
  folds.rng_seed = rng_seed;
  folds.fold_of.resize(n);
  Rng rng(rng_seed);
  const auto idx = shuffled_indices(n, rng);
  for (std::size_t i = 0; i < n; ++i) folds.fold_of[idx[i]] = static_cast<std::uint32_t>(i % k);
  return folds;
}

FoldAssignment make_stratified_folds(const std::vector<std::uint8_t>& treatment, std::uint32_t k,
                                     std::uint64_t rng_seed) {
  const std::size_t n = treatment.size();
  check_fold_args(n, k);
  std::vector<std::uint32_t> treated, control;
  for (std::size_t i = 0; i < n; ++i)
    (treatment[i] ? treated : control).push_back(static_cast<std::uint32_t>(i));

  FoldAssignment folds;
  folds.k = k;
  folds.rng_seed = rng_seed;
  folds.fold_of.resize(n);
  Rng rng(rng_seed);
  const auto shuffle_into = [&](std::vector<std::uint32_t>& arm, std::uint32_t offset) {
    for (std::size_t i = arm.size(); i > 1; --i)
      std::swap(arm[i - 1], arm[rng.below(i)]);
    for (std::size_t i = 0; i < arm.size(); ++i)
      folds.fold_of[arm[i]] = static_cast<std::uint32_t>((i + offset) % k);
  };
  shuffle_into(treated, 0);
  // Offsetting the second arm staggers the remainders so that overall fold
  // sizes still differ by at most one.
  shuffle_into(control, static_cast<std::uint32_t>(treated.size() % k));
  return folds;
}

void NuisanceTable::validate() const {
  const std::size_t n = g.size();
  if (q0.size() != n || q1.size() != n || fold.size() != n)
    throw InvalidArgument("NuisanceTable columns have mismatched lengths");
  if (provenance.empty()) throw InvalidArgument("NuisanceTable has no folds");
  for (std::size_t i = 0; i < n; ++i) {
    if (fold[i] >= provenance.size())
      throw InvalidArgument("NuisanceTable fold id out of range at row " + std::to_string(i));
    // Exact 0/1 is tolerated here; estimators that divide by g enforce the
    // open interval and direct the caller to clip_propensities.
    if (!(g[i] >= 0.0 && g[i] <= 1.0))
      throw InvalidArgument("NuisanceTable propensity outside [0, 1] at row " +
                            std::to_string(i));
  }
  for (std::uint32_t f = 0; f < provenance.size(); ++f)
    if (provenance[f].masked_fold != f)
      throw InvalidArgument("NuisanceTable row/provenance mismatch: fold " + std::to_string(f) +
                            " was filled by the model masking fold " +
                            std::to_string(provenance[f].masked_fold));
}

namespace {

void check_crossfit_inputs(const UnitTable& units, const FoldAssignment& folds) {
  units.validate();
  if (folds.k < 2) throw ConfigError("cross-fitting needs K >= 2 (no out-of-fold data otherwise)");
  if (folds.fold_of.size() != units.size())
    throw InvalidArgument("fold assignment and unit table disagree on unit count");
  for (const auto f : folds.fold_of)
    if (f >= folds.k) throw InvalidArgument("fold id out of range in fold assignment");
}

// Runs `fit_fold(k)` for every fold, possibly on several threads; the first
// failure is rethrown annotated with its fold id.
template <typename FitFold>
void for_each_fold(std::uint32_t k, std::uint32_t threads, FitFold fit_fold) {
  if (threads <= 1) {
    for (std::uint32_t f = 0; f < k; ++f) {
      try {
        fit_fold(f);
      } catch (const Error& e) {
        throw Error(e.kind(), "fold " + std::to_string(f) + ": " + e.what());
      }
    }
    return;
  }
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::uint32_t> next{0};
  const std::uint32_t n_workers = std::min(threads, k);
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (std::uint32_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::uint32_t f = next.fetch_add(1);
        if (f >= k) return;
        try {
          fit_fold(f);
        } catch (...) {
          errors[f] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (std::uint32_t f = 0; f < k; ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f) + ": " + e.what());
    } catch (const std::exception& e) {
      throw NumericError("fold " + std::to_string(f) + ": " + e.what());
    }
  }
}

NuisanceTable assemble(const Graph& g, const UnitTable& units, const FoldAssignment& folds,
                       const TrainConfig& cfg, const CrossfitOptions& options,
                       const EmbeddingModel* base, const std::string& method) {
  check_crossfit_inputs(units, folds);
  TrainConfig fold_cfg = cfg;
  fold_cfg.validate();

  const std::size_t n = units.size();
  NuisanceTable table;
  table.q0.resize(n);
  table.q1.resize(n);
  table.g.resize(n);
  table.fold = folds.fold_of;
  table.provenance.resize(folds.k);

  std::vector<std::vector<NodeId>> fold_nodes(folds.k);
  for (std::size_t i = 0; i < n; ++i)
    fold_nodes[folds.fold_of[i]].push_back(static_cast<NodeId>(i));

  for_each_fold(folds.k, options.threads, [&](std::uint32_t f) {
    TrainConfig c = cfg;
    c.masked_fold = f;
    c.rng_seed = derive_seed(cfg.rng_seed, f);
    if (base) {
      c.freeze_embeddings = true;
      c.pretrain_steps = 0;
      // fresh heads per fold on the shared frozen embeddings
      EmbeddingModel init = *base;
      for (int arm : {0, 1}) init.q_weight[arm].assign(init.p, 0.0);
      init.q_bias = {0.0, 0.0};
      init.g_weight.assign(init.p, 0.0);
      init.g_bias = 0.0;
      const EmbeddingModel model = train(g, units, c, &init);
      const Nuisances nu = predict_nuisances(model, fold_nodes[f]);
      for (std::size_t r = 0; r < fold_nodes[f].size(); ++r) {
        const NodeId i = fold_nodes[f][r];
        table.q0[i] = nu.q0[r];
        table.q1[i] = nu.q1[r];
        table.g[i] = nu.g[r];
      }
    } else {
      const EmbeddingModel model = train(g, units, c);
      const Nuisances nu = predict_nuisances(model, fold_nodes[f]);
      for (std::size_t r = 0; r < fold_nodes[f].size(); ++r) {
        const NodeId i = fold_nodes[f][r];
        table.q0[i] = nu.q0[r];
        table.q1[i] = nu.q1[r];
        table.g[i] = nu.g[r];
      }
    }
    table.provenance[f] = {f, c.rng_seed, method};
  });

  table.validate();
  return table;
}

}  // namespace

NuisanceTable crossfit_nuisances(const Graph& g, const UnitTable& units,
                                 const FoldAssignment& folds, const TrainConfig& cfg,
                                 const CrossfitOptions& options) {
  return assemble(g, units, folds, cfg, options, nullptr, "joint");
}

NuisanceTable crossfit_heads_on_frozen(const Graph& g, const UnitTable& units,
                                       const FoldAssignment& folds, const TrainConfig& cfg,
                                       const EmbeddingModel& base,
                                       const CrossfitOptions& options) {
  if (base.node_count() != units.size())
    throw InvalidArgument("frozen model and unit table disagree on node count");
  return assemble(g, units, folds, cfg, options, &base, "two_stage");
}

NuisanceTable oracle_nuisances(const std::vector<double>& true_propensity, double beta,
                               const FoldAssignment& folds) {
  const std::size_t n = true_propensity.size();
  if (folds.fold_of.size() != n)
    throw InvalidArgument("fold assignment and propensity vector disagree on unit count");
  if (folds.k < 2) throw ConfigError("cross-fitting needs K >= 2 (no out-of-fold data otherwise)");
  NuisanceTable table;
  table.q0.resize(n);
  table.q1.resize(n);
  table.g = true_propensity;
  table.fold = folds.fold_of;
  table.provenance.resize(folds.k);
  for (std::uint32_t f = 0; f < folds.k; ++f) table.provenance[f] = {f, 0, "oracle"};
  for (std::size_t i = 0; i < n; ++i) {
    table.q0[i] = beta * (true_propensity[i] - 0.5);
    table.q1[i] = 1.0 + table.q0[i];
  }
  table.validate();
  return table;
}

void save_nuisance_table(const NuisanceTable& table, const std::filesystem::path& path,
                         const std::vector<std::string>& comment_lines) {
  auto out = open_output(path);
  for (const auto& c : comment_lines) out << "# " << c << '\n';
  for (const auto& prov : table.provenance)
    out << "# fold " << prov.masked_fold << ": method=" << prov.method
        << " train_seed=" << hex64(prov.train_seed) << '\n';
  if (table.clip_epsilon > 0.0)
    out << "# clip_epsilon=" << fmt_double(table.clip_epsilon)
        << " clipped_count=" << table.clipped_count << '\n';
  out << "node_id,fold,q0,q1,g\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i << ',' << table.fold[i] << ',' << fmt_double(table.q0[i]) << ','
        << fmt_double(table.q1[i]) << ',' << fmt_double(table.g[i]) << '\n';
  }
  if (!out) throw DataError("failed writing nuisance table: " + path.string());
}

NuisanceTable load_nuisance_table(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::uint64_t line_no = 0;
  bool header_seen = false;
  NuisanceTable table;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (!header_seen) {
      if (sv != "node_id,fold,q0,q1,g")
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": expected header node_id,fold,q0,q1,g");
      header_seen = true;
      continue;
    }
    const auto fields = split(sv, ',');
    if (fields.size() != 5)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 5 columns");
    const auto id = parse_u64(trim(fields[0]));
    const auto fold = parse_u64(trim(fields[1]));
    const auto q0 = parse_double(trim(fields[2]));
    const auto q1 = parse_double(trim(fields[3]));
    const auto g = parse_double(trim(fields[4]));
    if (!id || !fold || !q0 || !q1 || !g)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    if (*id != table.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": node ids must be dense and ascending");
    table.fold.push_back(static_cast<std::uint32_t>(*fold));
    table.q0.push_back(*q0);
    table.q1.push_back(*q1);
    table.g.push_back(*g);
  }
  if (!header_seen || table.size() == 0)
    throw DataError(path.string() + ": empty nuisance table");
  const std::uint32_t k = 1 + *std::max_element(table.fold.begin(), table.fold.end());
  table.provenance.resize(k);
  for (std::uint32_t f = 0; f < k; ++f) table.provenance[f] = {f, 0, "file"};
  try {
    table.validate();
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return table;
}

}  // namespace netate
