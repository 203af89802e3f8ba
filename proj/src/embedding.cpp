#include "embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "error.hpp"
#include "stats.hpp"

namespace netate {

namespace {

inline double dot(std::span<const double> a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

double EmbeddingModel::predict_q(NodeId i, int arm) const {
  return dot(embedding(i), q_weight[arm]) + q_bias[arm];
}

double EmbeddingModel::predict_g(NodeId i) const {
  const double s = sigmoid(dot(embedding(i), g_weight) + g_bias);
  return std::min(std::max(s, 1e-12), 1.0 - 1e-12);
}

bool EmbeddingModel::finite() const {
  const auto all_finite = [](const std::vector<double>& v) {
    for (const double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return all_finite(embeddings) && all_finite(q_weight[0]) && all_finite(q_weight[1]) &&
         all_finite(g_weight) && std::isfinite(q_bias[0]) && std::isfinite(q_bias[1]) &&
         std::isfinite(g_bias);
}

Nuisances predict_nuisances(const EmbeddingModel& model, const std::vector<NodeId>& node_ids) {
  Nuisances out;
  out.q0.reserve(node_ids.size());
  out.q1.reserve(node_ids.size());
  out.g.reserve(node_ids.size());
  for (const NodeId i : node_ids) {
    if (i >= model.node_count())
      throw InvalidArgument("predict_nuisances: node id " + std::to_string(i) + " out of range");
    out.q0.push_back(model.predict_q(i, 0));
    out.q1.push_back(model.predict_q(i, 1));
    out.g.push_back(model.predict_g(i));
  }
  return out;
}

void TrainConfig::validate() const {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be positive and finite");
  if (!(w_edge >= 0.0 && w_outcome >= 0.0 && w_treatment >= 0.0) ||
      !std::isfinite(w_edge + w_outcome + w_treatment))
    throw ConfigError("loss weights must be nonnegative and finite");
  sample_config().validate();
}

SampleConfig TrainConfig::sample_config() const {
  SampleConfig s;
  s.walk_edges = walk_edges;
  s.negatives_per_positive = negatives_per_positive;
  s.restart_prob = restart_prob;
  s.degree_biased_negatives = degree_biased_negatives;
  return s;
}

namespace {

struct Weights {
  double edge, outcome, treatment;
};

inline bool unit_labeled(const UnitTable& units, NodeId i,
                         const std::optional<std::uint32_t>& masked_fold) {
  if (!units.labeled(i)) return false;
  return !(masked_fold && units.fold[i] == *masked_fold);
}

// Single fused pass: returns the loss and, when `grad` is non-null,
// accumulates the exact analytic gradient into it (buffers are reused
// across calls to avoid per-step allocation).
double accumulate(const EmbeddingModel& model, const SubgraphSample& sample,
                  const UnitTable& units, const Weights& w,
                  const std::optional<std::uint32_t>& masked_fold, GradientBuffer* grad) {
  const std::uint32_t p = model.p;
  if (units.size() != model.node_count())
    throw InvalidArgument("loss: unit table and model disagree on node count");

  const auto& touched = sample.touched_nodes;
  const auto touched_index = [&touched](NodeId i) {
    return static_cast<std::size_t>(
        std::lower_bound(touched.begin(), touched.end(), i) - touched.begin());
  };

  if (grad) {
    grad->touched = touched;
    grad->embedding_grad.assign(touched.size() * p, 0.0);
    for (int arm : {0, 1}) grad->q_weight_grad[arm].assign(p, 0.0);
    grad->q_bias_grad = {0.0, 0.0};
    grad->g_weight_grad.assign(p, 0.0);
    grad->g_bias_grad = 0.0;
  }
  const auto grad_row = [&](NodeId i) {
    return grad->embedding_grad.data() + touched_index(i) * p;
  };

  double total = 0.0;

  if (w.edge > 0.0) {
    const auto edge_terms = [&](const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                double label) {
      for (const auto& [i, j] : pairs) {
        const auto li = model.embedding(i);
        const auto lj = model.embedding(j);
        const double s = dot(li, lj);
        total += w.edge * (label > 0.5 ? softplus(-s) : softplus(s));
        if (grad) {
          const double e = w.edge * (sigmoid(s) - label);
          double* gi = grad_row(i);
          double* gj = grad_row(j);
          for (std::uint32_t c = 0; c < p; ++c) {
            gi[c] += e * lj[c];
            gj[c] += e * li[c];
          }
        }
      }
    };
    edge_terms(sample.positive_pairs, 1.0);
    edge_terms(sample.negative_pairs, 0.0);
  }

  if (w.outcome > 0.0 || w.treatment > 0.0) {
    for (const NodeId i : touched) {
      if (!unit_labeled(units, i, masked_fold)) continue;
      const auto li = model.embedding(i);
      const int t = units.treatment[i];
      if (w.outcome > 0.0) {
        const double r = dot(li, model.q_weight[t]) + model.q_bias[t] - units.outcome[i];
        total += w.outcome * r * r;
        if (grad) {
          const double e = w.outcome * 2.0 * r;
          double* gi = grad_row(i);
          for (std::uint32_t c = 0; c < p; ++c) {
            grad->q_weight_grad[t][c] += e * li[c];
            gi[c] += e * model.q_weight[t][c];
          }
          grad->q_bias_grad[t] += e;
        }
      }
      if (w.treatment > 0.0) {
        const double u = dot(li, model.g_weight) + model.g_bias;
        total += w.treatment * (softplus(u) - t * u);
        if (grad) {
          const double e = w.treatment * (sigmoid(u) - t);
          double* gi = grad_row(i);
          for (std::uint32_t c = 0; c < p; ++c) {
            grad->g_weight_grad[c] += e * li[c];
            gi[c] += e * model.g_weight[c];
          }
          grad->g_bias_grad += e;
        }
      }
    }
  }

  return total;
}

}  // namespace

double loss(const EmbeddingModel& model, const SubgraphSample& sample, const UnitTable& units,
            const TrainConfig& cfg) {
  if (!model.finite()) throw NumericError("loss: model parameters are not finite");
  return accumulate(model, sample, units, {cfg.w_edge, cfg.w_outcome, cfg.w_treatment},
                    cfg.masked_fold, nullptr);
}

GradientBuffer loss_gradient(const EmbeddingModel& model, const SubgraphSample& sample,
                             const UnitTable& units, const TrainConfig& cfg) {
  if (!model.finite()) throw NumericError("loss_gradient: model parameters are not finite");
  GradientBuffer grad;
  // Zero weights short-circuit inside accumulate; make sure the buffer still
  // covers every touched node so "untouched means exactly zero" stays true.
  accumulate(model, sample, units, {cfg.w_edge, cfg.w_outcome, cfg.w_treatment}, cfg.masked_fold,
             &grad);
  return grad;
}

EmbeddingModel train(const Graph& g, const UnitTable& units, const TrainConfig& cfg,
                     const EmbeddingModel* init, const StepObserver& observer) {
  cfg.validate();
  units.validate();
  if (units.size() != g.node_count())
    throw InvalidArgument("train: unit table and graph disagree on node count");

  Rng rng(cfg.rng_seed);
  EmbeddingModel model;
  if (init) {
    if (init->node_count() != g.node_count())
      throw InvalidArgument("train: init model and graph disagree on node count");
    model = *init;
  } else {
    model.p = cfg.dimension;
    model.embeddings.resize(static_cast<std::size_t>(g.node_count()) * cfg.dimension);
    const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.dimension));
    for (auto& x : model.embeddings) x = sd * rng.normal();
    for (int arm : {0, 1}) model.q_weight[arm].assign(cfg.dimension, 0.0);
    model.g_weight.assign(cfg.dimension, 0.0);
  }

  SubgraphSampler sampler(g, cfg.sample_config());
  GradientBuffer grad;
  const std::uint64_t total_steps = cfg.pretrain_steps + cfg.step_count;
  const double lr = cfg.learning_rate;

  for (std::uint64_t step = 0; step < total_steps; ++step) {
    const bool pretrain = step < cfg.pretrain_steps;
    Weights w{cfg.w_edge, pretrain ? 0.0 : cfg.w_outcome, pretrain ? 0.0 : cfg.w_treatment};
    if (cfg.freeze_embeddings) w.edge = 0.0;  // the edge term only moves embeddings

    const SubgraphSample sample = sampler.sample(rng);
    const double step_loss = accumulate(model, sample, units, w, cfg.masked_fold, &grad);
    if (!std::isfinite(step_loss))
      throw NumericError("training diverged at step " + std::to_string(step) +
                         " (loss is not finite)");

    if (!cfg.freeze_embeddings) {
      for (std::size_t k = 0; k < grad.touched.size(); ++k) {
        double* row = model.embeddings.data() +
                      static_cast<std::size_t>(grad.touched[k]) * model.p;
        const double* gk = grad.embedding_grad.data() + k * model.p;
        for (std::uint32_t c = 0; c < model.p; ++c) row[c] -= lr * gk[c];
      }
    }
    for (int arm : {0, 1}) {
      for (std::uint32_t c = 0; c < model.p; ++c)
        model.q_weight[arm][c] -= lr * grad.q_weight_grad[arm][c];
      model.q_bias[arm] -= lr * grad.q_bias_grad[arm];
    }
    for (std::uint32_t c = 0; c < model.p; ++c) model.g_weight[c] -= lr * grad.g_weight_grad[c];
    model.g_bias -= lr * grad.g_bias_grad;

    if (observer) observer(step, step_loss);
  }

  return model;
}

namespace {

constexpr char kModelMagic[8] = {'N', 'A', 'T', 'E', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v, const std::string& path) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(path + ": truncated model file");
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n,
                  const std::string& path) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw DataError(path + ": truncated model file");
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  write_pod(out, kModelVersion);
  const std::uint64_t n = model.node_count();
  write_pod(out, n);
  write_pod(out, model.p);
  write_doubles(out, model.embeddings);
  for (int arm : {0, 1}) {
    write_doubles(out, model.q_weight[arm]);
    write_pod(out, model.q_bias[arm]);
  }
  write_doubles(out, model.g_weight);
  write_pod(out, model.g_bias);
  if (!out) throw DataError("failed writing model: " + path.string());
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for reading: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw DataError(path.string() + ": not a model checkpoint (bad magic)");
  std::uint32_t version = 0;
  read_pod(in, version, path.string());
  if (version != kModelVersion)
    throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
  std::uint64_t n = 0;
  EmbeddingModel model;
  read_pod(in, n, path.string());
  read_pod(in, model.p, path.string());
  if (model.p == 0) throw DataError(path.string() + ": model has zero dimension");
  read_doubles(in, model.embeddings, n * model.p, path.string());
  for (int arm : {0, 1}) {
    read_doubles(in, model.q_weight[arm], model.p, path.string());
    read_pod(in, model.q_bias[arm], path.string());
  }
  read_doubles(in, model.g_weight, model.p, path.string());
  read_pod(in, model.g_bias, path.string());
  return model;
}

}  // namespace netate
