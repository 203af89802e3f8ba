#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "graph.hpp"
#include "sampling.hpp"
#include "units.hpp"

namespace netate {

// Node embeddings plus linear heads: two outcome arms and a treatment
// (propensity) logit, all reading the same embedding.
struct EmbeddingModel {
  std::uint32_t p = 0;
  std::vector<double> embeddings;  // node_count x p, row-major
  std::array<std::vector<double>, 2> q_weight;
  std::array<double, 2> q_bias = {0.0, 0.0};
  std::vector<double> g_weight;
  double g_bias = 0.0;

  std::size_t node_count() const { return p == 0 ? 0 : embeddings.size() / p; }

  std::span<const double> embedding(NodeId i) const {
    return {embeddings.data() + static_cast<std::size_t>(i) * p, p};
  }

  double predict_q(NodeId i, int arm) const;
  // Strictly inside (0, 1): the raw sigmoid is floored away from the
  // endpoints so downstream logits stay finite. Statistical clipping is a
  // separate, explicit estimator-side step.
  double predict_g(NodeId i) const;

  bool finite() const;
};

struct Nuisances {
  std::vector<double> q0, q1, g;
};

// Q-hat / g-hat for a set of nodes (batch call equals per-node calls).
Nuisances predict_nuisances(const EmbeddingModel& model, const std::vector<NodeId>& node_ids);

struct TrainConfig {
  std::uint32_t dimension = 128;
  double learning_rate = 0.025;
  std::uint64_t step_count = 1000;
  std::uint64_t pretrain_steps = 0;  // edge-term-only warmup
  std::uint64_t walk_edges = 100;
  std::uint32_t negatives_per_positive = 5;
  double w_edge = 1.0;
  double w_outcome = 1.0;
  double w_treatment = 1.0;
  double restart_prob = 0.0;
  bool degree_biased_negatives = false;
  std::uint64_t rng_seed = 0;
  std::optional<std::uint32_t> masked_fold;  // fold whose labels never enter the loss
  bool freeze_embeddings = false;            // heads-only training (two-stage)

  void validate() const;
  SampleConfig sample_config() const;
};

// Loss over one subgraph sample:
//   w_outcome * sum_{i in touched, labeled} (y_i - Q(t_i, lambda_i))^2
// + w_treatment * sum_{i in touched, labeled} CE(t_i, g(lambda_i))
// + w_edge * sum_{pairs} CE(label, sigmoid(lambda_i . lambda_j))
// with CE in nats; touched nodes count once each.
double loss(const EmbeddingModel& model, const SubgraphSample& sample, const UnitTable& units,
            const TrainConfig& cfg);

// Gradient with embeddings kept sparse: only nodes in `touched` carry
// entries; everything absent is exactly zero.
struct GradientBuffer {
  std::vector<NodeId> touched;          // sorted ascending
  std::vector<double> embedding_grad;   // touched.size() x p
  std::array<std::vector<double>, 2> q_weight_grad;
  std::array<double, 2> q_bias_grad = {0.0, 0.0};
  std::vector<double> g_weight_grad;
  double g_bias_grad = 0.0;

  std::span<const double> grad_of(std::size_t touched_index, std::uint32_t p) const {
    return {embedding_grad.data() + touched_index * p, p};
  }
};

GradientBuffer loss_gradient(const EmbeddingModel& model, const SubgraphSample& sample,
                             const UnitTable& units, const TrainConfig& cfg);

using StepObserver = std::function<void(std::uint64_t step, double loss)>;

// SGD over fresh subgraph samples: pretrain_steps with only the edge term,
// then step_count joint steps. Masked-fold labels never touch the loss or
// the RNG stream, so retraining with those labels changed is bit-identical.
// `init` (optional) seeds the parameters instead of random initialization;
// with freeze_embeddings only the heads move.
EmbeddingModel train(const Graph& g, const UnitTable& units, const TrainConfig& cfg,
                     const EmbeddingModel* init = nullptr, const StepObserver& observer = {});

// Binary checkpoint (magic NATEMDL1); layout documented in the README.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace netate
