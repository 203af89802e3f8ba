#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace netate {

struct SubgraphSample {
  std::vector<std::pair<NodeId, NodeId>> positive_pairs;
  std::vector<std::pair<NodeId, NodeId>> negative_pairs;
  std::vector<NodeId> touched_nodes;  // sorted, deduplicated endpoints
};

struct SampleConfig {
  std::uint64_t walk_edges = 100;
  std::uint32_t negatives_per_positive = 5;
  double restart_prob = 0.0;  // chance to jump back to a fresh uniform start
  bool degree_biased_negatives = false;  // deg^0.75 instead of uniform

  void validate() const;
};

// Random-walk subgraph sampler. Construction precomputes the start-node list
// (degree >= 1) and, if requested, the degree-biased table; sample() is then
// cheap and can be called once per SGD step. Immutable after construction;
// callers own the Rng, so concurrent sampling just needs distinct Rngs.
class SubgraphSampler {
public:
  SubgraphSampler(const Graph& g, SampleConfig cfg);

  SubgraphSample sample(Rng& rng) const;

private:
  NodeId draw_negative_endpoint(Rng& rng) const;

  const Graph& graph_;
  SampleConfig cfg_;
  std::vector<NodeId> starts_;
  std::vector<double> cum_weight_;  // degree-biased cumulative weights
};

// One-shot convenience wrapper; deterministic given rng_seed.
SubgraphSample random_walk_sample(const Graph& g, std::uint64_t walk_edges,
                                  std::uint32_t negatives_per_positive,
                                  std::uint64_t rng_seed);

}  // namespace netate
