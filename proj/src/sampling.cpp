#include "sampling.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace netate {

void SampleConfig::validate() const {
  if (walk_edges == 0) throw ConfigError("walk_edges must be positive");
  if (negatives_per_positive == 0) throw ConfigError("negatives_per_positive must be positive");
  if (!(restart_prob >= 0.0 && restart_prob <= 1.0))
    throw ConfigError("restart_prob must be in [0, 1]");
}

SubgraphSampler::SubgraphSampler(const Graph& g, SampleConfig cfg) : graph_(g), cfg_(cfg) {
  cfg_.validate();
  if (g.edge_count() == 0) throw DataError("cannot sample walks from an edgeless graph");
  starts_.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (g.degree(v) > 0) starts_.push_back(v);
  if (cfg_.degree_biased_negatives) {
    cum_weight_.reserve(g.node_count());
    double total = 0.0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      total += std::pow(static_cast<double>(g.degree(v)), 0.75);
      cum_weight_.push_back(total);
    }
  }
}

NodeId SubgraphSampler::draw_negative_endpoint(Rng& rng) const {
  if (!cfg_.degree_biased_negatives)
    return static_cast<NodeId>(rng.below(graph_.node_count()));
  const double x = rng.uniform() * cum_weight_.back();
  const auto it = std::upper_bound(cum_weight_.begin(), cum_weight_.end(), x);
  const auto idx = static_cast<std::size_t>(it - cum_weight_.begin());
  return static_cast<NodeId>(std::min(idx, cum_weight_.size() - 1));
}

SubgraphSample SubgraphSampler::sample(Rng& rng) const {
  SubgraphSample s;
  s.positive_pairs.reserve(cfg_.walk_edges);
  s.negative_pairs.reserve(cfg_.walk_edges * cfg_.negatives_per_positive);

  NodeId current = starts_[rng.below(starts_.size())];
  for (std::uint64_t e = 0; e < cfg_.walk_edges; ++e) {
    const auto nbrs = graph_.neighbors(current);
    const NodeId next = nbrs[rng.below(nbrs.size())];
    s.positive_pairs.emplace_back(current, next);

    // Negatives pair the walk vertex with non-neighbors. The vertex itself
    // is a legal draw (a simple graph has no self-edges), which also keeps
    // rejection terminating on complete graphs.
    for (std::uint32_t k = 0; k < cfg_.negatives_per_positive; ++k) {
      NodeId j;
      do {
        j = draw_negative_endpoint(rng);
      } while (graph_.has_edge(current, j));
      s.negative_pairs.emplace_back(current, j);
    }

    if (cfg_.restart_prob > 0.0 && rng.bernoulli(cfg_.restart_prob))
      current = starts_[rng.below(starts_.size())];
    else
      current = next;
  }

  s.touched_nodes.reserve(2 * (s.positive_pairs.size() + s.negative_pairs.size()));
  for (const auto& [a, b] : s.positive_pairs) {
    s.touched_nodes.push_back(a);
    s.touched_nodes.push_back(b);
  }
  for (const auto& [a, b] : s.negative_pairs) {
    s.touched_nodes.push_back(a);
    s.touched_nodes.push_back(b);
  }
  std::sort(s.touched_nodes.begin(), s.touched_nodes.end());
  s.touched_nodes.erase(std::unique(s.touched_nodes.begin(), s.touched_nodes.end()),
                        s.touched_nodes.end());
  return s;
}

SubgraphSample random_walk_sample(const Graph& g, std::uint64_t walk_edges,
                                  std::uint32_t negatives_per_positive,
                                  std::uint64_t rng_seed) {
  SampleConfig cfg;
  cfg.walk_edges = walk_edges;
  cfg.negatives_per_positive = negatives_per_positive;
  SubgraphSampler sampler(g, cfg);
  Rng rng(rng_seed);
  return sampler.sample(rng);
}

}  // namespace netate
