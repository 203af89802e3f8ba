#pragma once

#include <cstdint>
#include <vector>

#include "attributes.hpp"
#include "graph.hpp"

namespace netate {

struct SbmResult {
  Graph graph;
  AttributeTable attrs;  // carries a categorical "block" column
};

// Stochastic block model: each within-block pair is an edge with within_prob,
// each between-block pair with between_prob. Deterministic given rng_seed.
SbmResult generate_sbm_graph(const std::vector<std::uint32_t>& block_sizes, double within_prob,
                             double between_prob, std::uint64_t rng_seed);

}  // namespace netate
