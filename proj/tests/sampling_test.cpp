#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"

#include "error.hpp"
#include "graph.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "test_util.hpp"

using namespace netate;

namespace {

Graph ring_graph(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, std::move(edges));
}

Graph complete_graph(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph::from_edges(n, std::move(edges));
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("positive pairs are edges, negatives are non-edges") {
  const Graph g = ring_graph(50);
  const auto s = random_walk_sample(g, 200, 3, 42);

  CHECK(s.positive_pairs.size() == 200);
  CHECK(s.negative_pairs.size() == 600);
  for (const auto& [a, b] : s.positive_pairs) CHECK(g.has_edge(a, b));
  for (const auto& [a, b] : s.negative_pairs) CHECK_FALSE(g.has_edge(a, b));

  // touched_nodes is exactly the sorted set of endpoints
  std::set<NodeId> endpoints;
  for (const auto& [a, b] : s.positive_pairs) endpoints.insert({a, b});
  for (const auto& [a, b] : s.negative_pairs) endpoints.insert({a, b});
  CHECK(std::vector<NodeId>(endpoints.begin(), endpoints.end()) == s.touched_nodes);
  CHECK(std::is_sorted(s.touched_nodes.begin(), s.touched_nodes.end()));
}

TEST_CASE("consecutive walk edges share an endpoint") {
  const Graph g = ring_graph(30);
  SampleConfig cfg;
  cfg.walk_edges = 100;
  cfg.negatives_per_positive = 1;
  SubgraphSampler sampler(g, cfg);
  Rng rng(7);
  const auto s = sampler.sample(rng);
  for (std::size_t i = 0; i + 1 < s.positive_pairs.size(); ++i) {
    // step i ends where step i+1 begins (no restarts configured)
    CHECK(s.positive_pairs[i].second == s.positive_pairs[i + 1].first);
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const Graph g = ring_graph(40);
  const auto a = random_walk_sample(g, 50, 2, 9);
  const auto b = random_walk_sample(g, 50, 2, 9);
  const auto c = random_walk_sample(g, 50, 2, 10);
  CHECK(a.positive_pairs == b.positive_pairs);
  CHECK(a.negative_pairs == b.negative_pairs);
  CHECK(a.positive_pairs != c.positive_pairs);
}

TEST_CASE("complete graph still terminates: self pairs are legal negatives") {
  const Graph g = complete_graph(6);
  const auto s = random_walk_sample(g, 20, 4, 3);
  CHECK(s.negative_pairs.size() == 80);
  for (const auto& [a, b] : s.negative_pairs) {
    // every distinct pair is an edge here, so negatives must be self pairs
    CHECK(a == b);
  }
}

TEST_CASE("walks never leave a connected component") {
  // two disjoint triangles
  const Graph g = Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}});
  SampleConfig cfg;
  cfg.walk_edges = 60;
  cfg.negatives_per_positive = 1;
  SubgraphSampler sampler(g, cfg);
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = sampler.sample(rng);
    const bool first_half = s.positive_pairs.front().first < 3;
    for (const auto& [a, b] : s.positive_pairs) {
      CHECK((a < 3) == first_half);
      CHECK((b < 3) == first_half);
    }
  }
}

TEST_CASE("restart probability lets a walk cross components") {
  const Graph g = Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}});
  SampleConfig cfg;
  cfg.walk_edges = 400;
  cfg.negatives_per_positive = 1;
  cfg.restart_prob = 0.3;
  SubgraphSampler sampler(g, cfg);
  Rng rng(5);
  const auto s = sampler.sample(rng);
  bool saw_low = false, saw_high = false;
  for (const auto& [a, b] : s.positive_pairs) {
    saw_low = saw_low || a < 3;
    saw_high = saw_high || a >= 3;
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

TEST_CASE("isolated nodes can appear as negative endpoints but never in walks") {
  // a triangle plus two isolated nodes
  const Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 0}});
  SampleConfig cfg;
  cfg.walk_edges = 50;
  cfg.negatives_per_positive = 5;
  SubgraphSampler sampler(g, cfg);
  Rng rng(2);
  bool isolated_as_negative = false;
  for (int rep = 0; rep < 40; ++rep) {
    const auto s = sampler.sample(rng);
    for (const auto& [a, b] : s.positive_pairs) {
      CHECK(a < 3);
      CHECK(b < 3);
    }
    for (const auto& [a, b] : s.negative_pairs)
      isolated_as_negative = isolated_as_negative || b >= 3 || a >= 3;
  }
  CHECK(isolated_as_negative);
}

TEST_CASE("degree-biased negatives favor hubs") {
  // two disjoint 10-leaf stars; hub 11 is a non-neighbor of everything in
  // the first star, so it is always a legal negative draw there
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 1; i <= 10; ++i) edges.emplace_back(0, i);
  for (NodeId i = 12; i <= 21; ++i) edges.emplace_back(11, i);
  const Graph g = Graph::from_edges(22, std::move(edges));

  SampleConfig uni;
  uni.walk_edges = 30;
  uni.negatives_per_positive = 10;
  SampleConfig biased = uni;
  biased.degree_biased_negatives = true;

  auto other_hub_rate = [&](const SampleConfig& cfg) {
    SubgraphSampler sampler(g, cfg);
    Rng rng(77);
    std::size_t hub = 0, total = 0;
    for (int rep = 0; rep < 60; ++rep) {
      const auto s = sampler.sample(rng);
      for (const auto& [a, b] : s.negative_pairs) {
        ++total;
        if ((a <= 10 && b == 11) || (a >= 11 && b == 0)) ++hub;
      }
    }
    return static_cast<double>(hub) / static_cast<double>(total);
  };

  // uniform draws the opposite hub ~1/22 of the time; with deg^0.75 weights
  // each hub carries 10^0.75 ~ 5.6 against 20 leaves at weight 1
  CHECK(other_hub_rate(biased) > 2.0 * other_hub_rate(uni));
}

TEST_CASE("config validation and edgeless graphs") {
  const Graph empty = Graph::from_edges(10, {});
  SampleConfig cfg;
  CHECK_THROWS_AS(SubgraphSampler(empty, cfg), DataError);

  SampleConfig bad = cfg;
  bad.walk_edges = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  SampleConfig bad_restart = cfg;
  bad_restart.restart_prob = 1.5;
  CHECK_THROWS_AS(bad_restart.validate(), ConfigError);
}

}  // TEST_SUITE
