#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "error.hpp"
#include "sbm.hpp"

using namespace netate;

namespace {

// Edges with one endpoint in [lo_a, hi_a) and the other in [lo_b, hi_b).
// For the within case (identical ranges) the v < u guard dedupes; for
// disjoint ranges each edge is seen from the a-side only.
std::uint64_t count_edges(const Graph& g, NodeId lo_a, NodeId hi_a, NodeId lo_b, NodeId hi_b) {
  std::uint64_t c = 0;
  for (NodeId v = lo_a; v < hi_a; ++v)
    for (const NodeId u : g.neighbors(v))
      if (u >= lo_b && u < hi_b && (v < u || lo_a != lo_b)) ++c;
  return c;
}

}  // namespace

TEST_SUITE("sbm") {

TEST_CASE("edge rates match the block probabilities") {
  const std::vector<std::uint32_t> sizes = {400, 400, 400};
  const double within = 0.05, between = 0.005;
  const auto r = generate_sbm_graph(sizes, within, between, 123);

  REQUIRE(r.graph.node_count() == 1200);

  // within block 0: C(400,2) = 79800 trials
  const double n_within = 79800.0;
  const auto e00 = count_edges(r.graph, 0, 400, 0, 400);
  const double sd_within = std::sqrt(n_within * within * (1 - within));
  CHECK(std::abs(static_cast<double>(e00) - n_within * within) < 5.0 * sd_within);

  // between blocks 0 and 1: 400*400 = 160000 trials
  const double n_between = 160000.0;
  const auto e01 = count_edges(r.graph, 0, 400, 400, 800);
  const double sd_between = std::sqrt(n_between * between * (1 - between));
  CHECK(std::abs(static_cast<double>(e01) - n_between * between) < 5.0 * sd_between);
}

TEST_CASE("block attribute labels nodes in generation order") {
  const auto r = generate_sbm_graph({3, 2}, 1.0, 0.0, 1);
  REQUIRE(r.attrs.has_column("block"));
  const auto& block = r.attrs.column("block");
  CHECK(block.kind == ColumnKind::categorical);
  CHECK(block.level_count() == 2);
  CHECK(block.codes == std::vector<std::uint32_t>{0, 0, 0, 1, 1});
}

TEST_CASE("degenerate probabilities") {
  // within=1, between=0: two cliques, no cross edges
  const auto r = generate_sbm_graph({4, 3}, 1.0, 0.0, 9);
  CHECK(r.graph.edge_count() == 6 + 3);
  for (NodeId v = 0; v < 4; ++v)
    for (NodeId u = 4; u < 7; ++u) CHECK_FALSE(r.graph.has_edge(v, u));

  const auto empty = generate_sbm_graph({10, 10}, 0.0, 0.0, 9);
  CHECK(empty.graph.edge_count() == 0);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate_sbm_graph({50, 50}, 0.1, 0.01, 42);
  const auto b = generate_sbm_graph({50, 50}, 0.1, 0.01, 42);
  const auto c = generate_sbm_graph({50, 50}, 0.1, 0.01, 43);
  REQUIRE(a.graph.node_count() == b.graph.node_count());
  CHECK(a.graph.edge_count() == b.graph.edge_count());
  bool identical = true;
  for (NodeId v = 0; v < a.graph.node_count(); ++v) {
    const auto na = a.graph.neighbors(v);
    const auto nb = b.graph.neighbors(v);
    identical = identical && std::equal(na.begin(), na.end(), nb.begin(), nb.end());
  }
  CHECK(identical);
  CHECK(a.graph.edge_count() != c.graph.edge_count());  // overwhelmingly likely
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(generate_sbm_graph({}, 0.1, 0.01, 1), ConfigError);
  CHECK_THROWS_AS(generate_sbm_graph({0, 5}, 0.1, 0.01, 1), ConfigError);
  CHECK_THROWS_AS(generate_sbm_graph({5}, -0.1, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_sbm_graph({5}, 0.5, 0.7, 1), ConfigError);  // between > within
  CHECK_THROWS_AS(generate_sbm_graph({5, 5}, 1.2, 0.0, 1), ConfigError);
}

TEST_CASE("a single block is a plain G(n, p) graph") {
  const auto r = generate_sbm_graph({300}, 0.1, 0.1, 7);
  const double trials = 300.0 * 299.0 / 2.0;
  const double sd = std::sqrt(trials * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(r.graph.edge_count()) - trials * 0.1) < 5.0 * sd);
  CHECK(r.attrs.column("block").level_count() == 1);
}

}  // TEST_SUITE
