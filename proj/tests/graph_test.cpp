#include <algorithm>
#include <filesystem>
#include <utility>
#include <vector>

#include "doctest.h"

#include "error.hpp"
#include "graph.hpp"
#include "test_util.hpp"

using namespace netate;
using testutil::TempDir;

TEST_SUITE("graph") {

TEST_CASE("from_edges symmetrizes, sorts and deduplicates") {
  std::uint64_t self_loops = 0, duplicates = 0;
  // triangle plus noise: one duplicate (given both ways), one self loop
  const Graph g = Graph::from_edges(
      4, {{1, 0}, {0, 2}, {2, 1}, {1, 2}, {3, 3}}, &self_loops, &duplicates);

  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 3);
  CHECK(self_loops == 1);
  CHECK(duplicates == 1);
  CHECK(g.degree(0) == 2);
  CHECK(g.degree(3) == 0);
  CHECK(g.isolated_count() == 1);

  const auto n1 = g.neighbors(1);
  CHECK(std::vector<NodeId>(n1.begin(), n1.end()) == std::vector<NodeId>{0, 2});
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(2, 2));
}

TEST_CASE("load_edge_list densifies ids and keeps the map") {
  TempDir dir;
  const auto path = dir.file("edges.tsv");
  testutil::write_file(path,
                       "# a comment\n"
                       "10\t30\n"
                       "\n"
                       "30\t500\n"
                       "10\t500\n");
  const auto r = load_edge_list(path, EdgeListFormat::tsv);
  CHECK(r.graph.node_count() == 3);
  CHECK(r.graph.edge_count() == 3);
  CHECK(r.external_ids == std::vector<std::uint64_t>{10, 30, 500});
  CHECK(r.dropped_self_loops == 0);
  CHECK(r.dropped_duplicates == 0);
  // 10 -> 0, 30 -> 1, 500 -> 2
  CHECK(r.graph.has_edge(0, 1));
  CHECK(r.graph.has_edge(1, 2));
  CHECK(r.graph.has_edge(0, 2));
}

TEST_CASE("load_edge_list counts dropped self loops and duplicates") {
  TempDir dir;
  const auto path = dir.file("edges.csv");
  testutil::write_file(path, "1,2\n2,1\n3,3\n1,2\n2,4\n");
  const auto r = load_edge_list(path, EdgeListFormat::csv);
  CHECK(r.graph.edge_count() == 2);
  CHECK(r.dropped_self_loops == 1);
  CHECK(r.dropped_duplicates == 2);
}

TEST_CASE("load_edge_list rejects malformed lines with location info") {
  TempDir dir;
  const auto path = dir.file("bad.tsv");
  testutil::write_file(path, "1\t2\n3\tx\n");
  try {
    load_edge_list(path, EdgeListFormat::tsv);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.tsv") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);  // the offending line number
  }
}

TEST_CASE("load_edge_list rejects wrong field counts and empty files") {
  TempDir dir;
  testutil::write_file(dir.file("three.tsv"), "1\t2\t3\n");
  CHECK_THROWS_AS(load_edge_list(dir.file("three.tsv"), EdgeListFormat::tsv), DataError);

  testutil::write_file(dir.file("empty.tsv"), "# nothing but comments\n");
  CHECK_THROWS_AS(load_edge_list(dir.file("empty.tsv"), EdgeListFormat::tsv), DataError);

  CHECK_THROWS_AS(load_edge_list(dir.file("missing.tsv"), EdgeListFormat::tsv), DataError);
}

TEST_CASE("edge list round trip preserves the graph") {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i + 1 < 20; ++i) edges.emplace_back(i, i + 1);
  edges.emplace_back(0, 19);
  edges.emplace_back(5, 15);
  const Graph g = Graph::from_edges(20, edges);

  TempDir dir;
  for (const auto fmt : {EdgeListFormat::tsv, EdgeListFormat::csv}) {
    const auto path = dir.file(fmt == EdgeListFormat::tsv ? "g.tsv" : "g.csv");
    save_edge_list(g, path, fmt);
    const auto r = load_edge_list(path, fmt);
    REQUIRE(r.graph.node_count() == g.node_count());
    CHECK(r.graph.edge_count() == g.edge_count());
    for (NodeId v = 0; v < g.node_count(); ++v) {
      const auto a = g.neighbors(v);
      const auto b = r.graph.neighbors(v);
      CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
  }
}

TEST_CASE("id map round trip") {
  TempDir dir;
  const std::vector<std::uint64_t> ids = {3, 17, 17000000000ULL};
  save_id_map(ids, dir.file("map.csv"));
  CHECK(load_id_map(dir.file("map.csv")) == ids);
}

TEST_CASE("format parser accepts tsv and csv only") {
  CHECK(edge_list_format_from_string("tsv") == EdgeListFormat::tsv);
  CHECK(edge_list_format_from_string("csv") == EdgeListFormat::csv);
  CHECK_THROWS_AS(edge_list_format_from_string("parquet"), ConfigError);
}

}  // TEST_SUITE
