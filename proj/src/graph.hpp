#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace netate {

using NodeId = std::uint32_t;

enum class EdgeListFormat { tsv, csv };

EdgeListFormat edge_list_format_from_string(const std::string& s);

// Undirected simple graph. Immutable after construction; safe to share
// across concurrent readers.
class Graph {
public:
  Graph() = default;

  // Builds from endpoint pairs over dense ids < node_count. Directed input is
  // symmetrized; self-loops and duplicate edges are dropped and counted.
  static Graph from_edges(NodeId node_count,
                          std::vector<std::pair<NodeId, NodeId>> edges,
                          std::uint64_t* dropped_self_loops = nullptr,
                          std::uint64_t* dropped_duplicates = nullptr);

  NodeId node_count() const noexcept { return static_cast<NodeId>(adjacency_.size()); }
  std::uint64_t edge_count() const noexcept { return edge_count_; }

  NodeId degree(NodeId v) const { return static_cast<NodeId>(adjacency_[v].size()); }

  // Sorted ascending.
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_[v].data(), adjacency_[v].size()};
  }

  bool has_edge(NodeId a, NodeId b) const;

  std::uint64_t isolated_count() const;

private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::uint64_t edge_count_ = 0;
};

struct EdgeListLoadResult {
  Graph graph;
  // internal id -> original file id, ascending by original id
  std::vector<std::uint64_t> external_ids;
  std::uint64_t dropped_self_loops = 0;
  std::uint64_t dropped_duplicates = 0;
};

// One edge per line, two nonnegative integer ids; '#' lines and blank lines
// are ignored. Node ids are densified to 0..node_count-1 (ascending by
// original id); the id map is retained in the result.
EdgeListLoadResult load_edge_list(const std::filesystem::path& path, EdgeListFormat format);

// Writes each edge once as "min sep max", ascending. Isolated nodes do not
// appear in an edge list; reloading recovers the graph up to densification.
void save_edge_list(const Graph& g, const std::filesystem::path& path, EdgeListFormat format);

// CSV sidecar: external_id,internal_id.
void save_id_map(const std::vector<std::uint64_t>& external_ids, const std::filesystem::path& path);
std::vector<std::uint64_t> load_id_map(const std::filesystem::path& path);

}  // namespace netate
