#include "graph.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "error.hpp"
#include "io_util.hpp"

namespace netate {

EdgeListFormat edge_list_format_from_string(const std::string& s) {
  if (s == "tsv") return EdgeListFormat::tsv;
  if (s == "csv") return EdgeListFormat::csv;
  throw ConfigError("unknown edge list format '" + s + "' (expected tsv or csv)");
}

Graph Graph::from_edges(NodeId node_count, std::vector<std::pair<NodeId, NodeId>> edges,
                        std::uint64_t* dropped_self_loops, std::uint64_t* dropped_duplicates) {
  std::uint64_t self_loops = 0;
  std::size_t w = 0;
  for (auto& [a, b] : edges) {
    if (a >= node_count || b >= node_count)
      throw InvalidArgument("Graph::from_edges: endpoint out of range");
    if (a == b) {
      ++self_loops;
      continue;
    }
    edges[w++] = {std::min(a, b), std::max(a, b)};
  }
  edges.resize(w);
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  const std::uint64_t duplicates = static_cast<std::uint64_t>(edges.end() - last);
  edges.erase(last, edges.end());

  Graph g;
  g.adjacency_.resize(node_count);
  std::vector<std::uint32_t> deg(node_count, 0);
  for (const auto& [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  for (NodeId v = 0; v < node_count; ++v) g.adjacency_[v].reserve(deg[v]);
  // Iterating the sorted unique edge list keeps every neighbor list sorted.
  for (const auto& [a, b] : edges) {
    g.adjacency_[a].push_back(b);
    g.adjacency_[b].push_back(a);
  }
  g.edge_count_ = edges.size();
  if (dropped_self_loops) *dropped_self_loops = self_loops;
  if (dropped_duplicates) *dropped_duplicates = duplicates;
  return g;
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a >= node_count() || b >= node_count()) return false;
  const auto& adj = adjacency_[a];
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::uint64_t Graph::isolated_count() const {
  std::uint64_t n = 0;
  for (const auto& adj : adjacency_)
    if (adj.empty()) ++n;
  return n;
}

namespace {

std::vector<std::string_view> split_edge_line(std::string_view line, EdgeListFormat format) {
  if (format == EdgeListFormat::csv) {
    auto fields = split(line, ',');
    for (auto& f : fields) f = trim(f);
    return fields;
  }
  return split_whitespace(line);
}

}  // namespace

EdgeListLoadResult load_edge_list(const std::filesystem::path& path, EdgeListFormat format) {
  auto in = open_input(path);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const auto fields = split_edge_line(sv, format);
    if (fields.size() != 2)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected two node ids, got " + std::to_string(fields.size()) + " fields");
    const auto a = parse_u64(fields[0]);
    const auto b = parse_u64(fields[1]);
    if (!a || !b)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": node ids must be nonnegative integers");
    raw.emplace_back(*a, *b);
  }
  if (raw.empty()) throw DataError(path.string() + ": no edges found (empty graph)");

  // Densify: ascending original ids -> 0..n-1.
  std::vector<std::uint64_t> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& [a, b] : raw) {
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() > UINT32_MAX)
    throw DataError(path.string() + ": too many distinct node ids");
  std::unordered_map<std::uint64_t, NodeId> to_internal;
  to_internal.reserve(ids.size());
  for (NodeId i = 0; i < static_cast<NodeId>(ids.size()); ++i) to_internal.emplace(ids[i], i);

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw.size());
  for (const auto& [a, b] : raw)
    edges.emplace_back(to_internal.at(a), to_internal.at(b));

  EdgeListLoadResult result;
  result.external_ids = std::move(ids);
  result.graph = Graph::from_edges(static_cast<NodeId>(result.external_ids.size()),
                                   std::move(edges), &result.dropped_self_loops,
                                   &result.dropped_duplicates);
  return result;
}

void save_edge_list(const Graph& g, const std::filesystem::path& path, EdgeListFormat format) {
  auto out = open_output(path);
  const char sep = format == EdgeListFormat::csv ? ',' : '\t';
  for (NodeId v = 0; v < g.node_count(); ++v) {
    for (NodeId u : g.neighbors(v)) {
      if (u <= v) continue;
      out << v << sep << u << '\n';
    }
  }
  if (!out) throw DataError("failed writing edge list: " + path.string());
}

void save_id_map(const std::vector<std::uint64_t>& external_ids, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "external_id,internal_id\n";
  for (std::size_t i = 0; i < external_ids.size(); ++i)
    out << external_ids[i] << ',' << i << '\n';
  if (!out) throw DataError("failed writing id map: " + path.string());
}

std::vector<std::uint64_t> load_id_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty id map");
  std::vector<std::uint64_t> external;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    const auto fields = split(sv, ',');
    if (fields.size() != 2)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
    const auto ext = parse_u64(trim(fields[0]));
    const auto internal = parse_u64(trim(fields[1]));
    if (!ext || !internal)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed id");
    if (*internal != external.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": internal ids must be dense and ascending");
    external.push_back(*ext);
  }
  return external;
}

}  // namespace netate
