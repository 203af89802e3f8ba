#include "sbm.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace netate {

namespace {

// Number of pairs (a, b), a < b < s, with a < i.
inline std::uint64_t pairs_before(std::uint64_t i, std::uint64_t s) {
  return i * (2 * s - 1 - i) / 2;
}

// Unranks pair index k (lexicographic over a < b < s) to (a, b).
std::pair<std::uint64_t, std::uint64_t> unrank_pair(std::uint64_t k, std::uint64_t s) {
  const double sd = static_cast<double>(s);
  const double disc = (2 * sd - 1) * (2 * sd - 1) - 8 * static_cast<double>(k);
  std::uint64_t a = static_cast<std::uint64_t>(
      std::max(0.0, std::floor((2 * sd - 1 - std::sqrt(std::max(disc, 0.0))) / 2)));
  // fix up double rounding
  while (a + 1 < s && pairs_before(a + 1, s) <= k) ++a;
  while (a > 0 && pairs_before(a, s) > k) --a;
  const std::uint64_t b = a + 1 + (k - pairs_before(a, s));
  return {a, b};
}

// Emits each index in [0, total) independently with probability p, using
// geometric skips so runtime is O(p * total) instead of O(total).
template <typename Emit>
void bernoulli_subset(std::uint64_t total, double p, Rng& rng, Emit emit) {
  if (total == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < total; ++k) emit(k);
    return;
  }
  const double log1mp = std::log1p(-p);
  double pos = -1.0;
  while (true) {
    double u;
    do {
      u = rng.uniform();
    } while (u <= 0.0);
    pos += 1.0 + std::floor(std::log(u) / log1mp);
    if (pos >= static_cast<double>(total)) break;
    emit(static_cast<std::uint64_t>(pos));
  }
}

}  // namespace

SbmResult generate_sbm_graph(const std::vector<std::uint32_t>& block_sizes, double within_prob,
                             double between_prob, std::uint64_t rng_seed) {
  if (block_sizes.empty()) throw ConfigError("SBM needs at least one block");
  for (const auto s : block_sizes)
    if (s == 0) throw ConfigError("SBM block sizes must be positive");
  if (!(between_prob >= 0.0 && within_prob <= 1.0 && between_prob <= within_prob))
    throw ConfigError("SBM requires 0 <= between_prob <= within_prob <= 1");

  const std::size_t n_blocks = block_sizes.size();
  std::vector<std::uint64_t> offset(n_blocks + 1, 0);
  for (std::size_t b = 0; b < n_blocks; ++b) offset[b + 1] = offset[b] + block_sizes[b];
  const std::uint64_t n = offset.back();
  if (n > UINT32_MAX) throw ConfigError("SBM graph too large");

  Rng rng(rng_seed);
  std::vector<std::pair<NodeId, NodeId>> edges;

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::uint64_t s = block_sizes[b];
    const std::uint64_t base = offset[b];
    bernoulli_subset(s * (s - 1) / 2, within_prob, rng, [&](std::uint64_t k) {
      const auto [i, j] = unrank_pair(k, s);
      edges.emplace_back(static_cast<NodeId>(base + i), static_cast<NodeId>(base + j));
    });
  }
  for (std::size_t a = 0; a < n_blocks; ++a) {
    for (std::size_t b = a + 1; b < n_blocks; ++b) {
      const std::uint64_t sa = block_sizes[a];
      const std::uint64_t sb = block_sizes[b];
      bernoulli_subset(sa * sb, between_prob, rng, [&](std::uint64_t k) {
        edges.emplace_back(static_cast<NodeId>(offset[a] + k / sb),
                           static_cast<NodeId>(offset[b] + k % sb));
      });
    }
  }

  SbmResult result;
  result.graph = Graph::from_edges(static_cast<NodeId>(n), std::move(edges));
  AttributeTable attrs(n);
  std::vector<std::uint32_t> codes(n);
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::uint64_t v = offset[b]; v < offset[b + 1]; ++v)
      codes[v] = static_cast<std::uint32_t>(b);
  std::vector<std::string> levels;
  levels.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) levels.push_back(std::to_string(b));
  attrs.add_categorical("block", std::move(codes), std::move(levels));
  result.attrs = std::move(attrs);
  return result;
}

}  // namespace netate
