#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace netate {

enum class ColumnKind { categorical, real };

// One named per-node vector. Exactly one of (codes, values) is populated,
// depending on kind; `missing[i]` marks cells with no data.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::uint32_t> codes;  // categorical: index into levels
  std::vector<std::string> levels;   // categorical level names
  std::vector<double> values;        // real
  std::vector<std::uint8_t> missing;

  std::uint32_t level_count() const { return static_cast<std::uint32_t>(levels.size()); }
};

class AttributeTable {
public:
  AttributeTable() = default;
  explicit AttributeTable(std::size_t node_count) : node_count_(node_count) {}

  std::size_t node_count() const { return node_count_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  bool has_column(const std::string& name) const;
  const Column& column(const std::string& name) const;  // DataError if absent

  void add_categorical(std::string name, std::vector<std::uint32_t> codes,
                       std::vector<std::string> levels,
                       std::vector<std::uint8_t> missing = {});
  void add_real(std::string name, std::vector<double> values,
                std::vector<std::uint8_t> missing = {});

  // CSV with a header row; first column must be node_id, empty cell = missing.
  // Rows may arrive in any order; nodes without a row are all-missing. A
  // column is real when every non-missing cell parses as a number, otherwise
  // categorical with levels sorted lexicographically.
  static AttributeTable load_csv(const std::filesystem::path& path, std::size_t node_count);

  // As above, but node_id values are external ids translated through the
  // edge-list id map; rows for ids absent from the map are skipped (counted).
  static AttributeTable load_csv(const std::filesystem::path& path,
                                 const std::vector<std::uint64_t>& external_ids,
                                 std::uint64_t* skipped_rows = nullptr);

  void save_csv(const std::filesystem::path& path) const;

private:
  std::size_t node_count_ = 0;
  std::vector<Column> columns_;
};

// Dense categorical reading of a column: categorical columns pass through,
// real columns are discretized into `quantile_bins` quantile bins (empty bins
// compacted away, levels renamed q0..q{L-1}).
Column categorical_view(const AttributeTable& attrs, const std::string& name,
                        std::uint32_t quantile_bins);

// Quantile discretization of a real column. Thresholds are the i*m/bins
// order statistics (i = 1..bins-1) of the non-missing values; a value lands
// in bin = #{thresholds <= value}. Ties can leave bins empty; those are
// compacted out.
Column discretize_quantiles(const Column& real_column, std::uint32_t bins);

}  // namespace netate
