#include "attributes.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "error.hpp"
#include "io_util.hpp"

namespace netate {

bool AttributeTable::has_column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c.name == name) return true;
  return false;
}

const Column& AttributeTable::column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c.name == name) return c;
  throw DataError("attribute column not found: " + name);
}

void AttributeTable::add_categorical(std::string name, std::vector<std::uint32_t> codes,
                                     std::vector<std::string> levels,
                                     std::vector<std::uint8_t> missing) {
  if (codes.size() != node_count_)
    throw InvalidArgument("attribute column '" + name + "' has wrong length");
  if (missing.empty()) missing.assign(node_count_, 0);
  if (missing.size() != node_count_)
    throw InvalidArgument("missing mask for '" + name + "' has wrong length");
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (!missing[i] && codes[i] >= levels.size())
      throw InvalidArgument("categorical code out of range in column '" + name + "'");
  if (has_column(name)) throw InvalidArgument("duplicate attribute column: " + name);
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::categorical;
  c.codes = std::move(codes);
  c.levels = std::move(levels);
  c.missing = std::move(missing);
  columns_.push_back(std::move(c));
}

void AttributeTable::add_real(std::string name, std::vector<double> values,
                              std::vector<std::uint8_t> missing) {
  if (values.size() != node_count_)
    throw InvalidArgument("attribute column '" + name + "' has wrong length");
  if (missing.empty()) missing.assign(node_count_, 0);
  if (missing.size() != node_count_)
    throw InvalidArgument("missing mask for '" + name + "' has wrong length");
  if (has_column(name)) throw InvalidArgument("duplicate attribute column: " + name);
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::real;
  c.values = std::move(values);
  c.missing = std::move(missing);
  columns_.push_back(std::move(c));
}

// Shared CSV reader; `translate` maps a parsed node_id to an internal id or
// npos to skip the row.
template <typename Translate>
static AttributeTable load_csv_impl(const std::filesystem::path& path, std::size_t node_count,
                                    Translate translate, std::uint64_t* skipped_rows) {
  auto in = open_input(path);
  std::string line;
  std::uint64_t line_no = 0;

  // header
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    for (auto f : split(sv, ',')) names.emplace_back(trim(f));
    break;
  }
  if (names.empty()) throw DataError(path.string() + ": missing header row");
  if (names.front() != "node_id")
    throw DataError(path.string() + ": first column must be node_id, got '" + names.front() + "'");
  for (std::size_t i = 1; i < names.size(); ++i)
    if (names[i].empty())
      throw DataError(path.string() + ": empty column name in header");

  const std::size_t n_cols = names.size() - 1;
  std::vector<std::vector<std::string>> cells(n_cols);  // raw text per column
  std::vector<std::vector<std::uint8_t>> miss(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    cells[c].assign(node_count, std::string());
    miss[c].assign(node_count, 1);
  }
  std::vector<std::uint8_t> seen(node_count, 0);
  std::uint64_t skipped = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const auto fields = split(sv, ',');
    if (fields.size() != names.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(names.size()) + " fields, got " +
                      std::to_string(fields.size()));
    const auto id = parse_u64(trim(fields[0]));
    if (!id)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed node_id");
    const std::size_t row = translate(*id);
    if (row == static_cast<std::size_t>(-1)) {
      ++skipped;
      continue;
    }
    if (row >= node_count)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": node_id " +
                      std::to_string(*id) + " out of range");
    if (seen[row])
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate node_id " +
                      std::to_string(*id));
    seen[row] = 1;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::string_view cell = trim(fields[c + 1]);
      if (cell.empty()) continue;
      cells[c][row] = std::string(cell);
      miss[c][row] = 0;
    }
  }
  if (skipped_rows) *skipped_rows = skipped;

  AttributeTable table(node_count);
  for (std::size_t c = 0; c < n_cols; ++c) {
    bool all_numeric = true;
    bool any_value = false;
    for (std::size_t i = 0; i < node_count; ++i) {
      if (miss[c][i]) continue;
      any_value = true;
      if (!parse_double(cells[c][i])) {
        all_numeric = false;
        break;
      }
    }
    if (any_value && all_numeric) {
      std::vector<double> values(node_count, 0.0);
      for (std::size_t i = 0; i < node_count; ++i)
        if (!miss[c][i]) values[i] = *parse_double(cells[c][i]);
      table.add_real(names[c + 1], std::move(values), std::move(miss[c]));
    } else {
      std::map<std::string, std::uint32_t> level_of;  // lexicographic level order
      for (std::size_t i = 0; i < node_count; ++i)
        if (!miss[c][i]) level_of.emplace(cells[c][i], 0);
      std::vector<std::string> levels;
      levels.reserve(level_of.size());
      for (auto& [name, idx] : level_of) {
        idx = static_cast<std::uint32_t>(levels.size());
        levels.push_back(name);
      }
      std::vector<std::uint32_t> codes(node_count, 0);
      for (std::size_t i = 0; i < node_count; ++i)
        if (!miss[c][i]) codes[i] = level_of.at(cells[c][i]);
      table.add_categorical(names[c + 1], std::move(codes), std::move(levels),
                            std::move(miss[c]));
    }
  }
  return table;
}

AttributeTable AttributeTable::load_csv(const std::filesystem::path& path,
                                        std::size_t node_count) {
  return load_csv_impl(path, node_count,
                       [](std::uint64_t id) { return static_cast<std::size_t>(id); }, nullptr);
}

AttributeTable AttributeTable::load_csv(const std::filesystem::path& path,
                                        const std::vector<std::uint64_t>& external_ids,
                                        std::uint64_t* skipped_rows) {
  std::unordered_map<std::uint64_t, std::size_t> to_internal;
  to_internal.reserve(external_ids.size());
  for (std::size_t i = 0; i < external_ids.size(); ++i) to_internal.emplace(external_ids[i], i);
  return load_csv_impl(
      path, external_ids.size(),
      [&to_internal](std::uint64_t id) {
        const auto it = to_internal.find(id);
        return it == to_internal.end() ? static_cast<std::size_t>(-1) : it->second;
      },
      skipped_rows);
}

void AttributeTable::save_csv(const std::filesystem::path& path) const {
  auto out = open_output(path);
  out << "node_id";
  for (const auto& c : columns_) out << ',' << c.name;
  out << '\n';
  for (std::size_t i = 0; i < node_count_; ++i) {
    out << i;
    for (const auto& c : columns_) {
      out << ',';
      if (c.missing[i]) continue;
      if (c.kind == ColumnKind::categorical)
        out << c.levels[c.codes[i]];
      else
        out << fmt_double(c.values[i]);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing attribute table: " + path.string());
}

Column discretize_quantiles(const Column& real_column, std::uint32_t bins) {
  if (real_column.kind != ColumnKind::real)
    throw InvalidArgument("discretize_quantiles: column '" + real_column.name + "' is not real");
  if (bins < 1) throw InvalidArgument("discretize_quantiles: bins must be positive");

  std::vector<double> sorted;
  sorted.reserve(real_column.values.size());
  for (std::size_t i = 0; i < real_column.values.size(); ++i)
    if (!real_column.missing[i]) sorted.push_back(real_column.values[i]);
  if (sorted.empty())
    throw DataError("discretize_quantiles: column '" + real_column.name + "' is all-missing");
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> thresholds;
  for (std::uint32_t i = 1; i < bins; ++i)
    thresholds.push_back(sorted[static_cast<std::size_t>(i) * sorted.size() / bins]);

  const auto raw_bin = [&thresholds](double x) {
    return static_cast<std::uint32_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
  };

  // Ties between thresholds can leave bins empty; compact to dense codes.
  std::vector<std::uint32_t> remap(bins, UINT32_MAX);
  for (std::size_t i = 0; i < real_column.values.size(); ++i)
    if (!real_column.missing[i]) remap[raw_bin(real_column.values[i])] = 0;
  std::uint32_t next = 0;
  for (auto& r : remap)
    if (r != UINT32_MAX) r = next++;

  Column out;
  out.name = real_column.name;
  out.kind = ColumnKind::categorical;
  out.missing = real_column.missing;
  out.codes.assign(real_column.values.size(), 0);
  for (std::size_t i = 0; i < real_column.values.size(); ++i)
    if (!real_column.missing[i]) out.codes[i] = remap[raw_bin(real_column.values[i])];
  for (std::uint32_t l = 0; l < next; ++l) out.levels.push_back("q" + std::to_string(l));
  return out;
}

Column categorical_view(const AttributeTable& attrs, const std::string& name,
                        std::uint32_t quantile_bins) {
  const Column& c = attrs.column(name);
  if (c.kind == ColumnKind::categorical) return c;
  return discretize_quantiles(c, quantile_bins);
}

}  // namespace netate
