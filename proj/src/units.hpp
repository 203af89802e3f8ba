#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace netate {

// Per-node observed data plus fold bookkeeping. `has_label` marks units whose
// (t, y) may enter label losses at all; fold masking is applied on top of it.
struct UnitTable {
  std::vector<std::uint8_t> treatment;
  std::vector<double> outcome;
  std::vector<std::uint32_t> fold;
  std::vector<std::uint8_t> has_label;

  std::size_t size() const { return treatment.size(); }

  bool labeled(std::size_t i) const { return has_label[i] != 0; }

  void validate() const {
    const std::size_t n = treatment.size();
    if (outcome.size() != n || fold.size() != n || has_label.size() != n)
      throw InvalidArgument("UnitTable columns have mismatched lengths");
    for (std::size_t i = 0; i < n; ++i)
      if (treatment[i] > 1) throw InvalidArgument("UnitTable treatment must be 0 or 1");
  }
};

}  // namespace netate
