#pragma once

#include <string>

#include "rpg/io.hpp"
#include "rpg/knowledge.hpp"

namespace rpg::test {

inline std::string fixture(const std::string& name) {
  return std::string(RPG_FIXTURE_DIR) + "/" + name;
}

inline HybridContext load_one(const std::string& name) {
  return load_contexts(fixture(name)).at(0);
}

// First and last token of cell (row, col).
inline std::pair<int, int> cell_tokens(const LinearizedInput& input, int row, int col) {
  for (const auto& r : input.regions) {
    if (r.provenance.kind == RegionKind::TableCell && r.provenance.row == row &&
        r.provenance.col == col) {
      return {r.first, r.last};
    }
  }
  return {-1, -1};
}

}  // namespace rpg::test
