#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opttree/draft_tree.hpp"

namespace opttree {

// A draft tree laid out in breadth-first verification order, root first.
struct FlatTree {
  std::vector<TokenId> tokens;
  std::vector<std::optional<std::size_t>> parent_index;
  std::vector<std::uint32_t> depth;
  // Arena handle of each entry in the source tree.
  std::vector<NodeHandle> source;

  std::size_t size() const { return tokens.size(); }
};

// Dense ancestor-or-self visibility. Row i marks the entries that position i
// may attend to; all nodes at the same depth share a position offset.
struct TreeMask {
  std::size_t n = 0;
  std::vector<std::uint8_t> visible;  // row-major n x n
  std::vector<std::uint32_t> position_offset;

  bool at(std::size_t row, std::size_t col) const {
    return visible[row * n + col] != 0;
  }
  std::size_t row_count(std::size_t row) const;

  // Rows of '0'/'1' characters, one line per entry.
  std::string dump() const;
};

// BFS order, stable within a layer by arena index.
FlatTree flatten(const DraftTree& tree);

TreeMask build_mask(const FlatTree& flat);

// Tokens of entry i's root path, root included, recovered from the mask row.
std::vector<TokenId> masked_path(const FlatTree& flat, const TreeMask& mask,
                                 std::size_t i);

}  // namespace opttree
