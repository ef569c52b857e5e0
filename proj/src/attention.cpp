#include "opttree/attention.hpp"

#include <stdexcept>

namespace opttree {

std::size_t TreeMask::row_count(std::size_t row) const {
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) count += visible[row * n + j];
  return count;
}

std::string TreeMask::dump() const {
  std::string out;
  out.reserve(n * (n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.push_back(at(i, j) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

FlatTree flatten(const DraftTree& tree) {
  FlatTree flat;
  const std::size_t n = tree.size();
  flat.tokens.reserve(n);
  flat.parent_index.reserve(n);
  flat.depth.reserve(n);
  flat.source.reserve(n);

  // Layers are already in arena order, which gives the BFS order directly.
  std::vector<std::size_t> position(n);
  for (const auto& layer : tree.layers()) {
    for (NodeHandle h : layer) {
      const DraftNode& node = tree.node(h);
      position[h.index] = flat.tokens.size();
      flat.tokens.push_back(node.token);
      flat.depth.push_back(node.depth);
      flat.source.push_back(h);
      if (node.parent) {
        flat.parent_index.emplace_back(position[node.parent->index]);
      } else {
        flat.parent_index.emplace_back(std::nullopt);
      }
    }
  }
  return flat;
}

TreeMask build_mask(const FlatTree& flat) {
  TreeMask mask;
  mask.n = flat.size();
  mask.visible.assign(mask.n * mask.n, 0);
  mask.position_offset.assign(flat.depth.begin(), flat.depth.end());

  for (std::size_t i = 0; i < mask.n; ++i) {
    mask.visible[i * mask.n + i] = 1;
    if (const auto& p = flat.parent_index[i]) {
      if (*p >= i) throw std::invalid_argument("build_mask: parent after child");
      // Parent row is complete already; inherit it.
      const std::uint8_t* src = &mask.visible[*p * mask.n];
      std::uint8_t* dst = &mask.visible[i * mask.n];
      for (std::size_t j = 0; j <= *p; ++j) dst[j] |= src[j];
    }
  }
  return mask;
}

std::vector<TokenId> masked_path(const FlatTree& flat, const TreeMask& mask,
                                 std::size_t i) {
  std::vector<TokenId> path;
  path.reserve(flat.depth[i] + 1);
  for (std::size_t j = 0; j <= i; ++j) {
    if (mask.at(i, j)) path.push_back(flat.tokens[j]);
  }
  return path;
}

}  // namespace opttree
