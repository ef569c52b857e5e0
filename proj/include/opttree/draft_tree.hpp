#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "opttree/types.hpp"

namespace opttree {

// Index of a node inside a DraftTree arena.
struct NodeHandle {
  std::uint32_t index = 0;

  friend constexpr auto operator<=>(NodeHandle, NodeHandle) = default;
};

struct DraftNode {
  TokenId token = 0;
  // Draft probability of `token` given the root-to-parent path.
  double cond_prob = 1.0;
  // Product of cond_prob along the root path. The root carries +inf so it
  // outranks everything; it acts as the multiplicative identity for children.
  double path_score = std::numeric_limits<double>::infinity();
  std::optional<NodeHandle> parent;
  std::uint32_t depth = 0;
};

// Ranking key for top-n selection: higher path score first, then shallower,
// then earlier in the arena.
struct NodeScoreEntry {
  NodeHandle handle;
  double path_score = 0.0;
  std::uint32_t depth = 0;

  // True when `a` ranks strictly before `b`.
  static bool before(const NodeScoreEntry& a, const NodeScoreEntry& b) {
    if (a.path_score != b.path_score) return a.path_score > b.path_score;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.handle.index < b.handle.index;
  }
};

// Arena of draft nodes. Parents always precede their children, siblings carry
// distinct tokens, and layers()[d] lists the nodes at depth d in arena order.
class DraftTree {
 public:
  // The root holds the last token of the current prefix.
  explicit DraftTree(TokenId root_token);

  NodeHandle root() const { return NodeHandle{0}; }

  // Throws std::invalid_argument on an unknown parent, a probability outside
  // [0, 1], or a token already used by a sibling.
  NodeHandle attach_child(NodeHandle parent, TokenId token, double cond_prob);

  const DraftNode& node(NodeHandle h) const { return nodes_.at(h.index); }
  std::span<const DraftNode> nodes() const { return nodes_; }
  std::span<const NodeHandle> children(NodeHandle h) const {
    return children_.at(h.index);
  }
  std::optional<NodeHandle> find_child(NodeHandle parent, TokenId token) const;

  const std::vector<std::vector<NodeHandle>>& layers() const { return layers_; }

  // Including the root.
  std::size_t size() const { return nodes_.size(); }
  std::size_t non_root_count() const { return nodes_.size() - 1; }
  // Depth of the deepest node; 0 for a root-only tree.
  std::size_t depth() const { return layers_.size() - 1; }

  // Tokens from the first child of the root down to `h`, root excluded.
  std::vector<TokenId> path_tokens(NodeHandle h) const;

  // Path-ranked entries of every non-root node, in arena order.
  std::vector<NodeScoreEntry> score_entries() const;

 private:
  std::vector<DraftNode> nodes_;
  std::vector<std::vector<NodeHandle>> children_;
  std::vector<std::vector<NodeHandle>> layers_;
};

struct SubtreeSelection {
  double value = 0.0;
  // Selected non-root nodes in arena order.
  std::vector<NodeHandle> nodes;
};

// Sum of path scores over all non-root nodes: the expected acceptance length.
double expected_acceptance(const DraftTree& tree);

// Best expected acceptance over rooted subtrees with n non-root nodes, which is
// realized by the n highest-ranked nodes. Fewer are returned when the tree is
// smaller. The selection plus the root is always connected.
SubtreeSelection e_sub(const DraftTree& tree, std::size_t n);

// Copy of the tree restricted to the root and the e_sub selection. Arena order,
// tokens and conditional probabilities are preserved.
DraftTree select_top_n_subtree(const DraftTree& tree, std::size_t n);

// One root-to-node token path per non-root node, in arena order.
std::vector<std::vector<TokenId>> root_chains(const DraftTree& tree);

// Sum of path scores of `nodes` in the given order, accumulated in long double.
double sum_path_scores(const DraftTree& tree, std::span<const NodeHandle> nodes);

}  // namespace opttree
