#include "opttree/draft_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace opttree {

DraftTree::DraftTree(TokenId root_token) {
  nodes_.push_back(DraftNode{root_token, 1.0,
                             std::numeric_limits<double>::infinity(),
                             std::nullopt, 0});
  children_.emplace_back();
  layers_.push_back({NodeHandle{0}});
}

NodeHandle DraftTree::attach_child(NodeHandle parent, TokenId token,
                                   double cond_prob) {
  if (parent.index >= nodes_.size()) {
    throw std::invalid_argument("attach_child: unknown parent " +
                                std::to_string(parent.index));
  }
  if (!(cond_prob >= 0.0 && cond_prob <= 1.0)) {
    throw std::invalid_argument("attach_child: probability outside [0,1]: " +
                                std::to_string(cond_prob));
  }
  if (find_child(parent, token)) {
    throw std::invalid_argument("attach_child: duplicate sibling token " +
                                std::to_string(token));
  }

  const DraftNode& p = nodes_[parent.index];
  const double base = p.parent ? p.path_score : 1.0;
  const std::uint32_t depth = p.depth + 1;
  const NodeHandle h{static_cast<std::uint32_t>(nodes_.size())};

  nodes_.push_back(DraftNode{token, cond_prob, base * cond_prob, parent, depth});
  children_.emplace_back();
  children_[parent.index].push_back(h);
  if (layers_.size() <= depth) layers_.resize(depth + 1);
  layers_[depth].push_back(h);
  return h;
}

std::optional<NodeHandle> DraftTree::find_child(NodeHandle parent,
                                                TokenId token) const {
  for (NodeHandle c : children_.at(parent.index)) {
    if (nodes_[c.index].token == token) return c;
  }
  return std::nullopt;
}

std::vector<TokenId> DraftTree::path_tokens(NodeHandle h) const {
  std::vector<TokenId> path;
  const DraftNode* n = &nodes_.at(h.index);
  while (n->parent) {
    path.push_back(n->token);
    n = &nodes_[n->parent->index];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<NodeScoreEntry> DraftTree::score_entries() const {
  std::vector<NodeScoreEntry> entries;
  entries.reserve(non_root_count());
  for (std::uint32_t i = 1; i < nodes_.size(); ++i) {
    entries.push_back({NodeHandle{i}, nodes_[i].path_score, nodes_[i].depth});
  }
  return entries;
}

double sum_path_scores(const DraftTree& tree,
                       std::span<const NodeHandle> nodes) {
  long double total = 0.0L;
  for (NodeHandle h : nodes) total += tree.node(h).path_score;
  return static_cast<double>(total);
}

double expected_acceptance(const DraftTree& tree) {
  long double total = 0.0L;
  const auto nodes = tree.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) total += nodes[i].path_score;
  return static_cast<double>(total);
}

SubtreeSelection e_sub(const DraftTree& tree, std::size_t n) {
  auto entries = tree.score_entries();
  const std::size_t take = std::min(n, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + take, entries.end(),
                    NodeScoreEntry::before);

  SubtreeSelection sel;
  sel.nodes.reserve(take);
  for (std::size_t i = 0; i < take; ++i) sel.nodes.push_back(entries[i].handle);
  std::sort(sel.nodes.begin(), sel.nodes.end());
  sel.value = sum_path_scores(tree, sel.nodes);
  return sel;
}

DraftTree select_top_n_subtree(const DraftTree& tree, std::size_t n) {
  const SubtreeSelection sel = e_sub(tree, n);
  DraftTree out(tree.node(tree.root()).token);

  // Old arena index -> new handle; only kept nodes are ever looked up.
  std::vector<NodeHandle> remap(tree.size());
  remap[0] = out.root();
  for (NodeHandle h : sel.nodes) {
    const DraftNode& node = tree.node(h);
    remap[h.index] = out.attach_child(remap[node.parent->index], node.token,
                                      node.cond_prob);
  }
  return out;
}

std::vector<std::vector<TokenId>> root_chains(const DraftTree& tree) {
  std::vector<std::vector<TokenId>> chains;
  chains.reserve(tree.non_root_count());
  for (std::uint32_t i = 1; i < tree.size(); ++i) {
    chains.push_back(tree.path_tokens(NodeHandle{i}));
  }
  return chains;
}

}  // namespace opttree
