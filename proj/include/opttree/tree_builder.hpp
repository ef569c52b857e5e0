#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "opttree/draft_tree.hpp"
#include "opttree/oracle.hpp"

namespace opttree {

struct BuilderConfig {
  std::size_t node_budget = 50;
  // Minimum E_sub gain a drafting step must deliver for drafting to continue.
  double threshold = 0.7;
  // 0 means "same as node_budget".
  std::size_t max_depth = 0;

  std::size_t effective_max_depth() const {
    return max_depth == 0 ? node_budget : max_depth;
  }
  void validate() const;
};

// Fixed draft topology given as parent indices. Entry 0 is the root (-1);
// every other entry points at an earlier entry.
struct TreeShape {
  std::vector<std::int64_t> parents{-1};

  std::size_t node_count() const { return parents.size() - 1; }
  void validate() const;

  // JSON array of parent indices with null for the root: [null,0,0,1].
  static TreeShape from_json(const std::string& text);
  static TreeShape load(const std::filesystem::path& path);
  std::string to_json() const;

  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

// Hand-picked 25-node shape, wide near the root and thinner with depth. Also
// shipped as data/default_tree_25.json.
TreeShape default_fixed_shape();

// Tokens ordered by descending probability, lowest index first on ties.
std::vector<TokenId> top_k_tokens(std::span<const double> dist, std::size_t k);

// Scores every (frontier node, token) pair as frontier path score times token
// probability and attaches the best `n` as a new deepest layer. Candidates with
// zero probability are never attached. `frontier_dists` is aligned with
// tree.layers().back(). Returns the number of nodes attached.
std::size_t expand_frontier(DraftTree& tree,
                            std::span<const Distribution> frontier_dists,
                            std::size_t n);

struct OptTreeResult {
  DraftTree tree;
  // Number of draft forward passes (expansions), including the first one.
  std::size_t drafting_steps = 0;
  // E_sub(T, n) after each expansion.
  std::vector<double> e_sub_trace;
};

// Grows the tree layer by layer while depth < max_depth and the E_sub gain of
// the last step exceeds the threshold, then keeps the best n nodes.
OptTreeResult build_opt_tree(std::span<const TokenId> prefix,
                             const Oracle& draft, const BuilderConfig& cfg);

// Level-order complete binary tree: each node takes its top-2 draft tokens
// until the budget runs out.
DraftTree build_binary_tree(std::span<const TokenId> prefix,
                            const Oracle& draft, std::size_t node_budget);

// The k-th child of a node receives that node's k-th most probable token.
DraftTree build_fixed_tree(std::span<const TokenId> prefix, const Oracle& draft,
                           const TreeShape& shape);

// k greedy chains of length m, headed by the k most probable first tokens.
DraftTree build_sequence_draft(std::span<const TokenId> prefix,
                               const Oracle& draft, std::size_t k,
                               std::size_t m);

}  // namespace opttree
