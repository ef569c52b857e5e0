#include "opttree/tree_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "opttree/corpus.hpp"
#include "opttree/simd/kernels.hpp"

namespace opttree {
namespace {

struct Candidate {
  double score;
  std::uint32_t frontier_pos;
  TokenId token;
};

// Same order a NodeScoreEntry would give once attached: all candidates share a
// depth, and attaching in (frontier, token) order assigns arena indices in the
// same sequence.
bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.frontier_pos != b.frontier_pos) return a.frontier_pos < b.frontier_pos;
  return a.token < b.token;
}

std::vector<TokenSeq> frontier_paths(const DraftTree& tree,
                                     std::span<const NodeHandle> frontier) {
  std::vector<TokenSeq> paths;
  paths.reserve(frontier.size());
  for (NodeHandle h : frontier) paths.push_back(tree.path_tokens(h));
  return paths;
}

std::vector<Distribution> query_layer(const DraftTree& tree,
                                      std::span<const NodeHandle> layer,
                                      std::span<const TokenId> prefix,
                                      const Oracle& draft) {
  const auto paths = frontier_paths(tree, layer);
  return draft.batch_next(prefix, paths);
}

void require_prefix(std::span<const TokenId> prefix) {
  if (prefix.empty()) throw std::invalid_argument("draft prefix must not be empty");
}

}  // namespace

void BuilderConfig::validate() const {
  if (node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in [0,1]");
  }
  if (effective_max_depth() < 1) throw std::invalid_argument("max depth must be >= 1");
}

void TreeShape::validate() const {
  if (parents.empty() || parents[0] != -1) {
    throw std::invalid_argument("tree shape: entry 0 must be the root");
  }
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] < 0 || static_cast<std::size_t>(parents[i]) >= i) {
      throw std::invalid_argument("tree shape: entry " + std::to_string(i) +
                                  " must point at an earlier entry");
    }
  }
}

TreeShape TreeShape::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("tree shape is not valid JSON: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) {
    throw std::invalid_argument("tree shape must be a non-empty JSON array");
  }
  TreeShape shape;
  shape.parents.clear();
  for (const auto& v : doc) {
    if (v.is_null()) {
      shape.parents.push_back(-1);
    } else if (v.is_number_integer()) {
      shape.parents.push_back(v.get<std::int64_t>());
    } else {
      throw std::invalid_argument("tree shape entries must be integers or null");
    }
  }
  shape.validate();
  return shape;
}

TreeShape TreeShape::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path));
}

std::string TreeShape::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (std::int64_t p : parents) {
    if (p < 0) {
      doc.push_back(nullptr);
    } else {
      doc.push_back(p);
    }
  }
  return doc.dump();
}

TreeShape default_fixed_shape() {
  return TreeShape{{-1, 0, 0, 0, 0,                //
                    1, 1, 1, 1, 2, 2, 3, 4,        // depth 2
                    5, 5, 5, 6, 6, 7, 9,           // depth 3
                    13, 13, 14, 16,                // depth 4
                    20, 22}};                      // depth 5
}

std::vector<TokenId> top_k_tokens(std::span<const double> dist, std::size_t k) {
  std::vector<TokenId> idx(dist.size());
  std::iota(idx.begin(), idx.end(), TokenId{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](TokenId a, TokenId b) {
                      if (dist[a] != dist[b]) return dist[a] > dist[b];
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

std::size_t expand_frontier(DraftTree& tree,
                            std::span<const Distribution> frontier_dists,
                            std::size_t n) {
  const std::vector<NodeHandle> frontier = tree.layers().back();
  if (frontier_dists.size() != frontier.size()) {
    throw std::invalid_argument("expand_frontier: " +
                                std::to_string(frontier_dists.size()) +
                                " distributions for " +
                                std::to_string(frontier.size()) + " frontier nodes");
  }
  for (const Distribution& d : frontier_dists) {
    if (!is_distribution(d)) {
      throw std::invalid_argument("expand_frontier: input is not a distribution");
    }
  }

  // Keeps the best n candidates; the heap top is the worst of them.
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(&ranks_before)>
      best(&ranks_before);
  std::vector<double> scores;
  for (std::uint32_t f = 0; f < frontier.size(); ++f) {
    const DraftNode& node = tree.node(frontier[f]);
    const double base = node.parent ? node.path_score : 1.0;
    const Distribution& dist = frontier_dists[f];
    scores.resize(dist.size());
    simd::scale(dist, base, scores);
    for (std::size_t t = 0; t < scores.size(); ++t) {
      if (!(scores[t] > 0.0)) continue;
      const Candidate c{scores[t], f, static_cast<TokenId>(t)};
      if (best.size() < n) {
        best.push(c);
      } else if (ranks_before(c, best.top())) {
        best.pop();
        best.push(c);
      }
    }
  }

  std::vector<Candidate> chosen;
  chosen.reserve(best.size());
  while (!best.empty()) {
    chosen.push_back(best.top());
    best.pop();
  }
  std::sort(chosen.begin(), chosen.end(), [](const Candidate& a, const Candidate& b) {
    if (a.frontier_pos != b.frontier_pos) return a.frontier_pos < b.frontier_pos;
    return a.token < b.token;
  });
  for (const Candidate& c : chosen) {
    tree.attach_child(frontier[c.frontier_pos], c.token,
                      frontier_dists[c.frontier_pos][c.token]);
  }
  return chosen.size();
}

OptTreeResult build_opt_tree(std::span<const TokenId> prefix,
                             const Oracle& draft, const BuilderConfig& cfg) {
  require_prefix(prefix);
  cfg.validate();
  const std::size_t n = cfg.node_budget;
  const std::size_t max_depth = cfg.effective_max_depth();

  DraftTree tree(prefix.back());
  OptTreeResult result{DraftTree(prefix.back()), 0, {}};

  auto drafting_step = [&] {
    const auto dists = query_layer(tree, tree.layers().back(), prefix, draft);
    expand_frontier(tree, dists, n);
    ++result.drafting_steps;
    result.e_sub_trace.push_back(e_sub(tree, n).value);
  };

  drafting_step();
  double previous = 0.0;
  while (tree.depth() < max_depth &&
         result.e_sub_trace.back() - previous > cfg.threshold) {
    previous = result.e_sub_trace.back();
    drafting_step();
  }

  result.tree = select_top_n_subtree(tree, n);
  return result;
}

DraftTree build_binary_tree(std::span<const TokenId> prefix,
                            const Oracle& draft, std::size_t node_budget) {
  require_prefix(prefix);
  if (node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  DraftTree tree(prefix.back());
  std::vector<NodeHandle> layer{tree.root()};
  std::size_t remaining = node_budget;
  while (remaining > 0 && !layer.empty()) {
    const auto dists = query_layer(tree, layer, prefix, draft);
    std::vector<NodeHandle> next;
    for (std::size_t i = 0; i < layer.size() && remaining > 0; ++i) {
      for (TokenId t : top_k_tokens(dists[i], 2)) {
        if (remaining == 0) break;
        next.push_back(tree.attach_child(layer[i], t, dists[i][t]));
        --remaining;
      }
    }
    layer = std::move(next);
  }
  return tree;
}

DraftTree build_fixed_tree(std::span<const TokenId> prefix, const Oracle& draft,
                           const TreeShape& shape) {
  require_prefix(prefix);
  shape.validate();
  const std::size_t count = shape.parents.size();

  std::vector<std::uint32_t> depth(count, 0);
  std::vector<std::size_t> fanout(count, 0);
  std::uint32_t max_depth = 0;
  for (std::size_t i = 1; i < count; ++i) {
    const auto p = static_cast<std::size_t>(shape.parents[i]);
    depth[i] = depth[p] + 1;
    ++fanout[p];
    max_depth = std::max(max_depth, depth[i]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (fanout[i] > draft.vocab_size()) {
      throw std::invalid_argument("tree shape: fan-out exceeds vocabulary");
    }
  }

  DraftTree tree(prefix.back());
  std::vector<NodeHandle> handle(count);
  handle[0] = tree.root();
  std::vector<std::vector<TokenId>> ranked(count);
  std::vector<Distribution> dist_of(count);
  std::vector<std::size_t> used(count, 0);

  for (std::uint32_t d = 0; d < max_depth; ++d) {
    // One draft pass over the parents at depth d.
    std::vector<std::size_t> parents;
    for (std::size_t i = 0; i < count; ++i) {
      if (depth[i] == d && fanout[i] > 0) parents.push_back(i);
    }
    std::vector<NodeHandle> layer;
    for (std::size_t i : parents) layer.push_back(handle[i]);
    auto dists = query_layer(tree, layer, prefix, draft);
    for (std::size_t j = 0; j < parents.size(); ++j) {
      ranked[parents[j]] = top_k_tokens(dists[j], fanout[parents[j]]);
      dist_of[parents[j]] = std::move(dists[j]);
    }
    for (std::size_t i = 1; i < count; ++i) {
      if (depth[i] != d + 1) continue;
      const auto p = static_cast<std::size_t>(shape.parents[i]);
      const TokenId t = ranked[p][used[p]++];
      handle[i] = tree.attach_child(handle[p], t, dist_of[p][t]);
    }
  }
  return tree;
}

DraftTree build_sequence_draft(std::span<const TokenId> prefix,
                               const Oracle& draft, std::size_t k,
                               std::size_t m) {
  require_prefix(prefix);
  if (k < 1 || m < 1) throw std::invalid_argument("sequence draft needs k >= 1 and m >= 1");
  if (k > draft.vocab_size()) throw std::invalid_argument("sequence count exceeds vocabulary");

  DraftTree tree(prefix.back());
  const NodeHandle root_layer[] = {tree.root()};
  const auto root_dist = query_layer(tree, root_layer, prefix, draft);
  std::vector<NodeHandle> tips;
  for (TokenId t : top_k_tokens(root_dist[0], k)) {
    tips.push_back(tree.attach_child(tree.root(), t, root_dist[0][t]));
  }
  for (std::size_t step = 1; step < m; ++step) {
    const auto dists = query_layer(tree, tips, prefix, draft);
    for (std::size_t j = 0; j < tips.size(); ++j) {
      const TokenId t = top_k_tokens(dists[j], 1).front();
      tips[j] = tree.attach_child(tips[j], t, dists[j][t]);
    }
  }
  return tree;
}

}  // namespace opttree
