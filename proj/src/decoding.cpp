#include "opttree/decoding.hpp"

#include <chrono>
#include <stdexcept>

#include "opttree/attention.hpp"
#include "opttree/simd/kernels.hpp"

namespace opttree {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename PickToken>
VerifyResult walk_tree(const DraftTree& tree, std::span<const Distribution> dists,
                       PickToken pick) {
  if (dists.size() != tree.size()) {
    throw std::invalid_argument("verify: " + std::to_string(dists.size()) +
                                " distributions for " + std::to_string(tree.size()) +
                                " tree nodes");
  }
  const FlatTree flat = flatten(tree);
  std::vector<std::size_t> position(tree.size());
  for (std::size_t i = 0; i < flat.size(); ++i) position[flat.source[i].index] = i;

  VerifyResult result;
  NodeHandle at = tree.root();
  for (;;) {
    const TokenId truth = pick(dists[position[at.index]]);
    const auto child = tree.find_child(at, truth);
    if (!child) {
      result.bonus = truth;
      return result;
    }
    result.accepted.push_back(truth);
    at = *child;
  }
}

struct BuiltTree {
  DraftTree tree;
  std::size_t drafting_steps;
};

BuiltTree build_tree(std::span<const TokenId> prefix, const Oracle& draft,
                     const DecodeConfig& cfg) {
  switch (cfg.builder) {
    case BuilderKind::kOpt: {
      auto r = build_opt_tree(prefix, draft, cfg.builder_config());
      return {std::move(r.tree), r.drafting_steps};
    }
    case BuilderKind::kBinary: {
      auto t = build_binary_tree(prefix, draft, cfg.node_budget);
      const std::size_t passes = t.depth();
      return {std::move(t), passes};
    }
    case BuilderKind::kFixed: {
      auto t = build_fixed_tree(prefix, draft, cfg.shape);
      const std::size_t passes = t.depth();
      return {std::move(t), passes};
    }
    case BuilderKind::kSequence: {
      auto t = build_sequence_draft(prefix, draft, cfg.seq_k, cfg.seq_m);
      const std::size_t passes = t.depth();
      return {std::move(t), passes};
    }
    case BuilderKind::kNone:
      break;
  }
  return {DraftTree(prefix.back()), 0};
}

}  // namespace

std::string_view builder_name(BuilderKind kind) {
  switch (kind) {
    case BuilderKind::kOpt:
      return "opt";
    case BuilderKind::kBinary:
      return "binary";
    case BuilderKind::kFixed:
      return "fixed";
    case BuilderKind::kSequence:
      return "sequence";
    case BuilderKind::kNone:
      return "none";
  }
  return "unknown";
}

BuilderKind parse_builder(std::string_view name) {
  for (BuilderKind k : {BuilderKind::kOpt, BuilderKind::kBinary, BuilderKind::kFixed,
                        BuilderKind::kSequence, BuilderKind::kNone}) {
    if (builder_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown builder '" + std::string(name) + "'");
}

void DecodeConfig::validate() const {
  if (builder == BuilderKind::kOpt) builder_config().validate();
  if (node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (builder == BuilderKind::kFixed) shape.validate();
  if (builder == BuilderKind::kSequence && (seq_k < 1 || seq_m < 1)) {
    throw std::invalid_argument("sequence draft needs k >= 1 and m >= 1");
  }
}

VerifyResult verify_greedy(const DraftTree& tree, std::span<const Distribution> dists) {
  return walk_tree(tree, dists, [](const Distribution& d) {
    return static_cast<TokenId>(simd::argmax(d));
  });
}

VerifyResult verify_sampled(const DraftTree& tree, std::span<const Distribution> dists,
                            double temperature, Rng& rng) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("verify_sampled: temperature must be positive");
  }
  return walk_tree(tree, dists, [&](const Distribution& d) {
    return sample(d, temperature, rng);
  });
}

StepResult decode_step(TokenSeq& sequence, const Oracle& target,
                       const Oracle& draft, const DecodeConfig& cfg, Rng& rng) {
  if (sequence.empty()) throw std::invalid_argument("decode_step: empty prefix");

  StepResult step;
  const auto draft_start = Clock::now();
  BuiltTree built = build_tree(sequence, draft, cfg);
  step.draft_seconds = seconds_since(draft_start);

  const auto verify_start = Clock::now();
  const FlatTree flat = flatten(built.tree);
  const TreeMask mask = build_mask(flat);
  const std::span<const TokenId> context(sequence.data(), sequence.size() - 1);
  const auto dists = target.batch_tree_forward(context, flat, mask);
  step.verify = cfg.temperature > 0.0
                    ? verify_sampled(built.tree, dists, cfg.temperature, rng)
                    : verify_greedy(built.tree, dists);
  step.verify_seconds = seconds_since(verify_start);

  step.expectation = expected_acceptance(built.tree);
  step.tree_nodes = built.tree.non_root_count();
  step.tree_depth = built.tree.depth();
  step.drafting_steps = built.drafting_steps;

  sequence.insert(sequence.end(), step.verify.accepted.begin(),
                  step.verify.accepted.end());
  sequence.push_back(step.verify.bonus);
  return step;
}

double DecodeRun::mean_acceptance_length() const {
  if (steps.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& s : steps) total += s.verify.acceptance_length();
  return static_cast<double>(total) / static_cast<double>(steps.size());
}

double DecodeRun::mean_expectation() const {
  if (steps.empty()) return 0.0;
  long double total = 0.0L;
  for (const auto& s : steps) total += s.expectation;
  return static_cast<double>(total / static_cast<long double>(steps.size()));
}

DecodeRun run_decoding(std::span<const TokenId> prompt, const Oracle& target,
                       const Oracle& draft, const DecodeConfig& cfg) {
  cfg.validate();
  if (prompt.empty()) throw std::invalid_argument("prompt must not be empty");
  if (target.vocab_size() != draft.vocab_size()) {
    throw std::invalid_argument("target and draft vocabularies differ (" +
                                std::to_string(target.vocab_size()) + " vs " +
                                std::to_string(draft.vocab_size()) + ")");
  }
  for (TokenId t : prompt) {
    if (t >= target.vocab_size()) {
      throw std::invalid_argument("prompt token " + std::to_string(t) +
                                  " outside vocabulary");
    }
  }

  Rng rng(cfg.seed);
  TokenSeq sequence(prompt.begin(), prompt.end());
  DecodeRun run;
  while (sequence.size() - prompt.size() < cfg.max_new_tokens) {
    run.steps.push_back(decode_step(sequence, target, draft, cfg, rng));
  }
  const auto first = sequence.begin() + static_cast<std::ptrdiff_t>(prompt.size());
  run.generated.assign(first, first + static_cast<std::ptrdiff_t>(cfg.max_new_tokens));
  return run;
}

TokenSeq autoregressive_reference(std::span<const TokenId> prompt,
                                  const Oracle& target, double temperature,
                                  std::size_t max_new_tokens, std::uint64_t seed) {
  if (prompt.empty()) throw std::invalid_argument("prompt must not be empty");
  Rng rng(seed);
  TokenSeq sequence(prompt.begin(), prompt.end());
  TokenSeq generated;
  generated.reserve(max_new_tokens);
  while (generated.size() < max_new_tokens) {
    const TokenId t = sample(target.next_distribution(sequence), temperature, rng);
    sequence.push_back(t);
    generated.push_back(t);
  }
  return generated;
}

}  // namespace opttree
