#pragma once

// Draft, verify, accept.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opttree/draft_tree.hpp"
#include "opttree/oracle.hpp"
#include "opttree/tree_builder.hpp"

namespace opttree {

enum class BuilderKind { kOpt, kBinary, kFixed, kSequence, kNone };

std::string_view builder_name(BuilderKind kind);
// Throws std::invalid_argument on an unknown name.
BuilderKind parse_builder(std::string_view name);

struct DecodeConfig {
  std::size_t node_budget = 50;
  double threshold = 0.7;
  std::size_t max_depth = 0;  // 0: same as node_budget
  double temperature = 0.0;
  BuilderKind builder = BuilderKind::kOpt;
  TreeShape shape = default_fixed_shape();
  std::size_t seq_k = 2;
  std::size_t seq_m = 4;
  std::size_t max_new_tokens = 64;
  std::uint64_t seed = 0;

  BuilderConfig builder_config() const {
    return {node_budget, threshold, max_depth};
  }
  // Allows max_new_tokens == 0 (nothing to generate).
  void validate() const;
};

struct VerifyResult {
  // Root-excluded tokens along the accepted branch; may be empty.
  TokenSeq accepted;
  // The target's own token after the accepted branch.
  TokenId bonus = 0;

  std::size_t acceptance_length() const { return accepted.size() + 1; }
};

struct StepResult {
  VerifyResult verify;
  // E(A) of the tree that was verified.
  double expectation = 0.0;
  std::size_t tree_nodes = 0;
  std::size_t tree_depth = 0;
  std::size_t drafting_steps = 0;
  double draft_seconds = 0.0;
  double verify_seconds = 0.0;
};

// Walks from the root following the target's argmax at each node while a child
// carries it. `dists` is aligned with flatten(tree).
VerifyResult verify_greedy(const DraftTree& tree, std::span<const Distribution> dists);

// Same walk, but the reference token at each visited node is sampled from the
// target distribution at `temperature` (> 0).
VerifyResult verify_sampled(const DraftTree& tree, std::span<const Distribution> dists,
                            double temperature, Rng& rng);

// Builds the draft tree for `sequence`, verifies it against the target, and
// appends the accepted tokens plus the bonus token to `sequence`.
StepResult decode_step(TokenSeq& sequence, const Oracle& target,
                       const Oracle& draft, const DecodeConfig& cfg, Rng& rng);

struct DecodeRun {
  // Exactly max_new_tokens tokens; the last step may be truncated.
  TokenSeq generated;
  std::vector<StepResult> steps;

  // Sum of acceptance lengths over steps, divided by the step count.
  double mean_acceptance_length() const;
  double mean_expectation() const;
};

// Throws std::invalid_argument when the oracles disagree on the vocabulary or
// the prompt holds out-of-vocabulary tokens.
DecodeRun run_decoding(std::span<const TokenId> prompt, const Oracle& target,
                       const Oracle& draft, const DecodeConfig& cfg);

// Plain one-token-per-step decoding of the target.
TokenSeq autoregressive_reference(std::span<const TokenId> prompt,
                                  const Oracle& target, double temperature,
                                  std::size_t max_new_tokens, std::uint64_t seed);

}  // namespace opttree
