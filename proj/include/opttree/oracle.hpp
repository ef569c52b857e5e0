#pragma once

// Next-token distribution providers. The same interface stands in for both the
// target model being accelerated and the cheap draft model.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "opttree/attention.hpp"
#include "opttree/types.hpp"

namespace opttree {

// Token space of an oracle. The symbol table is optional; without one tokens
// render as bytes when the vocabulary is byte-sized and as ids otherwise.
class Vocabulary {
 public:
  explicit Vocabulary(std::size_t size,
                      std::vector<std::string> symbols = {});

  static Vocabulary bytes() { return Vocabulary(256); }

  std::size_t size() const { return size_; }
  bool contains(TokenId t) const { return t < size_; }
  std::string render(std::span<const TokenId> tokens) const;

 private:
  std::size_t size_;
  std::vector<std::string> symbols_;
};

TokenSeq encode_bytes(std::string_view text);

class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual std::size_t vocab_size() const = 0;
  // Number of trailing prefix tokens the output depends on; 0 = all of them.
  virtual std::size_t context_window() const { return 0; }
  virtual std::string describe() const = 0;

  // Throws std::invalid_argument on an empty prefix.
  Distribution next_distribution(std::span<const TokenId> prefix) const;

  // One forward pass over several continuations of a shared context. Entry i
  // is next_distribution(context ++ continuations[i]).
  virtual std::vector<Distribution> batch_next(
      std::span<const TokenId> context,
      std::span<const TokenSeq> continuations) const;

  // One forward pass over a flattened draft tree. `context` holds the tokens
  // preceding the tree root. Entry i is
  // next_distribution(context ++ root-path(i)) with the path read off the mask.
  virtual std::vector<Distribution> batch_tree_forward(
      std::span<const TokenId> context, const FlatTree& flat,
      const TreeMask& mask) const;

  // Reference for batch_tree_forward: walks parent links instead of the mask
  // and evaluates each path independently.
  std::vector<Distribution> pathwise_tree_forward(
      std::span<const TokenId> context, const FlatTree& flat) const;

  // `window` is the trailing context, already cut to context_window().
  void fill_distribution(std::span<const TokenId> window,
                         std::span<double> out) const {
    do_fill(window, out);
  }

 protected:
  virtual void do_fill(std::span<const TokenId> window,
                       std::span<double> out) const = 0;

  // Trailing window of context ++ tail for this oracle.
  void gather_window(std::span<const TokenId> context,
                     std::span<const TokenId> tail, TokenSeq& window) const;
};

using OraclePtr = std::shared_ptr<const Oracle>;

// Caller-owned seeded generator; one per logical thread.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Temperature 0 takes the argmax (lowest index on ties). Otherwise draws from
// p^(1/t), renormalized.
TokenId sample(std::span<const double> dist, double temperature, Rng& rng);

// Checks non-negativity and normalization within `tolerance`.
bool is_distribution(std::span<const double> dist, double tolerance = 1e-6);

// 0.5 * sum |p - q|
double total_variation(std::span<const double> p, std::span<const double> q);

// Uniform over the whole vocabulary regardless of prefix.
class UniformOracle final : public Oracle {
 public:
  explicit UniformOracle(std::size_t vocab) : vocab_(vocab) {}
  std::size_t vocab_size() const override { return vocab_; }
  std::size_t context_window() const override { return 1; }
  std::string describe() const override;

 protected:
  void do_fill(std::span<const TokenId>, std::span<double> out) const override;

 private:
  std::size_t vocab_;
};

// Puts all mass on (last token + stride) mod vocab.
class SuccessorOracle final : public Oracle {
 public:
  SuccessorOracle(std::size_t vocab, std::size_t stride = 1)
      : vocab_(vocab), stride_(stride) {}
  std::size_t vocab_size() const override { return vocab_; }
  std::size_t context_window() const override { return 1; }
  std::string describe() const override;

 protected:
  void do_fill(std::span<const TokenId> window,
               std::span<double> out) const override;

 private:
  std::size_t vocab_;
  std::size_t stride_;
};

// Sleeps for a fixed duration once per forward pass (single query or batch),
// then defers to the wrapped oracle. Models per-pass latency of a real network.
class DelayedOracle final : public Oracle {
 public:
  DelayedOracle(OraclePtr inner, std::chrono::microseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}

  std::size_t vocab_size() const override { return inner_->vocab_size(); }
  std::size_t context_window() const override {
    return inner_->context_window();
  }
  std::string describe() const override;

  std::vector<Distribution> batch_next(
      std::span<const TokenId> context,
      std::span<const TokenSeq> continuations) const override;
  std::vector<Distribution> batch_tree_forward(
      std::span<const TokenId> context, const FlatTree& flat,
      const TreeMask& mask) const override;

 protected:
  void do_fill(std::span<const TokenId> window,
               std::span<double> out) const override;

 private:
  void pause() const;

  OraclePtr inner_;
  std::chrono::microseconds delay_;
};

}  // namespace opttree
