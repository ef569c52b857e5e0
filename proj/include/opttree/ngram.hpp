#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "opttree/oracle.hpp"

namespace opttree {

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& seq) const noexcept;
};

// Count-based n-gram model with additive smoothing. `order` is the number of
// conditioning tokens, so order 1 is a bigram model and order 0 a unigram one.
// Prefixes shorter than `order` use the shorter contexts seen at the start of
// the training corpus.
class NgramModel final : public Oracle {
 public:
  struct ContextCounts {
    std::uint64_t total = 0;
    // Sorted by token.
    std::vector<std::pair<TokenId, std::uint64_t>> counts;
  };

  NgramModel(std::size_t order, double smoothing, std::size_t vocab_size);

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t context_window() const override { return order_ == 0 ? 1 : order_; }
  std::string describe() const override;

  std::size_t order() const { return order_; }
  double smoothing() const { return smoothing_; }
  std::size_t context_count() const { return table_.size(); }
  const ContextCounts* find(const TokenSeq& context) const;

  void add(const TokenSeq& context, TokenId token, std::uint64_t count = 1);

  // JSON dump of all counts; see docs/model-format.md.
  std::string to_json() const;
  static NgramModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static NgramModel load(const std::filesystem::path& path);

  friend bool operator==(const NgramModel& a, const NgramModel& b);

 protected:
  void do_fill(std::span<const TokenId> window,
               std::span<double> out) const override;

 private:
  std::size_t order_;
  double smoothing_;
  std::size_t vocab_size_;
  std::unordered_map<TokenSeq, ContextCounts, TokenSeqHash> table_;
};

// Slides a window over the corpus. Throws std::invalid_argument when the corpus
// is not longer than `order`, the smoothing constant is not positive, or a
// token is outside the vocabulary.
NgramModel train_ngram(std::span<const TokenId> corpus, std::size_t order,
                       double smoothing, std::size_t vocab_size = 256);

}  // namespace opttree
