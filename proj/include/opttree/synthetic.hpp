#pragma once

// Synthetic target/draft pairs with a tunable agreement knob.
//
// The target's next-token distribution is a pure function of the seed and the
// last `context` tokens. A bank of random softmax(sharpness * Gumbel) rows is
// drawn once; each context hashes to a row and a cyclic rotation of it. The
// draft mixes the target with an independent noise distribution:
//   draft = agreement * target + (1 - agreement) * noise.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "opttree/oracle.hpp"

namespace opttree {

struct SyntheticSpec {
  std::size_t vocab = 512;
  std::size_t context = 2;
  double sharpness = 3.0;
  double agreement = 0.8;
  std::uint64_t seed = 1;
  std::size_t table_rows = 4096;

  void validate() const;
  std::string describe() const;
};

// Row bank shared between the oracles of one pair.
class SyntheticTable {
 public:
  explicit SyntheticTable(const SyntheticSpec& spec);

  const SyntheticSpec& spec() const { return spec_; }
  // Distribution for `window` under the stream identified by `salt`.
  void fill(std::span<const TokenId> window, std::uint64_t salt,
            std::span<double> out) const;

 private:
  SyntheticSpec spec_;
  std::vector<double> rows_;  // table_rows x vocab
};

class SyntheticOracle final : public Oracle {
 public:
  enum class Role { kTarget, kDraft };

  SyntheticOracle(std::shared_ptr<const SyntheticTable> table, Role role);

  std::size_t vocab_size() const override { return table_->spec().vocab; }
  std::size_t context_window() const override { return table_->spec().context; }
  std::string describe() const override;

 protected:
  void do_fill(std::span<const TokenId> window,
               std::span<double> out) const override;

 private:
  std::shared_ptr<const SyntheticTable> table_;
  Role role_;
};

struct SyntheticPair {
  OraclePtr target;
  OraclePtr draft;
};

SyntheticPair make_synthetic_pair(const SyntheticSpec& spec);

}  // namespace opttree
