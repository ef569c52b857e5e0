#pragma once

#include <cstdint>
#include <vector>

namespace opttree {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;
// Probability vector over a vocabulary, indexed by TokenId.
using Distribution = std::vector<double>;

}  // namespace opttree
