#include "opttree/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "opttree/simd/kernels.hpp"

namespace opttree {
namespace {

constexpr std::uint64_t kTargetSalt = 0x7a3d1f0c5e9b2468ULL;
constexpr std::uint64_t kNoiseSalt = 0x1c6e9a4f82d053b7ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1), never 0 so the Gumbel transform stays finite.
double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (vocab < 2) throw std::invalid_argument("synthetic vocab must be >= 2");
  if (context < 1) throw std::invalid_argument("synthetic context must be >= 1");
  if (!(sharpness > 0.0)) throw std::invalid_argument("sharpness must be positive");
  if (!(agreement >= 0.0 && agreement <= 1.0)) {
    throw std::invalid_argument("agreement must lie in [0,1]");
  }
  if (table_rows < 1) throw std::invalid_argument("table_rows must be >= 1");
}

std::string SyntheticSpec::describe() const {
  std::ostringstream os;
  os << "synthetic(vocab=" << vocab << ",context=" << context
     << ",sharpness=" << sharpness << ",agreement=" << agreement
     << ",seed=" << seed << ",rows=" << table_rows << ")";
  return os.str();
}

SyntheticTable::SyntheticTable(const SyntheticSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t v = spec_.vocab;
  rows_.resize(spec_.table_rows * v);
  std::vector<double> logits(v);
  for (std::size_t r = 0; r < spec_.table_rows; ++r) {
    std::uint64_t state = splitmix64(spec_.seed ^ splitmix64(r + 1));
    for (std::size_t i = 0; i < v; ++i) {
      state = splitmix64(state);
      const double gumbel = -std::log(-std::log(open_unit(state)));
      logits[i] = spec_.sharpness * gumbel;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    std::span<double> row(&rows_[r * v], v);
    for (std::size_t i = 0; i < v; ++i) row[i] = std::exp(logits[i] - top);
    simd::divide(row, simd::sum(row));
  }
}

void SyntheticTable::fill(std::span<const TokenId> window, std::uint64_t salt,
                          std::span<double> out) const {
  std::uint64_t h = splitmix64(spec_.seed ^ salt);
  for (TokenId t : window) h = splitmix64(h ^ (static_cast<std::uint64_t>(t) + 1));
  h = splitmix64(h ^ window.size());

  const std::size_t v = spec_.vocab;
  const std::size_t row = static_cast<std::size_t>(h % spec_.table_rows);
  const std::size_t shift = static_cast<std::size_t>((h >> 32) % v);
  const double* src = &rows_[row * v];
  // out[i] = row[(i + shift) % v]
  std::copy(src + shift, src + v, out.begin());
  std::copy(src, src + shift, out.begin() + static_cast<std::ptrdiff_t>(v - shift));
}

SyntheticOracle::SyntheticOracle(std::shared_ptr<const SyntheticTable> table,
                                 Role role)
    : table_(std::move(table)), role_(role) {}

std::string SyntheticOracle::describe() const {
  return std::string(role_ == Role::kTarget ? "target:" : "draft:") +
         table_->spec().describe();
}

void SyntheticOracle::do_fill(std::span<const TokenId> window,
                              std::span<double> out) const {
  table_->fill(window, kTargetSalt, out);
  if (role_ == Role::kTarget) return;

  const double a = table_->spec().agreement;
  std::vector<double> noise(out.size());
  table_->fill(window, kNoiseSalt, noise);
  simd::mix(a, out, 1.0 - a, noise, out);
}

SyntheticPair make_synthetic_pair(const SyntheticSpec& spec) {
  auto table = std::make_shared<const SyntheticTable>(spec);
  return {
      std::make_shared<SyntheticOracle>(table, SyntheticOracle::Role::kTarget),
      std::make_shared<SyntheticOracle>(table, SyntheticOracle::Role::kDraft),
  };
}

}  // namespace opttree
