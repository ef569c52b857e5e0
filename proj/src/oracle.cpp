#include "opttree/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "opttree/simd/kernels.hpp"

namespace opttree {

Vocabulary::Vocabulary(std::size_t size, std::vector<std::string> symbols)
    : size_(size), symbols_(std::move(symbols)) {
  if (size_ < 2) throw std::invalid_argument("vocabulary needs at least 2 tokens");
  if (!symbols_.empty() && symbols_.size() != size_) {
    throw std::invalid_argument("symbol table size does not match vocabulary");
  }
}

std::string Vocabulary::render(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (!symbols_.empty()) {
      out += symbols_.at(t);
    } else if (size_ <= 256 && t < 256) {
      out.push_back(static_cast<char>(t));
    } else {
      out += "<" + std::to_string(t) + ">";
    }
  }
  return out;
}

TokenSeq encode_bytes(std::string_view text) {
  TokenSeq out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(c);
  return out;
}

void Oracle::gather_window(std::span<const TokenId> context,
                           std::span<const TokenId> tail,
                           TokenSeq& window) const {
  const std::size_t total = context.size() + tail.size();
  const std::size_t w = context_window();
  const std::size_t keep = (w == 0) ? total : std::min(w, total);
  window.clear();
  window.reserve(keep);
  const std::size_t skip = total - keep;
  if (skip < context.size()) {
    window.insert(window.end(), context.begin() + skip, context.end());
    window.insert(window.end(), tail.begin(), tail.end());
  } else {
    const std::size_t tail_skip = skip - context.size();
    window.insert(window.end(), tail.begin() + tail_skip, tail.end());
  }
}

Distribution Oracle::next_distribution(std::span<const TokenId> prefix) const {
  if (prefix.empty()) throw std::invalid_argument("next_distribution: empty prefix");
  TokenSeq window;
  gather_window(prefix, {}, window);
  Distribution out(vocab_size());
  do_fill(window, out);
  return out;
}

std::vector<Distribution> Oracle::batch_next(
    std::span<const TokenId> context,
    std::span<const TokenSeq> continuations) const {
  std::vector<Distribution> out;
  out.reserve(continuations.size());
  TokenSeq window;
  for (const TokenSeq& cont : continuations) {
    if (context.empty() && cont.empty()) {
      throw std::invalid_argument("batch_next: empty prefix");
    }
    gather_window(context, cont, window);
    Distribution& d = out.emplace_back(vocab_size());
    do_fill(window, d);
  }
  return out;
}

std::vector<Distribution> Oracle::batch_tree_forward(
    std::span<const TokenId> context, const FlatTree& flat,
    const TreeMask& mask) const {
  if (mask.n != flat.size()) {
    throw std::invalid_argument("batch_tree_forward: mask does not match tree");
  }
  std::vector<Distribution> out;
  out.reserve(flat.size());
  TokenSeq window;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const TokenSeq path = masked_path(flat, mask, i);
    gather_window(context, path, window);
    Distribution& d = out.emplace_back(vocab_size());
    do_fill(window, d);
  }
  return out;
}

std::vector<Distribution> Oracle::pathwise_tree_forward(
    std::span<const TokenId> context, const FlatTree& flat) const {
  std::vector<Distribution> out;
  out.reserve(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    TokenSeq prefix(context.begin(), context.end());
    TokenSeq path;
    for (std::optional<std::size_t> j = i; j; j = flat.parent_index[*j]) {
      path.push_back(flat.tokens[*j]);
    }
    prefix.insert(prefix.end(), path.rbegin(), path.rend());
    out.push_back(next_distribution(prefix));
  }
  return out;
}

TokenId sample(std::span<const double> dist, double temperature, Rng& rng) {
  if (dist.empty()) throw std::invalid_argument("sample: empty distribution");
  if (temperature < 0.0) throw std::invalid_argument("sample: negative temperature");
  const std::size_t best = simd::argmax(dist);
  if (temperature == 0.0) return static_cast<TokenId>(best);

  // p^(1/t) relative to the mode keeps the weights in (0, 1].
  const double log_max = std::log(dist[best]);
  std::vector<double> weights(dist.size(), 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) weights[i] = std::exp((std::log(dist[i]) - log_max) / temperature);
  }
  const double total = simd::sum(weights);
  const double target = rng.uniform() * total;
  double running = 0.0;
  std::size_t last_positive = best;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    running += weights[i];
    last_positive = i;
    if (target < running) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

bool is_distribution(std::span<const double> dist, double tolerance) {
  if (dist.empty()) return false;
  if (!(simd::min_value(dist) >= 0.0)) return false;
  return std::fabs(simd::sum(dist) - 1.0) <= tolerance;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  return 0.5 * simd::l1_distance(p, q);
}

std::string UniformOracle::describe() const {
  return "uniform(vocab=" + std::to_string(vocab_) + ")";
}

void UniformOracle::do_fill(std::span<const TokenId>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(vocab_));
}

std::string SuccessorOracle::describe() const {
  return "successor(vocab=" + std::to_string(vocab_) +
         ",stride=" + std::to_string(stride_) + ")";
}

void SuccessorOracle::do_fill(std::span<const TokenId> window,
                              std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[(window.back() + stride_) % vocab_] = 1.0;
}

std::string DelayedOracle::describe() const {
  return "delayed(" + std::to_string(delay_.count()) + "us," + inner_->describe() + ")";
}

void DelayedOracle::pause() const {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
}

std::vector<Distribution> DelayedOracle::batch_next(
    std::span<const TokenId> context,
    std::span<const TokenSeq> continuations) const {
  pause();
  return inner_->batch_next(context, continuations);
}

std::vector<Distribution> DelayedOracle::batch_tree_forward(
    std::span<const TokenId> context, const FlatTree& flat,
    const TreeMask& mask) const {
  pause();
  return inner_->batch_tree_forward(context, flat, mask);
}

void DelayedOracle::do_fill(std::span<const TokenId> window,
                            std::span<double> out) const {
  pause();
  inner_->fill_distribution(window, out);
}

}  // namespace opttree
