#include "opttree/corpus.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "opttree/oracle.hpp"

namespace opttree {
namespace {

constexpr std::array<std::string_view, 96> kLexicon = {
    "the",     "a",       "of",       "and",      "to",       "in",
    "model",   "draft",   "tree",     "token",    "target",   "step",
    "is",      "was",     "will",     "can",      "should",   "must",
    "node",    "layer",   "depth",    "budget",   "score",    "path",
    "we",      "they",    "it",       "this",     "that",     "each",
    "large",   "small",   "fast",     "slow",     "greedy",   "optimal",
    "decode",  "verify",  "accept",   "reject",   "sample",   "expand",
    "with",    "for",     "from",     "by",       "on",       "under",
    "time",    "length",  "value",    "number",   "sequence", "output",
    "every",   "some",    "many",     "few",      "one",      "two",
    "when",    "while",   "after",    "before",   "until",    "because",
    "better",  "worse",   "longer",   "shorter",  "higher",   "lower",
    "attention", "mask",  "position", "cache",    "batch",    "context",
    "expected", "actual", "mean",     "total",    "final",    "first",
    "grows",   "stops",   "returns",  "selects",  "keeps",    "drops",
    "quickly", "rarely",  "always",   "never",    "often",    "again",
};

constexpr std::size_t kSuccessors = 6;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string synthetic_corpus(std::uint64_t seed, std::size_t bytes) {
  // Each word gets a fixed successor list; rank r is chosen with weight 2^-r.
  std::array<std::array<std::size_t, kSuccessors>, kLexicon.size()> next{};
  for (std::size_t w = 0; w < kLexicon.size(); ++w) {
    std::uint64_t h = mix(seed ^ mix(w + 17));
    for (auto& s : next[w]) {
      h = mix(h);
      s = static_cast<std::size_t>(h % kLexicon.size());
    }
  }

  Rng rng(seed);
  std::string out;
  out.reserve(bytes + 16);
  std::size_t word = static_cast<std::size_t>(rng.next() % kLexicon.size());
  std::size_t sentence_len = 0;
  bool capitalize = true;
  while (out.size() < bytes) {
    std::string w(kLexicon[word]);
    if (capitalize) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    out += w;
    ++sentence_len;
    capitalize = false;

    const std::uint64_t roll = rng.next();
    if (sentence_len >= 6 && roll % 5 == 0) {
      out += (roll % 7 == 0) ? ".\n" : ". ";
      sentence_len = 0;
      capitalize = true;
    } else if (roll % 11 == 0) {
      out += ", ";
    } else {
      out += ' ';
    }

    std::size_t rank = 0;
    while (rank + 1 < kSuccessors && rng.uniform() < 0.5) ++rank;
    word = next[word][rank];
  }
  out.resize(bytes);
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> sample_prompts(const std::string& text,
                                        std::size_t count, std::size_t length,
                                        std::uint64_t seed) {
  if (text.size() <= length + 1) {
    throw std::invalid_argument("text too short for requested prompt length");
  }
  Rng rng(seed);
  std::vector<std::string> prompts;
  prompts.reserve(count);
  const std::size_t span = text.size() - length;
  while (prompts.size() < count) {
    std::size_t at = static_cast<std::size_t>(rng.next() % span);
    while (at > 0 && at < span && text[at - 1] != ' ') ++at;
    if (at >= span) continue;
    std::string p = text.substr(at, length);
    for (char& c : p) {
      if (c == '\n') c = ' ';
    }
    prompts.push_back(std::move(p));
  }
  return prompts;
}

}  // namespace opttree
