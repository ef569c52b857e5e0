#include "opttree/ngram.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace opttree {
namespace {

constexpr const char* kFormatName = "opttree-ngram";
constexpr int kFormatVersion = 1;

}  // namespace

std::size_t TokenSeqHash::operator()(const TokenSeq& seq) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (TokenId t : seq) {
    h ^= t;
    h *= 1099511628211ULL;
  }
  h ^= seq.size();
  return static_cast<std::size_t>(h);
}

NgramModel::NgramModel(std::size_t order, double smoothing,
                       std::size_t vocab_size)
    : order_(order), smoothing_(smoothing), vocab_size_(vocab_size) {
  if (!(smoothing_ > 0.0)) throw std::invalid_argument("smoothing must be positive");
  if (vocab_size_ < 2) throw std::invalid_argument("vocabulary needs at least 2 tokens");
}

std::string NgramModel::describe() const {
  std::ostringstream os;
  os << "ngram(order=" << order_ << ",smoothing=" << smoothing_
     << ",vocab=" << vocab_size_ << ",contexts=" << table_.size() << ")";
  return os.str();
}

const NgramModel::ContextCounts* NgramModel::find(const TokenSeq& context) const {
  auto it = table_.find(context);
  return it == table_.end() ? nullptr : &it->second;
}

void NgramModel::add(const TokenSeq& context, TokenId token,
                     std::uint64_t count) {
  if (token >= vocab_size_) throw std::invalid_argument("token outside vocabulary");
  ContextCounts& entry = table_[context];
  entry.total += count;
  auto it = std::lower_bound(
      entry.counts.begin(), entry.counts.end(), token,
      [](const auto& pair, TokenId t) { return pair.first < t; });
  if (it != entry.counts.end() && it->first == token) {
    it->second += count;
  } else {
    entry.counts.insert(it, {token, count});
  }
}

void NgramModel::do_fill(std::span<const TokenId> window,
                         std::span<double> out) const {
  const std::size_t keep = std::min(order_, window.size());
  const TokenSeq key(window.end() - static_cast<std::ptrdiff_t>(keep), window.end());
  const ContextCounts* entry = find(key);
  const double total = entry ? static_cast<double>(entry->total) : 0.0;
  const double denom = total + smoothing_ * static_cast<double>(vocab_size_);
  std::fill(out.begin(), out.end(), smoothing_ / denom);
  if (entry) {
    for (const auto& [token, count] : entry->counts) {
      out[token] = (static_cast<double>(count) + smoothing_) / denom;
    }
  }
}

std::string NgramModel::to_json() const {
  std::vector<const std::pair<const TokenSeq, ContextCounts>*> rows;
  rows.reserve(table_.size());
  for (const auto& row : table_) rows.push_back(&row);
  std::sort(rows.begin(), rows.end(),
            [](auto* a, auto* b) { return a->first < b->first; });

  nlohmann::json contexts = nlohmann::json::array();
  for (const auto* row : rows) {
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& [token, count] : row->second.counts) {
      counts.push_back({token, count});
    }
    contexts.push_back({{"context", row->first}, {"counts", counts}});
  }
  nlohmann::json doc = {
      {"format", kFormatName},     {"version", kFormatVersion},
      {"order", order_},           {"smoothing", smoothing_},
      {"vocab_size", vocab_size_}, {"contexts", contexts},
  };
  return doc.dump();
}

NgramModel NgramModel::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("model file is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != kFormatName) {
    throw std::invalid_argument("not an n-gram model file");
  }
  if (doc.value("version", 0) != kFormatVersion) {
    throw std::invalid_argument("unsupported model file version");
  }
  NgramModel model(doc.at("order").get<std::size_t>(),
                   doc.at("smoothing").get<double>(),
                   doc.at("vocab_size").get<std::size_t>());
  for (const auto& row : doc.at("contexts")) {
    const auto context = row.at("context").get<TokenSeq>();
    if (context.size() > model.order_) {
      throw std::invalid_argument("context longer than model order");
    }
    for (const auto& pair : row.at("counts")) {
      model.add(context, pair.at(0).get<TokenId>(), pair.at(1).get<std::uint64_t>());
    }
  }
  return model;
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

bool operator==(const NgramModel& a, const NgramModel& b) {
  if (a.order_ != b.order_ || a.smoothing_ != b.smoothing_ ||
      a.vocab_size_ != b.vocab_size_ || a.table_.size() != b.table_.size()) {
    return false;
  }
  for (const auto& [context, entry] : a.table_) {
    const auto* other = b.find(context);
    if (!other || other->total != entry.total || other->counts != entry.counts) {
      return false;
    }
  }
  return true;
}

NgramModel train_ngram(std::span<const TokenId> corpus, std::size_t order,
                       double smoothing, std::size_t vocab_size) {
  if (corpus.size() <= order) {
    throw std::invalid_argument("corpus must be longer than the model order");
  }
  NgramModel model(order, smoothing, vocab_size);
  // Contexts are never empty for order >= 1 since queries always carry a token.
  const std::size_t first = order == 0 ? 0 : 1;
  TokenSeq context;
  for (std::size_t i = first; i < corpus.size(); ++i) {
    const std::size_t start = i >= order ? i - order : 0;
    context.assign(corpus.begin() + start, corpus.begin() + i);
    model.add(context, corpus[i]);
  }
  return model;
}

}  // namespace opttree
