#include "pllbench/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pllbench/error.hpp"

namespace pllbench {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kConfigError, "cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

std::vector<double> checked_log_distribution(const std::vector<double>& probs, std::size_t vocab,
                                             const std::string& where) {
  if (probs.size() != vocab) {
    throw Error(ErrorCode::kConfigError, "distribution for '" + where + "' has " +
                                             std::to_string(probs.size()) + " entries, vocabulary has " +
                                             std::to_string(vocab));
  }
  double total = 0.0;
  std::vector<double> logs;
  logs.reserve(probs.size());
  for (double p : probs) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kConfigError, "non-positive probability in '" + where + "'");
    }
    total += p;
    logs.push_back(std::log(p));
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfigError, "distribution for '" + where + "' sums to " +
                                             std::to_string(total));
  }
  return logs;
}

TokenizedSequence slice_plain(const TokenizedSequence& seq, std::size_t begin, std::size_t end,
                              std::string surface) {
  if (begin >= end || end > seq.size()) {
    throw Error(ErrorCode::kInvalidSequence, "bad slice [" + std::to_string(begin) + ", " +
                                                 std::to_string(end) + ")");
  }
  TokenizedSequence out;
  out.tokens.assign(seq.tokens.begin() + begin, seq.tokens.begin() + end);
  out.scoreable.assign(seq.scoreable.begin() + begin, seq.scoreable.begin() + end);
  out.surface = std::move(surface);
  return out;
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

TokenizedSequence MaskedLmBackend::slice(const TokenizedSequence&, std::size_t, std::size_t) const {
  throw Error(ErrorCode::kBackendFailure, "backend '" + name() + "' cannot score sub-windows");
}

// ---------------------------------------------------------------------------
// TableBackend

TableBackend::TableBackend(Config config) : config_(std::move(config)) {
  if (config_.name.empty()) {
    throw Error(ErrorCode::kConfigError, "table backend needs a name");
  }
  if (config_.vocabulary.empty()) {
    throw Error(ErrorCode::kConfigError, "table backend needs a vocabulary");
  }
  if (config_.max_tokens < 2) {
    throw Error(ErrorCode::kConfigError, "max_tokens must be at least 2");
  }
  for (std::size_t i = 0; i < config_.vocabulary.size(); ++i) {
    const auto& sym = config_.vocabulary[i];
    if (sym.empty() || sym == kHoleSymbol || sym == kBeginSymbol || sym == kEndSymbol ||
        std::any_of(sym.begin(), sym.end(), is_ascii_space)) {
      throw Error(ErrorCode::kConfigError, "invalid vocabulary symbol '" + sym + "'");
    }
    if (!ids_.emplace(sym, static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::kConfigError, "duplicate vocabulary symbol '" + sym + "'");
    }
  }
  const std::size_t vocab = config_.vocabulary.size();
  for (const auto& [key, probs] : config_.table) {
    log_table_.emplace(key, checked_log_distribution(probs, vocab, key));
  }
  if (config_.fallback) {
    log_fallback_ = checked_log_distribution(*config_.fallback, vocab, "default");
  }
}

TableBackend TableBackend::from_json(const nlohmann::json& doc) {
  try {
    Config config;
    config.name = doc.value("name", std::string("table"));
    config.vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
    config.context_width = doc.value("context_width", std::size_t{1});
    config.max_tokens = doc.value("max_tokens", std::size_t{512});
    config.boundary_tokens = doc.value("boundary_tokens", false);
    if (doc.contains("table")) {
      config.table = doc.at("table").get<std::map<std::string, std::vector<double>>>();
    }
    if (doc.contains("default")) {
      config.fallback = doc.at("default").get<std::vector<double>>();
    }
    return TableBackend(std::move(config));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("table backend: ") + e.what());
  }
}

TableBackend TableBackend::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

std::string_view TableBackend::symbol(TokenId id) const {
  const auto vocab = static_cast<TokenId>(config_.vocabulary.size());
  if (id >= 0 && id < vocab) return config_.vocabulary[static_cast<std::size_t>(id)];
  if (id == vocab) return kBeginSymbol;
  if (id == vocab + 1) return kEndSymbol;
  throw Error(ErrorCode::kBackendFailure, "token id " + std::to_string(id) + " not in table vocabulary");
}

TokenizedSequence TableBackend::tokenize(std::string_view text) const {
  const auto words = split_whitespace(text);
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyText, "nothing to tokenize");
  }
  TokenizedSequence seq;
  seq.surface = std::string(text);
  const auto vocab = static_cast<TokenId>(config_.vocabulary.size());
  if (config_.boundary_tokens) {
    seq.tokens.push_back(vocab);
    seq.scoreable.push_back(false);
  }
  for (const auto& w : words) {
    auto it = ids_.find(w);
    if (it == ids_.end()) {
      throw Error(ErrorCode::kUnencodableText, "'" + w + "' is not in the table vocabulary");
    }
    seq.tokens.push_back(it->second);
    seq.scoreable.push_back(true);
  }
  if (config_.boundary_tokens) {
    seq.tokens.push_back(vocab + 1);
    seq.scoreable.push_back(false);
  }
  return seq;
}

std::string TableBackend::context_key(const TokenizedSequence& seq, std::size_t position) const {
  const std::size_t width = config_.context_width;
  const std::size_t lo = position >= width ? position - width : 0;
  const std::size_t hi = std::min(seq.size() - 1, position + width);
  std::string key;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (i > lo) key += ' ';
    key += i == position ? kHoleSymbol : symbol(seq.tokens[i]);
  }
  return key;
}

MaskedLogprobVector TableBackend::masked_logprobs(const TokenizedSequence& seq,
                                                  std::span<const std::size_t> positions) const {
  validate_positions(positions, seq.size());
  if (seq.size() > config_.max_tokens) {
    throw Error(ErrorCode::kSequenceTooLong, std::to_string(seq.size()) + " tokens, limit " +
                                                 std::to_string(config_.max_tokens));
  }
  const auto vocab = static_cast<TokenId>(config_.vocabulary.size());
  MaskedLogprobVector out;
  out.positions.assign(positions.begin(), positions.end());
  out.logprobs.reserve(positions.size());
  for (std::size_t pos : positions) {
    const TokenId id = seq.tokens[pos];
    if (id < 0 || id >= vocab) {
      throw Error(ErrorCode::kBackendFailure,
                  "position " + std::to_string(pos) + " holds no vocabulary symbol");
    }
    const std::string key = context_key(seq, pos);
    const std::vector<double>* dist = nullptr;
    if (auto it = log_table_.find(key); it != log_table_.end()) {
      dist = &it->second;
    } else if (log_fallback_) {
      dist = &*log_fallback_;
    } else {
      throw Error(ErrorCode::kBackendFailure, "no conditional for context '" + key + "'");
    }
    out.logprobs.push_back((*dist)[static_cast<std::size_t>(id)]);
  }
  return out;
}

TokenizedSequence TableBackend::slice(const TokenizedSequence& seq, std::size_t begin,
                                      std::size_t end) const {
  auto out = slice_plain(seq, begin, end, {});
  out.surface = detokenize(out);
  return out;
}

std::string TableBackend::detokenize(const TokenizedSequence& seq) const {
  const auto vocab = static_cast<TokenId>(config_.vocabulary.size());
  std::string text;
  for (TokenId id : seq.tokens) {
    if (id >= vocab) continue;
    if (!text.empty()) text += ' ';
    text += symbol(id);
  }
  return text;
}

// ---------------------------------------------------------------------------
// UnigramBackend

UnigramBackend::UnigramBackend(std::map<std::string, std::uint64_t> counts, bool add_one,
                               std::size_t max_tokens)
    : add_one_(add_one), max_tokens_(max_tokens) {
  if (max_tokens_ < 2) {
    throw Error(ErrorCode::kConfigError, "max_tokens must be at least 2");
  }
  std::uint64_t total = 0;
  for (const auto& [word, count] : counts) total += count;
  if (total == 0) {
    throw Error(ErrorCode::kConfigError, "unigram counts must have a positive total");
  }
  const double denom = static_cast<double>(total) + (add_one_ ? static_cast<double>(counts.size()) : 0.0);
  for (const auto& [word, count] : counts) {
    const double numer = static_cast<double>(count) + (add_one_ ? 1.0 : 0.0);
    if (numer <= 0.0) continue;  // zero count without smoothing behaves as unseen
    ids_.emplace(word, static_cast<TokenId>(words_.size()));
    words_.push_back(word);
    logprobs_.push_back(std::log(numer / denom));
  }
  unseen_logprob_ = std::log(1.0 / denom);
}

UnigramBackend UnigramBackend::from_json(const nlohmann::json& doc) {
  try {
    return UnigramBackend(doc.at("counts").get<std::map<std::string, std::uint64_t>>(),
                          doc.value("add_one", false), doc.value("max_tokens", std::size_t{512}));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("unigram backend: ") + e.what());
  }
}

UnigramBackend UnigramBackend::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

TokenizedSequence UnigramBackend::tokenize(std::string_view text) const {
  const auto words = split_whitespace(text);
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyText, "nothing to tokenize");
  }
  TokenizedSequence seq;
  seq.surface = std::string(text);
  for (const auto& w : words) {
    auto it = ids_.find(w);
    seq.tokens.push_back(it == ids_.end() ? kOpaqueToken : it->second);
    seq.scoreable.push_back(true);
  }
  return seq;
}

MaskedLogprobVector UnigramBackend::masked_logprobs(const TokenizedSequence& seq,
                                                    std::span<const std::size_t> positions) const {
  validate_positions(positions, seq.size());
  if (seq.size() > max_tokens_) {
    throw Error(ErrorCode::kSequenceTooLong, std::to_string(seq.size()) + " tokens, limit " +
                                                 std::to_string(max_tokens_));
  }
  MaskedLogprobVector out;
  out.positions.assign(positions.begin(), positions.end());
  out.logprobs.reserve(positions.size());
  for (std::size_t pos : positions) {
    const TokenId id = seq.tokens[pos];
    if (id >= 0 && static_cast<std::size_t>(id) < logprobs_.size()) {
      out.logprobs.push_back(logprobs_[static_cast<std::size_t>(id)]);
    } else if (add_one_) {
      out.logprobs.push_back(unseen_logprob_);
    } else {
      const auto words = split_whitespace(seq.surface);
      const std::string word = pos < words.size() ? words[pos] : "?";
      throw Error(ErrorCode::kUnknownToken, "'" + word + "' has no count and smoothing is off");
    }
  }
  return out;
}

TokenizedSequence UnigramBackend::slice(const TokenizedSequence& seq, std::size_t begin,
                                        std::size_t end) const {
  const auto words = split_whitespace(seq.surface);
  std::string surface;
  for (std::size_t i = begin; i < end && i < words.size(); ++i) {
    if (!surface.empty()) surface += ' ';
    surface += words[i];
  }
  return slice_plain(seq, begin, end, std::move(surface));
}

std::unique_ptr<MaskedLmBackend> unigram_backend(std::map<std::string, std::uint64_t> counts,
                                                 bool add_one) {
  return std::make_unique<UnigramBackend>(std::move(counts), add_one);
}

// ---------------------------------------------------------------------------
// SerializedBackend

TokenizedSequence SerializedBackend::tokenize(std::string_view text) const {
  std::lock_guard lock(mutex_);
  return inner_.tokenize(text);
}

MaskedLogprobVector SerializedBackend::masked_logprobs(const TokenizedSequence& seq,
                                                       std::span<const std::size_t> positions) const {
  std::lock_guard lock(mutex_);
  return inner_.masked_logprobs(seq, positions);
}

TokenizedSequence SerializedBackend::slice(const TokenizedSequence& seq, std::size_t begin,
                                           std::size_t end) const {
  std::lock_guard lock(mutex_);
  return inner_.slice(seq, begin, end);
}

// ---------------------------------------------------------------------------
// Windowing

std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) {
    throw Error(ErrorCode::kConfigError, "window and stride must be positive");
  }
  if (length <= window) return {0};
  std::vector<std::size_t> starts;
  const std::size_t last = length - window;
  for (std::size_t s = 0; s < last; s += stride) starts.push_back(s);
  starts.push_back(last);
  return starts;
}

std::size_t window_for_position(std::span<const std::size_t> starts, std::size_t length,
                                std::size_t window, std::size_t position) {
  const std::size_t span = std::min(window, length);
  std::size_t best = 0;
  // Centers are compared doubled to stay in integers: 2*start + span - 1.
  auto distance = [&](std::size_t start) {
    const auto center2 = static_cast<long long>(2 * start + span - 1);
    return std::llabs(center2 - 2 * static_cast<long long>(position));
  };
  for (std::size_t k = 1; k < starts.size(); ++k) {
    if (distance(starts[k]) < distance(starts[best])) best = k;
  }
  return best;
}

MaskedLogprobVector windowed_masked_logprobs(const MaskedLmBackend& backend,
                                             const TokenizedSequence& seq,
                                             std::span<const std::size_t> positions,
                                             std::size_t window, std::size_t stride) {
  if (window > backend.max_tokens()) {
    throw Error(ErrorCode::kConfigError, "window " + std::to_string(window) +
                                             " exceeds backend limit " +
                                             std::to_string(backend.max_tokens()));
  }
  validate_positions(positions, seq.size());
  if (seq.size() <= window) {
    return backend.masked_logprobs(seq, positions);
  }
  const auto starts = window_starts(seq.size(), window, stride);

  // Group positions by window, query each window once, then scatter back.
  std::vector<std::vector<std::size_t>> local(starts.size());
  std::vector<std::size_t> owner(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    owner[k] = window_for_position(starts, seq.size(), window, positions[k]);
    local[owner[k]].push_back(positions[k] - starts[owner[k]]);
  }
  std::vector<MaskedLogprobVector> results(starts.size());
  for (std::size_t w = 0; w < starts.size(); ++w) {
    if (local[w].empty()) continue;
    const auto sub = backend.slice(seq, starts[w], starts[w] + window);
    results[w] = backend.masked_logprobs(sub, local[w]);
    validate_logprobs(results[w]);
    if (results[w].size() != local[w].size()) {
      throw Error(ErrorCode::kBackendFailure, "window returned wrong number of values");
    }
  }
  MaskedLogprobVector out;
  out.positions.assign(positions.begin(), positions.end());
  out.logprobs.resize(positions.size());
  std::vector<std::size_t> cursor(starts.size(), 0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    out.logprobs[k] = results[owner[k]].logprobs[cursor[owner[k]]++];
  }
  return out;
}

}  // namespace pllbench
