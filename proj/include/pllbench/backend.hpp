#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "pllbench/sequence.hpp"

namespace pllbench {

// The masked-conditional contract every model is reached through.
// Implementations must be pure functions of their inputs: asking for the same
// positions twice returns the same values, and the value for one position
// never depends on which other positions share the request.
class MaskedLmBackend {
 public:
  virtual ~MaskedLmBackend() = default;

  virtual std::string name() const = 0;
  virtual std::size_t max_tokens() const = 0;
  virtual bool concurrent_safe() const = 0;

  virtual TokenizedSequence tokenize(std::string_view text) const = 0;

  // `positions` must be strictly increasing and within the sequence.
  virtual MaskedLogprobVector masked_logprobs(
      const TokenizedSequence& seq, std::span<const std::size_t> positions) const = 0;

  // Sub-sequence [begin, end) as the backend would see it on its own. Needed
  // for windowed scoring; backends that cannot slice throw kBackendFailure.
  virtual TokenizedSequence slice(const TokenizedSequence& seq, std::size_t begin,
                                  std::size_t end) const;
};

// Deterministic table-driven masked LM over a closed vocabulary.
//
// The conditional for position i is looked up by its context key: the
// symbols within `context_width` tokens on either side (clipped at the
// sequence ends), with the masked slot written as "_", joined by single
// spaces. For "a b" with width 1 the keys are "_ b" and "a _".
//
// JSON form:
//   {"name": "toy", "vocabulary": ["a","b"], "context_width": 1,
//    "max_tokens": 512, "boundary_tokens": false,
//    "table": {"_ b": [0.8, 0.2], "a _": [0.3, 0.7]},
//    "default": [0.5, 0.5]}
// "default" is optional and answers any context missing from "table".
class TableBackend final : public MaskedLmBackend {
 public:
  static constexpr std::string_view kBeginSymbol = "<s>";
  static constexpr std::string_view kEndSymbol = "</s>";
  static constexpr std::string_view kHoleSymbol = "_";

  struct Config {
    std::string name = "table";
    std::vector<std::string> vocabulary;
    std::size_t context_width = 1;
    std::size_t max_tokens = 512;
    bool boundary_tokens = false;
    std::map<std::string, std::vector<double>> table;
    std::optional<std::vector<double>> fallback;
  };

  explicit TableBackend(Config config);

  static TableBackend from_json(const nlohmann::json& doc);
  static TableBackend load(const std::filesystem::path& path);

  std::string name() const override { return config_.name; }
  std::size_t max_tokens() const override { return config_.max_tokens; }
  bool concurrent_safe() const override { return true; }

  TokenizedSequence tokenize(std::string_view text) const override;
  MaskedLogprobVector masked_logprobs(const TokenizedSequence& seq,
                                      std::span<const std::size_t> positions) const override;
  TokenizedSequence slice(const TokenizedSequence& seq, std::size_t begin,
                          std::size_t end) const override;

  // Symbols joined by single spaces, boundary markers omitted.
  std::string detokenize(const TokenizedSequence& seq) const;

  std::string context_key(const TokenizedSequence& seq, std::size_t position) const;
  const Config& config() const noexcept { return config_; }

 private:
  std::string_view symbol(TokenId id) const;

  Config config_;
  std::unordered_map<std::string, TokenId> ids_;
  std::unordered_map<std::string, std::vector<double>> log_table_;
  std::optional<std::vector<double>> log_fallback_;
};

// Context-free smoke-test backend: every position scores log(count/total)
// whatever surrounds it. With add-one smoothing unseen words score
// log(1/(total+|V|)) instead of raising kUnknownToken.
//
// JSON form: {"counts": {"a": 3, "b": 1}, "add_one": false, "max_tokens": 512}
class UnigramBackend final : public MaskedLmBackend {
 public:
  UnigramBackend(std::map<std::string, std::uint64_t> counts, bool add_one,
                 std::size_t max_tokens = 512);

  static UnigramBackend from_json(const nlohmann::json& doc);
  static UnigramBackend load(const std::filesystem::path& path);

  std::string name() const override { return "unigram"; }
  std::size_t max_tokens() const override { return max_tokens_; }
  bool concurrent_safe() const override { return true; }

  TokenizedSequence tokenize(std::string_view text) const override;
  MaskedLogprobVector masked_logprobs(const TokenizedSequence& seq,
                                      std::span<const std::size_t> positions) const override;
  TokenizedSequence slice(const TokenizedSequence& seq, std::size_t begin,
                          std::size_t end) const override;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<double> logprobs_;
  double unseen_logprob_ = 0.0;
  bool add_one_ = false;
  std::size_t max_tokens_;
};

std::unique_ptr<MaskedLmBackend> unigram_backend(std::map<std::string, std::uint64_t> counts,
                                                 bool add_one = false);

// Funnels every call through one mutex, for backends that are not safe to
// call from several threads at once.
class SerializedBackend final : public MaskedLmBackend {
 public:
  explicit SerializedBackend(const MaskedLmBackend& inner) : inner_(inner) {}

  std::string name() const override { return inner_.name(); }
  std::size_t max_tokens() const override { return inner_.max_tokens(); }
  bool concurrent_safe() const override { return true; }

  TokenizedSequence tokenize(std::string_view text) const override;
  MaskedLogprobVector masked_logprobs(const TokenizedSequence& seq,
                                      std::span<const std::size_t> positions) const override;
  TokenizedSequence slice(const TokenizedSequence& seq, std::size_t begin,
                          std::size_t end) const override;

 private:
  const MaskedLmBackend& inner_;
  mutable std::mutex mutex_;
};

// Window start offsets for a sequence of `length` tokens: 0, stride,
// 2*stride, ... plus a final window flush with the end when the stride does
// not land there. A sequence no longer than the window gets the single
// window [0, length).
std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride);

// Index into window_starts() of the window whose center is nearest to
// `position`, earliest window on ties.
std::size_t window_for_position(std::span<const std::size_t> starts, std::size_t length,
                                std::size_t window, std::size_t position);

// Scores each position inside the window nearest to it, so sequences longer
// than the backend limit can still be scored. Same output shape as
// masked_logprobs.
MaskedLogprobVector windowed_masked_logprobs(const MaskedLmBackend& backend,
                                             const TokenizedSequence& seq,
                                             std::span<const std::size_t> positions,
                                             std::size_t window, std::size_t stride);

// Splits text on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace pllbench
