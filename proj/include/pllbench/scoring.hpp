#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pllbench/backend.hpp"
#include "pllbench/sequence.hpp"

namespace pllbench {

enum class ScoreMode { kPll, kNormPll };

std::string_view score_mode_name(ScoreMode mode);
// Accepts "pll" and "normpll" (case-insensitive); throws kConfigError.
ScoreMode parse_score_mode(std::string_view text);

struct ScoreRecord {
  std::size_t candidate_index = 0;
  double pll = 0.0;       // nats
  double norm_pll = 0.0;  // nats per scoreable token
  std::size_t token_count = 0;
  std::chrono::nanoseconds wall_time{0};

  double score(ScoreMode mode) const noexcept { return mode == ScoreMode::kPll ? pll : norm_pll; }
};

struct WindowSpec {
  std::size_t window = 0;
  std::size_t stride = 1;
};

// Sum of the conditionals in ascending position order, starting from 0.0.
// Throws kNonFiniteScore on NaN, infinities or positive values.
double sum_conditionals(const MaskedLogprobVector& vec);

// Pseudo-log-likelihood: sum over scoreable positions i of
// log P(token_i | sequence with only position i masked).
double pll(const TokenizedSequence& seq, const MaskedLmBackend& backend);
// Same sum with each position scored inside its nearest window; sequences
// longer than the backend limit are accepted.
double pll(const TokenizedSequence& seq, const MaskedLmBackend& backend, const WindowSpec& window);

// pll / L, L being the scoreable token count.
double norm_pll(const TokenizedSequence& seq, const MaskedLmBackend& backend);

struct ScoringOptions {
  // Effective limit is min(max_tokens, backend.max_tokens()); 0 means the
  // backend limit alone.
  std::size_t max_tokens = 0;
  // When set, over-long candidates are scored windowed instead of skipping
  // the instance.
  std::optional<WindowSpec> window;
};

struct CandidateScores {
  bool skipped = false;
  // Token count of each tokenized candidate, filled even when skipped.
  std::vector<std::size_t> token_counts;
  std::vector<ScoreRecord> records;
};

// Tokenizes every candidate before scoring any of them; if one exceeds the
// limit the whole instance comes back skipped with no records. Otherwise one
// record per candidate in input order, with PLL and NormPLL both filled.
// Errors are rethrown with the same code and the candidate index prefixed.
CandidateScores score_candidates(std::span<const std::string> candidates,
                                 const MaskedLmBackend& backend, const ScoringOptions& options);

struct Decision {
  // Highest-scoring candidate, lowest index on ties.
  std::size_t chosen_index = 0;
  // Set only in 2-best mode.
  std::optional<bool> two_best_correct;
  // Per-candidate selection. Binary and argmax: just chosen_index. 2-best:
  // the top-k candidates (k = number of correct flags) when the k-th score
  // strictly beats the (k+1)-th, otherwise nothing.
  std::vector<bool> selected;
  std::vector<ScoreRecord> scores;
};

// Exactly two records, else kWrongArity.
Decision decide_binary(std::span<const ScoreRecord> records, ScoreMode mode);

// Argmax over any number of records (>= 1).
Decision decide_argmax(std::span<const ScoreRecord> records, ScoreMode mode);

// Correct iff the lowest-scoring correct candidate strictly beats the
// highest-scoring incorrect one. Needs >= 2 correct and >= 1 incorrect
// flags, one per record; kWrongArity otherwise.
Decision decide_two_best(std::span<const ScoreRecord> records, const std::vector<bool>& correct_flags,
                         ScoreMode mode);

}  // namespace pllbench
