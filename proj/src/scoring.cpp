#include "pllbench/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>

#include "pllbench/error.hpp"

namespace pllbench {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_length(const TokenizedSequence& seq, std::size_t limit) {
  if (seq.size() > limit) {
    throw Error(ErrorCode::kSequenceTooLong,
                std::to_string(seq.size()) + " tokens, limit " + std::to_string(limit));
  }
}

double checked_sum(const MaskedLogprobVector& vec, std::size_t expected) {
  if (vec.size() != expected || vec.logprobs.size() != expected) {
    throw Error(ErrorCode::kBackendFailure, "backend returned " + std::to_string(vec.logprobs.size()) +
                                                " conditionals, expected " + std::to_string(expected));
  }
  return sum_conditionals(vec);
}

std::size_t argmax(std::span<const ScoreRecord> records, ScoreMode mode) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].score(mode) > records[best].score(mode)) best = i;
  }
  return best;
}

}  // namespace

std::string_view score_mode_name(ScoreMode mode) {
  return mode == ScoreMode::kPll ? "pll" : "normpll";
}

ScoreMode parse_score_mode(std::string_view text) {
  const auto s = lower(text);
  if (s == "pll") return ScoreMode::kPll;
  if (s == "normpll" || s == "norm_pll" || s == "norm-pll") return ScoreMode::kNormPll;
  throw Error(ErrorCode::kConfigError, "unknown mode '" + std::string(text) + "' (pll|normpll)");
}

double sum_conditionals(const MaskedLogprobVector& vec) {
  validate_logprobs(vec);
  double total = 0.0;
  for (double v : vec.logprobs) total += v;
  return total;
}

double pll(const TokenizedSequence& seq, const MaskedLmBackend& backend) {
  seq.validate();
  check_length(seq, backend.max_tokens());
  const auto positions = seq.scoreable_positions();
  return checked_sum(backend.masked_logprobs(seq, positions), positions.size());
}

double pll(const TokenizedSequence& seq, const MaskedLmBackend& backend, const WindowSpec& window) {
  seq.validate();
  const auto positions = seq.scoreable_positions();
  return checked_sum(
      windowed_masked_logprobs(backend, seq, positions, window.window, window.stride),
      positions.size());
}

double norm_pll(const TokenizedSequence& seq, const MaskedLmBackend& backend) {
  const double total = pll(seq, backend);
  return total / static_cast<double>(seq.scoreable_count());
}

CandidateScores score_candidates(std::span<const std::string> candidates,
                                 const MaskedLmBackend& backend, const ScoringOptions& options) {
  const std::size_t limit =
      options.max_tokens == 0 ? backend.max_tokens() : std::min(options.max_tokens, backend.max_tokens());

  auto annotate = [](std::size_t index, const Error& e) {
    return Error(e.code(), "candidate " + std::to_string(index) + ": " + e.detail());
  };

  CandidateScores out;
  std::vector<TokenizedSequence> sequences;
  std::vector<std::chrono::nanoseconds> tokenize_time;
  sequences.reserve(candidates.size());
  bool over_limit = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      sequences.push_back(backend.tokenize(candidates[i]));
      sequences.back().validate();
    } catch (const Error& e) {
      // A remote tokenizer may refuse over-long text outright.
      if (e.code() != ErrorCode::kSequenceTooLong) throw annotate(i, e);
      out.token_counts.push_back(limit + 1);
      over_limit = true;
      sequences.emplace_back();
      tokenize_time.emplace_back(0);
      continue;
    }
    tokenize_time.push_back(std::chrono::steady_clock::now() - start);
    out.token_counts.push_back(sequences.back().size());
    if (sequences.back().size() > limit) over_limit = true;
  }

  if (over_limit && !options.window) {
    out.skipped = true;
    return out;
  }

  out.records.reserve(candidates.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const auto& seq = sequences[i];
    ScoreRecord rec;
    rec.candidate_index = i;
    rec.token_count = seq.scoreable_count();
    try {
      if (seq.size() > limit) {
        rec.pll = pll(seq, backend, *options.window);
      } else {
        rec.pll = pll(seq, backend);
      }
    } catch (const Error& e) {
      throw annotate(i, e);
    }
    rec.norm_pll = rec.pll / static_cast<double>(rec.token_count);
    rec.wall_time = tokenize_time[i] + (std::chrono::steady_clock::now() - start);
    out.records.push_back(rec);
  }
  return out;
}

Decision decide_argmax(std::span<const ScoreRecord> records, ScoreMode mode) {
  if (records.empty()) {
    throw Error(ErrorCode::kWrongArity, "no records to decide between");
  }
  Decision d;
  d.chosen_index = argmax(records, mode);
  d.selected.assign(records.size(), false);
  d.selected[d.chosen_index] = true;
  d.scores.assign(records.begin(), records.end());
  return d;
}

Decision decide_binary(std::span<const ScoreRecord> records, ScoreMode mode) {
  if (records.size() != 2) {
    throw Error(ErrorCode::kWrongArity,
                "binary decision needs 2 records, got " + std::to_string(records.size()));
  }
  return decide_argmax(records, mode);
}

Decision decide_two_best(std::span<const ScoreRecord> records, const std::vector<bool>& correct_flags,
                         ScoreMode mode) {
  if (correct_flags.size() != records.size()) {
    throw Error(ErrorCode::kWrongArity, std::to_string(correct_flags.size()) + " flags for " +
                                            std::to_string(records.size()) + " records");
  }
  const auto n_correct =
      static_cast<std::size_t>(std::count(correct_flags.begin(), correct_flags.end(), true));
  if (n_correct < 2 || n_correct == records.size()) {
    throw Error(ErrorCode::kWrongArity, "2-best needs at least 2 correct and 1 incorrect candidate");
  }

  double min_correct = std::numeric_limits<double>::infinity();
  double max_incorrect = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double s = records[i].score(mode);
    if (correct_flags[i]) {
      min_correct = std::min(min_correct, s);
    } else {
      max_incorrect = std::max(max_incorrect, s);
    }
  }

  Decision d;
  d.chosen_index = argmax(records, mode);
  d.two_best_correct = min_correct > max_incorrect;
  d.scores.assign(records.begin(), records.end());

  // Top-k by score, lower index first on ties; selected only when the k-th
  // strictly beats the next one.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score(mode) > records[b].score(mode);
  });
  d.selected.assign(records.size(), false);
  if (records[order[n_correct - 1]].score(mode) > records[order[n_correct]].score(mode)) {
    for (std::size_t k = 0; k < n_correct; ++k) d.selected[order[k]] = true;
  }
  return d;
}

}  // namespace pllbench
