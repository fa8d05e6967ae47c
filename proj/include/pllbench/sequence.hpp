#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pllbench {

using TokenId = std::int32_t;

// Remote backends own their vocabulary; sequences they return carry this id
// at every position and are only meaningful to the backend that produced them.
inline constexpr TokenId kOpaqueToken = -1;

// Token ids plus the text they were produced from. Positions whose
// `scoreable` flag is false (sequence boundary markers) never enter a PLL
// sum nor the normalizing length.
struct TokenizedSequence {
  std::vector<TokenId> tokens;
  std::string surface;
  std::vector<bool> scoreable;

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t scoreable_count() const noexcept;
  std::vector<std::size_t> scoreable_positions() const;

  // Throws Error(kInvalidSequence) when the structural invariants fail.
  void validate() const;
};

// logprobs[k] is log P(token at positions[k] | every other token), with only
// that single position masked. Natural log, so every entry is <= 0.
struct MaskedLogprobVector {
  std::vector<std::size_t> positions;
  std::vector<double> logprobs;

  std::size_t size() const noexcept { return positions.size(); }
};

// Throws kNonFiniteScore unless every value is finite and <= 0, and
// kBackendFailure when positions are not strictly increasing or the two
// lists disagree in length.
void validate_logprobs(const MaskedLogprobVector& vec);

// Throws kInvalidSequence unless `positions` is strictly increasing and in
// range for a sequence of `length` tokens.
void validate_positions(std::span<const std::size_t> positions, std::size_t length);

}  // namespace pllbench
