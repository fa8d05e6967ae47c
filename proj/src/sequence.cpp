#include "pllbench/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pllbench/error.hpp"

namespace pllbench {

std::size_t TokenizedSequence::scoreable_count() const noexcept {
  return static_cast<std::size_t>(std::count(scoreable.begin(), scoreable.end(), true));
}

std::vector<std::size_t> TokenizedSequence::scoreable_positions() const {
  std::vector<std::size_t> out;
  out.reserve(scoreable.size());
  for (std::size_t i = 0; i < scoreable.size(); ++i) {
    if (scoreable[i]) out.push_back(i);
  }
  return out;
}

void TokenizedSequence::validate() const {
  if (tokens.empty()) {
    throw Error(ErrorCode::kInvalidSequence, "sequence has no tokens");
  }
  if (scoreable.size() != tokens.size()) {
    throw Error(ErrorCode::kInvalidSequence,
                "scoreable mask has " + std::to_string(scoreable.size()) + " flags for " +
                    std::to_string(tokens.size()) + " tokens");
  }
  if (scoreable_count() == 0) {
    throw Error(ErrorCode::kInvalidSequence, "sequence has no scoreable positions");
  }
}

void validate_positions(std::span<const std::size_t> positions, std::size_t length) {
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k] >= length) {
      throw Error(ErrorCode::kInvalidSequence, "position " + std::to_string(positions[k]) +
                                                   " outside sequence of length " +
                                                   std::to_string(length));
    }
    if (k > 0 && positions[k] <= positions[k - 1]) {
      throw Error(ErrorCode::kInvalidSequence, "positions must be strictly increasing");
    }
  }
}

void validate_logprobs(const MaskedLogprobVector& vec) {
  if (vec.positions.size() != vec.logprobs.size()) {
    throw Error(ErrorCode::kBackendFailure,
                "backend returned " + std::to_string(vec.logprobs.size()) + " values for " +
                    std::to_string(vec.positions.size()) + " positions");
  }
  for (std::size_t k = 0; k < vec.logprobs.size(); ++k) {
    if (k > 0 && vec.positions[k] <= vec.positions[k - 1]) {
      throw Error(ErrorCode::kBackendFailure, "backend positions not strictly increasing");
    }
    const double v = vec.logprobs[k];
    if (!std::isfinite(v) || v > 0.0) {
      throw Error(ErrorCode::kNonFiniteScore, "logprob " + std::to_string(v) + " at position " +
                                                  std::to_string(vec.positions[k]));
    }
  }
}

}  // namespace pllbench
