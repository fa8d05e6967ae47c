#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "pllbench/backend.hpp"
#include "pllbench/error.hpp"
#include "pllbench/scoring.hpp"

using namespace pllbench;

namespace {

TableBackend two_symbol_table() {
  TableBackend::Config c;
  c.vocabulary = {"a", "b"};
  c.table = {{"_ b", {0.8, 0.2}}, {"a _", {0.3, 0.7}}};
  c.fallback = std::vector<double>{0.5, 0.5};
  return TableBackend(c);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no pllbench::Error thrown";
  return ErrorCode::kConfigError;
}

}  // namespace

TEST(TableBackend, WhitespaceTokenizer) {
  const auto b = two_symbol_table();
  const auto seq = b.tokenize("a b");
  EXPECT_EQ(seq.tokens, (std::vector<TokenId>{0, 1}));
  EXPECT_EQ(seq.scoreable_count(), 2u);
  EXPECT_EQ(code_of([&] { b.tokenize(""); }), ErrorCode::kEmptyText);
  EXPECT_EQ(code_of([&] { b.tokenize("  \t"); }), ErrorCode::kEmptyText);
  EXPECT_EQ(code_of([&] { b.tokenize("a c"); }), ErrorCode::kUnencodableText);
}

TEST(TableBackend, Lookups) {
  const auto b = two_symbol_table();
  const auto seq = b.tokenize("a b");
  EXPECT_EQ(b.context_key(seq, 0), "_ b");
  EXPECT_EQ(b.context_key(seq, 1), "a _");
  const std::vector<std::size_t> both{0, 1};
  const auto v = b.masked_logprobs(seq, both);
  EXPECT_EQ(v.logprobs, (std::vector<double>{std::log(0.8), std::log(0.7)}));
  EXPECT_NEAR(v.logprobs[0], -0.2231, 5e-5);
  EXPECT_NEAR(v.logprobs[1], -0.3567, 5e-5);
}

TEST(TableBackend, PositionsAreIndependent) {
  const auto b = two_symbol_table();
  const auto seq = b.tokenize("a b a b b");
  const auto all = iota(seq.size());
  const auto joint = b.masked_logprobs(seq, all);
  for (std::size_t p : all) {
    const std::vector<std::size_t> one{p};
    EXPECT_EQ(b.masked_logprobs(seq, one).logprobs[0], joint.logprobs[p]);
  }
}

TEST(TableBackend, BoundaryTokensAreNotScoreable) {
  TableBackend::Config c;
  c.vocabulary = {"a", "b"};
  c.boundary_tokens = true;
  c.fallback = std::vector<double>{0.5, 0.5};
  c.table = {{"<s> _ b", {0.9, 0.1}}};
  TableBackend b(c);
  const auto seq = b.tokenize("a b");
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_EQ(seq.scoreable, (std::vector<bool>{false, true, true, false}));
  EXPECT_EQ(seq.scoreable_positions(), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(pll(seq, b), std::log(0.9) + std::log(0.5));
  EXPECT_EQ(norm_pll(seq, b), (std::log(0.9) + std::log(0.5)) / 2.0);
}

TEST(TableBackend, RejectsBadDistributions) {
  const auto make = [](std::vector<double> p) {
    TableBackend::Config c;
    c.vocabulary = {"a", "b"};
    c.table = {{"_", p}};
    return TableBackend(c);
  };
  EXPECT_EQ(code_of([&] { make({0.5, 0.6}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([&] { make({1.0, 0.0}); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([&] { make({1.0}); }), ErrorCode::kConfigError);
  EXPECT_NO_THROW(make({0.25, 0.75}));
}

TEST(TableBackend, MissingContextWithoutDefault) {
  TableBackend::Config c;
  c.vocabulary = {"a"};
  c.table = {{"_", {1.0}}};
  TableBackend b(c);
  const std::vector<std::size_t> p{0};
  EXPECT_EQ(b.masked_logprobs(b.tokenize("a"), p).logprobs[0], 0.0);
  EXPECT_EQ(code_of([&] { b.masked_logprobs(b.tokenize("a a"), p); }), ErrorCode::kBackendFailure);
}

TEST(TableBackend, FromJson) {
  const auto b = TableBackend::from_json(nlohmann::json::parse(R"({
    "name": "toy", "vocabulary": ["a", "b"], "max_tokens": 8,
    "table": {"_ b": [0.8, 0.2], "a _": [0.3, 0.7]}, "default": [0.5, 0.5]})"));
  EXPECT_EQ(b.name(), "toy");
  EXPECT_EQ(b.max_tokens(), 8u);
  EXPECT_EQ(pll(b.tokenize("a b"), b), std::log(0.8) + std::log(0.7));
  EXPECT_EQ(code_of([] { TableBackend::from_json(nlohmann::json::parse(R"({"table": {}})")); }),
            ErrorCode::kConfigError);
}

TEST(Positions, Validation) {
  const auto b = two_symbol_table();
  const auto seq = b.tokenize("a b");
  const std::vector<std::size_t> unordered{1, 0};
  const std::vector<std::size_t> dup{1, 1};
  const std::vector<std::size_t> out_of_range{2};
  EXPECT_EQ(code_of([&] { b.masked_logprobs(seq, unordered); }), ErrorCode::kInvalidSequence);
  EXPECT_EQ(code_of([&] { b.masked_logprobs(seq, dup); }), ErrorCode::kInvalidSequence);
  EXPECT_EQ(code_of([&] { b.masked_logprobs(seq, out_of_range); }), ErrorCode::kInvalidSequence);
}

TEST(Unigram, Probabilities) {
  UnigramBackend b({{"a", 3}, {"b", 1}}, false);
  const auto seq = b.tokenize("a b a");
  const auto v = b.masked_logprobs(seq, iota(3));
  EXPECT_EQ(v.logprobs[0], std::log(0.75));
  EXPECT_EQ(v.logprobs[1], std::log(0.25));
  EXPECT_EQ(v.logprobs[2], std::log(0.75));
  EXPECT_EQ(b.name(), "unigram");
}

TEST(Unigram, UnseenWords) {
  UnigramBackend strict({{"a", 3}, {"b", 1}}, false);
  EXPECT_EQ(code_of([&] { strict.masked_logprobs(strict.tokenize("a zebra"), iota(2)); }),
            ErrorCode::kUnknownToken);
  UnigramBackend smoothed({{"a", 3}, {"b", 1}}, true);
  const auto v = smoothed.masked_logprobs(smoothed.tokenize("a zebra"), iota(2));
  EXPECT_EQ(v.logprobs[1], std::log(1.0 / (4.0 + 2.0)));
}

TEST(Unigram, FromJson) {
  const auto b = UnigramBackend::from_json(nlohmann::json::parse(R"({"counts": {"a": 3, "b": 1}})"));
  EXPECT_EQ(pll(b.tokenize("a"), b), std::log(0.75));
}

TEST(Windows, Starts) {
  EXPECT_EQ(window_starts(3, 4, 2), (std::vector<std::size_t>{0}));
  EXPECT_EQ(window_starts(4, 4, 2), (std::vector<std::size_t>{0}));
  EXPECT_EQ(window_starts(6, 4, 2), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(window_starts(7, 4, 2), (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(window_starts(10, 4, 3), (std::vector<std::size_t>{0, 3, 6}));
  EXPECT_EQ(code_of([] { window_starts(10, 4, 0); }), ErrorCode::kConfigError);
}

TEST(Windows, PlacementPicksNearestCenter) {
  const auto starts = window_starts(6, 4, 2);
  EXPECT_EQ(window_for_position(starts, 6, 4, 5), 1u);
  EXPECT_EQ(window_for_position(starts, 6, 4, 0), 0u);
  // Centers at 1.5 and 3.5.
  EXPECT_EQ(window_for_position(starts, 6, 4, 2), 0u);
  EXPECT_EQ(window_for_position(starts, 6, 4, 3), 1u);
  // Equidistant: earliest wins. Centers 1.5 and 2.5 for starts 0 and 1.
  const std::vector<std::size_t> s2{0, 1};
  EXPECT_EQ(window_for_position(s2, 5, 4, 2), 0u);
}

TEST(Windows, ShortSequenceMatchesDirect) {
  const auto b = two_symbol_table();
  const auto seq = b.tokenize("a b a");
  const auto all = iota(3);
  EXPECT_EQ(windowed_masked_logprobs(b, seq, all, 4, 2).logprobs, b.masked_logprobs(seq, all).logprobs);
}

TEST(Windows, MarkovTableUnchangedWhenContextFits) {
  std::mt19937_64 rng(11);
  for (std::size_t width : {1u, 2u}) {
    const auto t = oracle::random_table(rng, {"w", "x", "y", "z"}, width);
    const auto b = TableBackend::from_json(t.to_json());
    std::uniform_int_distribution<int> sym(0, 3);
    for (std::size_t window : {5u, 6u, 8u}) {
      for (std::size_t stride = 1; stride + 2 * width <= window; ++stride) {
        for (std::size_t len = 1; len <= 20; ++len) {
          std::vector<std::string> words;
          for (std::size_t i = 0; i < len; ++i) words.push_back(t.symbols[sym(rng)]);
          const auto seq = b.tokenize(oracle::join(words));
          const auto all = iota(len);
          const auto w = windowed_masked_logprobs(b, seq, all, window, stride);
          for (std::size_t i = 0; i < len; ++i) {
            ASSERT_EQ(w.logprobs[i], oracle::conditional(t, words, i))
                << "width " << width << " window " << window << " stride " << stride << " len " << len;
          }
        }
      }
    }
  }
}

TEST(Windows, RemoteStyleBackendCannotSlice) {
  struct NoSlice final : MaskedLmBackend {
    std::string name() const override { return "noslice"; }
    std::size_t max_tokens() const override { return 4; }
    bool concurrent_safe() const override { return true; }
    TokenizedSequence tokenize(std::string_view) const override {
      TokenizedSequence s;
      s.tokens.assign(8, kOpaqueToken);
      s.scoreable.assign(8, true);
      return s;
    }
    MaskedLogprobVector masked_logprobs(const TokenizedSequence&, std::span<const std::size_t> p) const override {
      return {{p.begin(), p.end()}, std::vector<double>(p.size(), -1.0)};
    }
  } backend;
  const auto seq = backend.tokenize("x");
  EXPECT_EQ(code_of([&] { windowed_masked_logprobs(backend, seq, iota(8), 4, 2); }), ErrorCode::kBackendFailure);
}

TEST(SerializedBackend, SameAnswers) {
  const auto b = two_symbol_table();
  SerializedBackend s(b);
  const auto seq = s.tokenize("b a b");
  EXPECT_EQ(s.masked_logprobs(seq, iota(3)).logprobs, b.masked_logprobs(seq, iota(3)).logprobs);
  EXPECT_EQ(s.name(), b.name());
}

TEST(Sequence, LogprobValidation) {
  EXPECT_NO_THROW(validate_logprobs({{0, 2}, {-1.0, 0.0}}));
  EXPECT_EQ(code_of([] { validate_logprobs({{0, 1}, {-1.0}}); }), ErrorCode::kBackendFailure);
  EXPECT_EQ(code_of([] { validate_logprobs({{1, 0}, {-1.0, -1.0}}); }), ErrorCode::kBackendFailure);
  EXPECT_EQ(code_of([] { validate_logprobs({{0}, {1e-9}}); }), ErrorCode::kNonFiniteScore);
}
