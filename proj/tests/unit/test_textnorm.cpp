#include <gtest/gtest.h>

#include <random>

#include "pllbench/error.hpp"
#include "pllbench/textnorm.hpp"

using namespace pllbench;
using namespace pllbench::textnorm;

namespace {

std::string random_text(std::mt19937_64& rng, const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t n = len(rng); n > 0; --n) s += alphabet[pick(rng)];
  return s;
}

const std::vector<std::string> kAlphabet{"a", "B", "z", " ", " ", "\t", "  ", ".", ",", "!", "?",
                                         ";", ":", "'", ")", "(", "”", "’", "-", "\n", "t"};

}  // namespace

TEST(Normalize, Goldens) {
  const auto p = NormalizationPolicy::not_kws();
  EXPECT_EQ(normalize("care of john . John", p), "care of john. John");
  EXPECT_EQ(normalize("Hello , world !", p), "Hello, world!");
  EXPECT_EQ(normalize("(a , b )", p), "(a, b)");
  EXPECT_EQ(normalize("he said “hi ”", p), "he said “hi”");
  EXPECT_EQ(normalize("tab\t.", p), "tab.");
  EXPECT_EQ(normalize("line\n.", p), "line\n.");
  EXPECT_EQ(normalize(" . leading", p), ". leading");
  EXPECT_EQ(normalize("", p), "");
}

TEST(Normalize, OptionalSteps) {
  NormalizationPolicy p;
  p.collapse_whitespace_runs = true;
  p.trim_ends = true;
  EXPECT_EQ(normalize("  a   b \t c .  ", p), "a b c.");
  p.rejoin_contractions = true;
  EXPECT_EQ(normalize("don' t stop", p), "don't stop");
  EXPECT_EQ(normalize("the cats' toys", p), "the cats' toys");
  p.remove_space_before_punct = false;
  p.rejoin_contractions = false;
  EXPECT_EQ(normalize("a  .", p), "a .");
}

TEST(Normalize, CustomPunctSet) {
  NormalizationPolicy p;
  p.punct_set = {"."};
  EXPECT_EQ(normalize("a , b .", p), "a , b.");
  p.punct_set.clear();
  EXPECT_THROW(p.validate(), Error);
  p.remove_space_before_punct = false;
  EXPECT_NO_THROW(p.validate());
}

TEST(Normalize, Idempotent) {
  std::mt19937_64 rng(17);
  NormalizationPolicy full;
  full.collapse_whitespace_runs = true;
  full.trim_ends = true;
  full.rejoin_contractions = true;
  for (int i = 0; i < 5000; ++i) {
    const auto s = random_text(rng, kAlphabet, 30);
    for (const auto& p : {NormalizationPolicy::not_kws(), full}) {
      const auto once = normalize(s, p);
      ASSERT_EQ(normalize(once, p), once) << '[' << s << ']';
    }
  }
}

TEST(Normalize, OnlyWhitespaceIsRemoved) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 5000; ++i) {
    const auto s = random_text(rng, kAlphabet, 30);
    const auto out = normalize(s, NormalizationPolicy::not_kws());
    std::string s_dense;
    std::string out_dense;
    for (char c : s) {
      if (c != ' ' && c != '\t') s_dense += c;
    }
    for (char c : out) {
      if (c != ' ' && c != '\t') out_dense += c;
    }
    ASSERT_EQ(s_dense, out_dense);
  }
}

TEST(Normalize, NoPunctuationNoChange) {
  std::mt19937_64 rng(23);
  const std::vector<std::string> plain{"a", "B", " ", "\t", "  ", "-", "(", "x", "“"};
  for (int i = 0; i < 5000; ++i) {
    const auto s = random_text(rng, plain, 30);
    ASSERT_EQ(normalize(s, NormalizationPolicy::not_kws()), s);
  }
}

TEST(Weirdness, SpaceBeforePunct) {
  const auto f = detect_weirdness("care of john .");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, FindingKind::kSpaceBeforePunct);
  EXPECT_EQ(f[0].offset, 12u);
}

TEST(Weirdness, Concatenation) {
  const Lexicon lex{"Xenophanes", "conveys", "the", "idea"};
  const auto f = detect_weirdness("Xenophanesconveys", lex);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, FindingKind::kConcatenation);
  EXPECT_EQ(f[0].excerpt, "Xenophanesconveys");
}

TEST(Weirdness, LowercaseSentenceStart) {
  const auto f = detect_weirdness("It rained. then it stopped.");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, FindingKind::kLowercaseSentenceStart);
}

TEST(Weirdness, CleanSentence) {
  EXPECT_TRUE(detect_weirdness("The trophy doesn't fit into the brown suitcase.").empty());
  EXPECT_TRUE(detect_weirdness("Xenophanes conveys an idea.").empty());
}

TEST(Weirdness, FindingsInTextOrder) {
  const Lexicon lex{"Xenophanes", "conveys"};
  const auto f = detect_weirdness("a . b. c Xenophanesconveys ,", lex);
  ASSERT_GE(f.size(), 3u);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LE(f[i - 1].offset, f[i].offset);
}
