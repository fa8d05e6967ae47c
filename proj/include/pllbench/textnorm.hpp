#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace pllbench::textnorm {

// Characters are UTF-8 encoded code points, so curly quotes fit.
using PunctSet = std::set<std::string>;

// . , ! ? ; : ' ” ’ )
PunctSet default_punct_set();

struct NormalizationPolicy {
  bool remove_space_before_punct = true;
  PunctSet punct_set = default_punct_set();
  bool collapse_whitespace_runs = false;
  bool trim_ends = false;
  // Joins "don' t" into "don't": a letter and apostrophe, blanks, then one of
  // t, s, re, ve, ll, d, m as a whole word. Off by default.
  bool rejoin_contractions = false;

  // The "not kws" transform: only spaces before punctuation are removed.
  static NormalizationPolicy not_kws() { return {}; }

  // Throws Error(kConfigError) when remove_space_before_punct is set with an
  // empty punctuation set.
  void validate() const;
};

// Applies, in order: whitespace-run collapse, removal of every run of
// spaces/tabs directly before a punct_set character, contraction rejoin,
// end trim. Never inserts characters, never deletes anything but whitespace.
std::string normalize(std::string_view text, const NormalizationPolicy& policy);

enum class FindingKind {
  kSpaceBeforePunct,
  kLowercaseSentenceStart,
  kConcatenation,
};

std::string_view finding_kind_name(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::size_t offset = 0;  // byte offset into the inspected text
  std::string excerpt;
};

// Words whose casing is trusted, e.g. every whitespace-delimited word seen
// elsewhere in a corpus.
using Lexicon = std::unordered_set<std::string>;

// Builds a lexicon from the alphabetic words of the given texts.
Lexicon lexicon_from(const std::vector<std::string>& texts);

// Reports space-before-punctuation sites, sentences opening in lowercase
// (a sign of blanket lowercasing) and alphabetic words of 12+ letters that
// split into two lexicon entries with their lexicon casing, like
// "Xenophanesconveys" = "Xenophanes" + "conveys".
std::vector<Finding> detect_weirdness(std::string_view text, const Lexicon& lexicon,
                                      const PunctSet& punct = default_punct_set());

// Same, with a lexicon built from the text's own words.
std::vector<Finding> detect_weirdness(std::string_view text);

// Number of bytes in the UTF-8 sequence starting with `lead`.
std::size_t utf8_length(unsigned char lead);

}  // namespace pllbench::textnorm
