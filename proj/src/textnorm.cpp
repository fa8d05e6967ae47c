#include "pllbench/textnorm.hpp"

#include <algorithm>
#include <cctype>

#include "pllbench/error.hpp"

namespace pllbench::textnorm {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Only horizontal blanks count as "spaces before punctuation".
bool is_blank(char c) { return c == ' ' || c == '\t'; }

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string_view code_point_at(std::string_view text, std::size_t i) {
  const std::size_t n = utf8_length(static_cast<unsigned char>(text[i]));
  return text.substr(i, std::min(n, text.size() - i));
}

bool punct_at(std::string_view text, std::size_t i, const PunctSet& punct) {
  return i < text.size() && punct.count(std::string(code_point_at(text, i))) > 0;
}

std::string collapse_runs(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (is_space(text[i])) {
      while (i < text.size() && is_space(text[i])) ++i;
      out += ' ';
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string drop_blanks_before_punct(std::string_view text, const PunctSet& punct) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (is_blank(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_blank(text[j])) ++j;
      if (!punct_at(text, j, punct)) out.append(text.substr(i, j - i));
      i = j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

bool apostrophe_ending_at(std::string_view text, std::size_t end, std::size_t* begin) {
  static constexpr std::string_view kStraight = "'";
  static constexpr std::string_view kCurly = "\xE2\x80\x99";  // ’
  for (auto a : {kStraight, kCurly}) {
    if (end >= a.size() && text.substr(end - a.size(), a.size()) == a) {
      *begin = end - a.size();
      return true;
    }
  }
  return false;
}

// "t", "s", "re", "ve", "ll", "d" or "m" as a whole word at `at`.
bool contraction_suffix_at(std::string_view text, std::size_t at) {
  std::size_t end = at;
  while (end < text.size() && is_alpha(text[end])) ++end;
  const auto word = text.substr(at, end - at);
  for (std::string_view s : {"t", "s", "re", "ve", "ll", "d", "m"}) {
    if (word == s) return true;
  }
  return false;
}

std::string rejoin(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (is_blank(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_blank(text[j])) ++j;
      std::size_t apos = 0;
      const bool contraction = apostrophe_ending_at(text, i, &apos) && apos > 0 &&
                               is_alpha(text[apos - 1]) && contraction_suffix_at(text, j);
      if (!contraction) out.append(text.substr(i, j - i));
      i = j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::string excerpt_around(std::string_view text, std::size_t begin, std::size_t end) {
  const std::size_t from = begin > 12 ? begin - 12 : 0;
  const std::size_t to = std::min(text.size(), end + 1);
  return std::string(text.substr(from, to - from));
}

}  // namespace

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte
}

PunctSet default_punct_set() {
  return {".", ",", "!", "?", ";", ":", "'", "\xE2\x80\x9D", "\xE2\x80\x99", ")"};
}

void NormalizationPolicy::validate() const {
  if (remove_space_before_punct && punct_set.empty()) {
    throw Error(ErrorCode::kConfigError, "punctuation set is empty");
  }
}

std::string normalize(std::string_view text, const NormalizationPolicy& policy) {
  policy.validate();
  std::string out(text);
  if (policy.collapse_whitespace_runs) out = collapse_runs(out);
  if (policy.remove_space_before_punct) out = drop_blanks_before_punct(out, policy.punct_set);
  if (policy.rejoin_contractions) out = rejoin(out);
  if (policy.trim_ends) out = std::string(trim(out));
  return out;
}

std::string_view finding_kind_name(FindingKind kind) {
  switch (kind) {
    case FindingKind::kSpaceBeforePunct: return "space-before-punctuation";
    case FindingKind::kLowercaseSentenceStart: return "lowercase-sentence-start";
    case FindingKind::kConcatenation: return "concatenation";
  }
  return "unknown";
}

Lexicon lexicon_from(const std::vector<std::string>& texts) {
  Lexicon lex;
  for (const auto& t : texts) {
    for (std::size_t i = 0; i < t.size();) {
      if (!is_alpha(t[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < t.size() && is_alpha(t[j])) ++j;
      lex.emplace(t.substr(i, j - i));
      i = j;
    }
  }
  return lex;
}

std::vector<Finding> detect_weirdness(std::string_view text, const Lexicon& lexicon,
                                      const PunctSet& punct) {
  std::vector<Finding> findings;

  for (std::size_t i = 0; i < text.size();) {
    if (!is_blank(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_blank(text[j])) ++j;
    if (punct_at(text, j, punct)) {
      findings.push_back({FindingKind::kSpaceBeforePunct, i, excerpt_around(text, i, j)});
    }
    i = j;
  }

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j < text.size() && std::islower(static_cast<unsigned char>(text[j]))) {
      findings.push_back({FindingKind::kLowercaseSentenceStart, j, excerpt_around(text, i, j)});
    }
  }

  for (std::size_t i = 0; i < text.size();) {
    if (!is_alpha(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_alpha(text[j])) ++j;
    const std::string_view word = text.substr(i, j - i);
    if (word.size() >= 12) {
      for (std::size_t k = 2; k + 2 <= word.size(); ++k) {
        if (lexicon.count(std::string(word.substr(0, k))) &&
            lexicon.count(std::string(word.substr(k)))) {
          findings.push_back({FindingKind::kConcatenation, i, std::string(word)});
          break;
        }
      }
    }
    i = j;
  }
  std::stable_sort(findings.begin(), findings.end(),
                   [](const Finding& a, const Finding& b) { return a.offset < b.offset; });
  return findings;
}

std::vector<Finding> detect_weirdness(std::string_view text) {
  return detect_weirdness(text, lexicon_from({std::string(text)}));
}

}  // namespace pllbench::textnorm
