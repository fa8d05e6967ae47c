#include <algorithm>
#include <array>
#include <cctype>

#include "pllbench/backend.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/error.hpp"

namespace pllbench {
namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

bool ends_sentence(std::string_view word) {
  // Closing quotes/brackets after the terminator still end the sentence.
  while (!word.empty() && (word.back() == '"' || word.back() == '\'' || word.back() == ')')) {
    word.remove_suffix(1);
  }
  return !word.empty() && (word.back() == '.' || word.back() == '!' || word.back() == '?');
}

std::string strip_punct(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(word[e - 1]))) --e;
  return std::string(word.substr(b, e - b));
}

std::string lowered(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

constexpr std::array<std::string_view, 30> kFunctionWords = {
    "the",  "a",     "an",    "this",  "that",   "these",   "those", "his",  "her",  "hers",
    "their", "theirs", "my",  "our",   "your",   "its",     "some",  "any",  "each", "every",
    "no",   "one",   "all",   "both",  "either", "neither", "it",    "he",   "she",  "they"};

struct TemplateWord {
  std::string text;
  bool sentence_initial;
};

std::vector<TemplateWord> template_words(std::string_view template_text) {
  std::vector<TemplateWord> out;
  bool initial = true;
  for (const auto& raw : split_whitespace(template_text)) {
    const bool next_initial = ends_sentence(raw);
    if (raw.find(kMask) == std::string::npos) {
      const auto w = strip_punct(raw);
      if (!w.empty()) out.push_back({w, initial});
    }
    initial = next_initial;
  }
  return out;
}

// Decides whether a capitalized candidate keeps its capital at a
// mid-sentence mask:
//   1. "I" and acronyms (two or more capitals, "TV") keep it.
//   2. The word appears capitalized mid-sentence elsewhere: keep.
//   3. The word appears in lowercase elsewhere: drop ("The" with "the" nearby).
//   4. The word appears capitalized at a sentence start only: keep (a name
//      opening the sentence, "Jordan wanted ... so <mask> ate").
//   5. Otherwise drop only for common function words.
bool keeps_capital(const std::string& word, const std::vector<TemplateWord>& context) {
  if (word == "I") return true;
  if (std::count_if(word.begin(), word.end(), is_upper) >= 2) return true;
  const std::string low = lowered(word);
  bool seen_initial = false;
  bool seen_lower = false;
  for (const auto& w : context) {
    if (w.text == word && !w.sentence_initial) return true;
    if (w.text == word) seen_initial = true;
    if (w.text == low) seen_lower = true;
  }
  if (seen_lower) return false;
  if (seen_initial) return true;
  return std::find(kFunctionWords.begin(), kFunctionWords.end(), low) == kFunctionWords.end();
}

bool mask_is_sentence_initial(std::string_view before) {
  while (!before.empty() && std::isspace(static_cast<unsigned char>(before.back()))) {
    before.remove_suffix(1);
  }
  if (before.empty()) return true;
  const auto space = before.find_last_of(" \t\n");
  return ends_sentence(space == std::string_view::npos ? before : before.substr(space + 1));
}

}  // namespace

MaterializedCandidate substitute(const ForcedChoiceInstance& inst, std::size_t candidate_index) {
  if (candidate_index >= inst.candidates.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, inst.id + ": candidate " + std::to_string(candidate_index) +
                                                 " of " + std::to_string(inst.candidates.size()));
  }
  const auto at = inst.template_text.find(kMask);
  if (at == std::string::npos) {
    throw Error(ErrorCode::kMalformedRow, inst.id + ": template has no mask");
  }
  const std::string_view before = std::string_view(inst.template_text).substr(0, at);
  const std::string_view after = std::string_view(inst.template_text).substr(at + kMask.size());

  std::string filler = inst.candidates[candidate_index];
  if (!filler.empty()) {
    if (mask_is_sentence_initial(before)) {
      if (is_lower(filler[0])) filler[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(filler[0])));
    } else if (is_upper(filler[0])) {
      const auto words = split_whitespace(filler);
      const std::string first = words.empty() ? std::string() : strip_punct(words.front());
      if (!first.empty() && !keeps_capital(first, template_words(inst.template_text))) {
        filler[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(filler[0])));
      }
    }
  }

  MaterializedCandidate out;
  out.instance_id = inst.id;
  out.candidate_index = candidate_index;
  out.full_text.reserve(inst.template_text.size() + filler.size());
  out.full_text.append(before).append(filler).append(after);
  return out;
}

std::vector<MaterializedCandidate> materialize(const ForcedChoiceInstance& inst) {
  std::vector<MaterializedCandidate> out;
  out.reserve(inst.candidates.size());
  for (std::size_t i = 0; i < inst.candidates.size(); ++i) out.push_back(substitute(inst, i));
  return out;
}

}  // namespace pllbench
