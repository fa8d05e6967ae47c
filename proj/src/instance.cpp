#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pllbench/backend.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/error.hpp"

namespace pllbench {
namespace {

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string tag_prefix(DatasetTag tag) { return lower(dataset_tag_name(tag)); }

std::string numbered_id(DatasetTag tag, std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%04zu", n);
  return tag_prefix(tag) + buf;
}

[[noreturn]] void line_error(ErrorCode code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

std::string id_from_json(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::kMalformedLine, "id must be a string or integer");
}

// 1-based answer from "1"/"2"/... or a bare integer.
std::size_t answer_index(const nlohmann::json& v, std::size_t n_options, std::size_t line) {
  long long k = 0;
  if (v.is_number_integer()) {
    k = v.get<long long>();
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.empty() || s.size() > 3 || !std::all_of(s.begin(), s.end(), ::isdigit)) {
      line_error(ErrorCode::kBadAnswerIndex, line, "answer '" + s + "' is not an option number");
    }
    k = std::stoll(s);
  } else {
    line_error(ErrorCode::kBadAnswerIndex, line, "answer must be a string like \"1\"");
  }
  if (k < 1 || static_cast<std::size_t>(k) > n_options) {
    line_error(ErrorCode::kBadAnswerIndex, line,
               "answer " + std::to_string(k) + " outside 1.." + std::to_string(n_options));
  }
  return static_cast<std::size_t>(k - 1);
}

using LineHandler = ForcedChoiceInstance (*)(const nlohmann::json&, std::size_t line, std::size_t ordinal);

std::vector<ForcedChoiceInstance> parse_json_lines(std::istream& in, LineHandler handler) {
  std::vector<ForcedChoiceInstance> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (std::all_of(raw.begin(), raw.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      line_error(ErrorCode::kMalformedLine, line, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) line_error(ErrorCode::kMalformedLine, line, "expected a JSON object");
    try {
      out.push_back(handler(doc, line, out.size() + 1));
    } catch (const nlohmann::json::exception& e) {
      line_error(ErrorCode::kMalformedLine, line, e.what());
    }
  }
  return out;
}

std::string required_string(const nlohmann::json& doc, const char* key, std::size_t line) {
  auto it = doc.find(key);
  if (it == doc.end()) line_error(ErrorCode::kMalformedLine, line, std::string("missing \"") + key + "\"");
  if (!it->is_string()) {
    line_error(ErrorCode::kMalformedLine, line, std::string("\"") + key + "\" must be a string");
  }
  return it->get<std::string>();
}

ForcedChoiceInstance canonical_line(const nlohmann::json& doc, std::size_t line, std::size_t ordinal) {
  ForcedChoiceInstance inst;
  inst.tag = DatasetTag::kWinogradversarial;
  if (auto it = doc.find("dataset"); it != doc.end()) {
    try {
      inst.tag = parse_dataset_tag(it->get<std::string>());
    } catch (const Error& e) {
      line_error(ErrorCode::kMalformedLine, line, e.detail());
    }
  }
  inst.id = doc.contains("id") ? id_from_json(doc.at("id")) : numbered_id(inst.tag, ordinal);
  inst.template_text = required_string(doc, "sentence", line);
  const auto masks = count_occurrences(inst.template_text, kMask);
  if (masks == 0) line_error(ErrorCode::kMissingPlaceholder, line, "sentence has no <mask>");
  if (masks > 1) line_error(ErrorCode::kMalformedLine, line, "sentence has more than one <mask>");

  for (std::size_t k = 1;; ++k) {
    const std::string key = "option" + std::to_string(k);
    if (!doc.contains(key)) break;
    inst.candidates.push_back(required_string(doc, key.c_str(), line));
  }
  if (inst.candidates.size() < 2) {
    line_error(ErrorCode::kMalformedLine, line, "need at least option1 and option2");
  }

  if (auto it = doc.find("correct_flags"); it != doc.end()) {
    if (!it->is_array() || it->size() != inst.candidates.size()) {
      line_error(ErrorCode::kMalformedLine, line, "correct_flags must list one boolean per option");
    }
    for (const auto& f : *it) {
      if (!f.is_boolean()) line_error(ErrorCode::kMalformedLine, line, "correct_flags must be booleans");
      inst.correct_flags.push_back(f.get<bool>());
    }
  } else {
    auto ans = doc.find("answer");
    if (ans == doc.end()) line_error(ErrorCode::kMalformedLine, line, "missing \"answer\"");
    inst.correct_flags.assign(inst.candidates.size(), false);
    inst.correct_flags[answer_index(*ans, inst.candidates.size(), line)] = true;
  }
  try {
    inst.validate();
  } catch (const Error& e) {
    line_error(ErrorCode::kMalformedLine, line, e.detail());
  }
  return inst;
}

ForcedChoiceInstance winogrande_line(const nlohmann::json& doc, std::size_t line, std::size_t ordinal) {
  ForcedChoiceInstance inst;
  inst.tag = DatasetTag::kWinogrande;
  inst.id = doc.contains("qID") ? id_from_json(doc.at("qID")) : numbered_id(inst.tag, ordinal);
  std::string sentence = required_string(doc, "sentence", line);
  const auto blanks = std::count(sentence.begin(), sentence.end(), '_');
  if (blanks == 0) line_error(ErrorCode::kMissingPlaceholder, line, "sentence has no '_'");
  if (blanks > 1) line_error(ErrorCode::kMalformedLine, line, "sentence has more than one '_'");
  const auto at = sentence.find('_');
  inst.template_text = sentence.substr(0, at) + std::string(kMask) + sentence.substr(at + 1);
  inst.candidates = {required_string(doc, "option1", line), required_string(doc, "option2", line)};
  auto ans = doc.find("answer");
  if (ans == doc.end()) line_error(ErrorCode::kMalformedLine, line, "missing \"answer\"");
  inst.correct_flags = {false, false};
  inst.correct_flags[answer_index(*ans, 2, line)] = true;
  return inst;
}

}  // namespace

std::string_view dataset_tag_name(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::kWinogradversarial: return "Winogradversarial";
    case DatasetTag::kWinograd: return "Winograd";
    case DatasetTag::kWinogrande: return "Winogrande";
    case DatasetTag::kTimeDial: return "TimeDial";
  }
  return "Unknown";
}

DatasetTag parse_dataset_tag(std::string_view text) {
  const auto s = lower(text);
  for (auto tag : {DatasetTag::kWinogradversarial, DatasetTag::kWinograd, DatasetTag::kWinogrande,
                   DatasetTag::kTimeDial}) {
    if (s == lower(dataset_tag_name(tag))) return tag;
  }
  if (s == "wsc") return DatasetTag::kWinograd;
  throw Error(ErrorCode::kConfigError, "unknown dataset tag '" + std::string(text) + "'");
}

std::size_t ForcedChoiceInstance::correct_count() const {
  return static_cast<std::size_t>(std::count(correct_flags.begin(), correct_flags.end(), true));
}

void ForcedChoiceInstance::validate() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorCode::kMalformedRow, id + ": " + what);
  };
  if (count_occurrences(template_text, kMask) != 1) fail("template must hold exactly one <mask>");
  if (candidates.size() < 2) fail("fewer than 2 candidates");
  if (correct_flags.size() != candidates.size()) fail("one correct flag per candidate required");
  const auto n = correct_count();
  if (n == 0) fail("no candidate marked correct");
  if (candidates.size() == 2 && n != 1) fail("binary instance needs exactly one correct candidate");
  if (tag == DatasetTag::kTimeDial && (candidates.size() != 4 || n != 2)) {
    fail("TimeDial instance needs 4 candidates with 2 correct");
  }
}

std::vector<ForcedChoiceInstance> parse_winogradversarial(std::istream& in) {
  auto out = parse_json_lines(in, &canonical_line);
  link_twins(out);
  return out;
}

std::vector<ForcedChoiceInstance> parse_winogradversarial(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_winogradversarial(in);
}

std::vector<ForcedChoiceInstance> parse_winogrande(std::istream& in) {
  return parse_json_lines(in, &winogrande_line);
}

std::vector<ForcedChoiceInstance> parse_winogrande(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_winogrande(in);
}

// Strips punctuation the two words share at either end: "lot." / "little."
// gives (lot, little).
static std::pair<std::string, std::string> bare_switch(std::string a, std::string b) {
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (a.size() > 1 && b.size() > 1 && a.back() == b.back() && punct(a.back())) {
    a.pop_back();
    b.pop_back();
  }
  std::size_t k = 0;
  while (k + 1 < a.size() && k + 1 < b.size() && a[k] == b[k] && punct(a[k])) ++k;
  return {a.substr(k), b.substr(k)};
}

void link_twins(std::vector<ForcedChoiceInstance>& instances) {
  for (std::size_t i = 0; i + 1 < instances.size();) {
    auto& a = instances[i];
    auto& b = instances[i + 1];
    const auto wa = split_whitespace(a.template_text);
    const auto wb = split_whitespace(b.template_text);
    std::size_t diffs = 0;
    std::size_t where = 0;
    if (wa.size() == wb.size()) {
      for (std::size_t k = 0; k < wa.size(); ++k) {
        if (wa[k] != wb[k]) {
          ++diffs;
          where = k;
        }
      }
    }
    const bool adversarial =
        a.tag == DatasetTag::kWinogradversarial && b.tag == DatasetTag::kWinogradversarial;
    if (adversarial && diffs == 1 && a.correct_flags == b.correct_flags &&
        a.candidates == b.candidates) {
      a.pair_id = b.pair_id = a.id + "|" + b.id;
      a.switch_word = b.switch_word = bare_switch(wa[where], wb[where]);
      i += 2;
    } else {
      ++i;
    }
  }
}

std::string to_canonical_json(const ForcedChoiceInstance& inst) {
  nlohmann::ordered_json j;
  j["id"] = inst.id;
  j["dataset"] = dataset_tag_name(inst.tag);
  j["sentence"] = inst.template_text;
  for (std::size_t k = 0; k < inst.candidates.size(); ++k) {
    j["option" + std::to_string(k + 1)] = inst.candidates[k];
  }
  if (inst.correct_count() == 1) {
    const auto it = std::find(inst.correct_flags.begin(), inst.correct_flags.end(), true);
    j["answer"] = std::to_string(std::distance(inst.correct_flags.begin(), it) + 1);
  } else {
    j["correct_flags"] = inst.correct_flags;
  }
  return j.dump();
}

void write_canonical_jsonl(std::ostream& out, std::span<const ForcedChoiceInstance> instances) {
  for (const auto& inst : instances) out << to_canonical_json(inst) << '\n';
}

}  // namespace pllbench
