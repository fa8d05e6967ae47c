#include "json.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/error.hpp"

namespace pllbench {
namespace {

constexpr std::string_view kTimeDialMask = "<MASK>";

[[noreturn]] void row_error(ErrorCode code, const std::string& row, const std::string& what) {
  throw Error(code, "row " + row + ": " + what);
}

std::string row_label(const nlohmann::json& row, std::size_t index) {
  if (auto it = row.find("id"); it != row.end()) {
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
  }
  return std::to_string(index);
}

std::vector<std::string> turns_of(const nlohmann::json& row, const std::string& label) {
  for (const char* key : {"conversation", "dialog", "context"}) {
    auto it = row.find(key);
    if (it == row.end()) continue;
    if (it->is_string()) return {it->get<std::string>()};
    if (it->is_array()) {
      std::vector<std::string> turns;
      for (const auto& t : *it) {
        if (!t.is_string()) row_error(ErrorCode::kMalformedRow, label, "dialogue turns must be strings");
        turns.push_back(t.get<std::string>());
      }
      return turns;
    }
    row_error(ErrorCode::kMalformedRow, label, std::string("\"") + key + "\" must be text or a list");
  }
  row_error(ErrorCode::kMalformedRow, label, "no conversation");
}

std::string candidate(const nlohmann::json& row, const char* key, const std::string& label) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) {
    row_error(ErrorCode::kWrongCandidateCount, label, std::string("missing candidate \"") + key + "\"");
  }
  return it->get<std::string>();
}

// Replaces the single TimeDial-style or canonical mask with kMask.
std::string canonical_template(std::string text, const std::string& label) {
  std::size_t found = 0;
  std::size_t at = std::string::npos;
  for (auto m : {kTimeDialMask, kMask}) {
    for (auto pos = text.find(m); pos != std::string::npos; pos = text.find(m, pos + m.size())) {
      ++found;
      at = pos;
    }
  }
  if (found != 1) {
    row_error(ErrorCode::kMalformedRow, label,
              "conversation must hold exactly one <MASK>, found " + std::to_string(found));
  }
  text.replace(at, kTimeDialMask.size(), kMask);
  return text;
}

ForcedChoiceInstance parse_row(const nlohmann::json& row, std::size_t index,
                               const TimeDialOptions& options) {
  const std::string label = row_label(row, index);
  if (!row.is_object()) row_error(ErrorCode::kMalformedRow, label, "row must be an object");

  ForcedChoiceInstance inst;
  inst.tag = DatasetTag::kTimeDial;
  inst.id = "timedial-" + label;

  std::string joined;
  for (const auto& turn : turns_of(row, label)) {
    if (!joined.empty()) joined += options.turn_separator;
    joined += turn;
  }
  inst.template_text = canonical_template(std::move(joined), label);

  if (auto it = row.find("candidates"); it != row.end()) {
    auto labels = row.find("labels");
    if (!it->is_array() || labels == row.end() || !labels->is_array()) {
      row_error(ErrorCode::kMalformedRow, label, "\"candidates\" needs a matching \"labels\" list");
    }
    for (const auto& c : *it) {
      if (!c.is_string()) row_error(ErrorCode::kMalformedRow, label, "candidates must be strings");
      inst.candidates.push_back(c.get<std::string>());
    }
    for (const auto& l : *labels) {
      if (l.is_boolean()) {
        inst.correct_flags.push_back(l.get<bool>());
      } else if (l.is_number_integer() && (l == 0 || l == 1)) {
        inst.correct_flags.push_back(l == 1);
      } else {
        row_error(ErrorCode::kMalformedRow, label, "labels must be booleans or 0/1");
      }
    }
    if (inst.correct_flags.size() != inst.candidates.size()) {
      row_error(ErrorCode::kMalformedRow, label, "one label per candidate required");
    }
  } else {
    inst.candidates = {candidate(row, "correct1", label), candidate(row, "correct2", label),
                       candidate(row, "incorrect1", label), candidate(row, "incorrect2", label)};
    inst.correct_flags = {true, true, false, false};
  }

  if (inst.candidates.size() != 4 || inst.correct_count() != 2) {
    row_error(ErrorCode::kWrongCandidateCount, label,
              std::to_string(inst.candidates.size()) + " candidates with " +
                  std::to_string(inst.correct_count()) + " correct; need 4 with 2 correct");
  }
  return inst;
}

}  // namespace

std::vector<ForcedChoiceInstance> parse_timedial(std::string_view json, const TimeDialOptions& options) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRow, std::string("invalid JSON: ") + e.what());
  }
  std::vector<ForcedChoiceInstance> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(parse_row(doc[i], i, options));
  } else if (doc.is_object()) {
    // Some mirrors key rows by id.
    std::size_t i = 0;
    for (auto& [key, row] : doc.items()) {
      nlohmann::json copy = row;
      if (copy.is_object() && !copy.contains("id")) copy["id"] = key;
      out.push_back(parse_row(copy, i++, options));
    }
  } else {
    throw Error(ErrorCode::kMalformedRow, "TimeDial document must be an array of rows");
  }
  return out;
}

}  // namespace pllbench
