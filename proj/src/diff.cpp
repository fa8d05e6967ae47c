#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/error.hpp"
#include "pllbench/textnorm.hpp"

namespace pllbench {
namespace {

using Key = std::pair<std::string, std::size_t>;

std::string apply_punct(std::string_view s) {
  return textnorm::normalize(s, textnorm::NormalizationPolicy::not_kws());
}

std::string apply_whitespace(std::string_view s) {
  textnorm::NormalizationPolicy policy;
  policy.remove_space_before_punct = false;
  policy.collapse_whitespace_runs = true;
  policy.trim_ends = true;
  return textnorm::normalize(s, policy);
}

std::string apply_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string drop_whitespace(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

std::vector<DefectClass> classify(const std::string& a, const std::string& b) {
  using Transform = std::string (*)(std::string_view);
  const std::pair<DefectClass, Transform> steps[] = {
      {DefectClass::kSpaceBeforePunct, &apply_punct},
      {DefectClass::kWhitespaceRuns, &apply_whitespace},
      {DefectClass::kCasingOnly, &apply_case},
  };
  // Smallest combination of transforms (fewest first, then in step order)
  // that reconciles the two sides.
  std::vector<unsigned> masks{1, 2, 4, 3, 5, 6, 7};
  for (unsigned mask : masks) {
    std::string x = a;
    std::string y = b;
    std::vector<DefectClass> classes;
    for (unsigned k = 0; k < 3; ++k) {
      if (!(mask & (1u << k))) continue;
      x = steps[k].second(x);
      y = steps[k].second(y);
      classes.push_back(steps[k].first);
    }
    if (x == y) return classes;
  }
  if (drop_whitespace(a) == drop_whitespace(b)) return {DefectClass::kConcatenation};
  if (apply_case(drop_whitespace(a)) == apply_case(drop_whitespace(b))) {
    return {DefectClass::kCasingOnly, DefectClass::kConcatenation};
  }
  return {DefectClass::kOther};
}

}  // namespace

std::string_view defect_class_name(DefectClass c) {
  switch (c) {
    case DefectClass::kSpaceBeforePunct: return "space-before-punctuation";
    case DefectClass::kWhitespaceRuns: return "whitespace-runs";
    case DefectClass::kCasingOnly: return "casing-only";
    case DefectClass::kConcatenation: return "concatenation";
    case DefectClass::kOther: return "other";
  }
  return "unknown";
}

std::map<DefectClass, std::size_t> DiffReport::counts() const {
  std::map<DefectClass, std::size_t> out;
  for (const auto& e : entries) {
    for (auto c : e.classes) ++out[c];
  }
  return out;
}

DiffReport diff_preparations(std::span<const MaterializedCandidate> a,
                             std::span<const MaterializedCandidate> b) {
  std::map<Key, const MaterializedCandidate*> right;
  for (const auto& m : b) right.emplace(Key{m.instance_id, m.candidate_index}, &m);

  DiffReport report;
  std::map<Key, bool> matched;
  for (const auto& m : a) {
    const Key key{m.instance_id, m.candidate_index};
    auto it = right.find(key);
    if (it == right.end()) {
      report.only_in_a.push_back(key);
      continue;
    }
    matched[key] = true;
    if (m.full_text == it->second->full_text) continue;
    report.entries.push_back(
        {m.instance_id, m.candidate_index, m.full_text, it->second->full_text,
         classify(m.full_text, it->second->full_text)});
  }
  for (const auto& m : b) {
    const Key key{m.instance_id, m.candidate_index};
    if (!matched.count(key)) report.only_in_b.push_back(key);
  }
  return report;
}

std::vector<MaterializedCandidate> read_preparation(std::istream& in) {
  std::vector<MaterializedCandidate> out;
  std::string raw;
  std::string instance_lines;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (std::all_of(raw.begin(), raw.end(), [](unsigned char c) { return std::isspace(c); })) {
      instance_lines += '\n';
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line) + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("text")) {
      try {
        MaterializedCandidate m;
        const auto& id = doc.at("id");
        m.instance_id = id.is_string() ? id.get<std::string>() : id.dump();
        m.candidate_index = doc.value("candidate_index", std::size_t{0});
        m.full_text = doc.at("text").get<std::string>();
        out.push_back(std::move(m));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line) + ": " + e.what());
      }
      instance_lines += '\n';  // keep line numbers aligned
    } else {
      instance_lines += raw;
      instance_lines += '\n';
    }
  }
  for (const auto& inst : parse_winogradversarial(instance_lines)) {
    for (auto& m : materialize(inst)) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace pllbench
