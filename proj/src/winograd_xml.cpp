#include <cctype>
#include <cstdio>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pllbench/datasets.hpp"
#include "pllbench/error.hpp"
#include "pllbench/textnorm.hpp"

namespace pllbench {
namespace {

namespace pt = boost::property_tree;

std::string squeeze(std::string_view text) {
  textnorm::NormalizationPolicy policy;
  policy.remove_space_before_punct = false;
  policy.collapse_whitespace_runs = true;
  policy.trim_ends = true;
  return textnorm::normalize(text, policy);
}

const pt::ptree& child(const pt::ptree& node, const std::string& name, const std::string& path) {
  auto it = node.find(name);
  if (it == node.not_found()) {
    throw Error(ErrorCode::kMissingField, path + "/" + name);
  }
  return it->second;
}

// Pronoun segments sometimes end right before punctuation ("... than <mask>.").
bool starts_with_punct(std::string_view text) {
  if (text.empty()) return false;
  const auto punct = textnorm::default_punct_set();
  const auto n = textnorm::utf8_length(static_cast<unsigned char>(text.front()));
  return punct.count(std::string(text.substr(0, n))) > 0 && text.front() != '\'';
}

std::size_t answer_letter(std::string_view raw, std::size_t n_answers, const std::string& path) {
  const std::string s = squeeze(raw);
  std::string letter;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) letter += static_cast<char>(std::toupper(c));
  }
  if (letter.size() != 1 || static_cast<std::size_t>(letter[0] - 'A') >= n_answers) {
    throw Error(ErrorCode::kSchemaError, path + ": unusable correct answer '" + s + "'");
  }
  return static_cast<std::size_t>(letter[0] - 'A');
}

}  // namespace

std::vector<ForcedChoiceInstance> parse_winograd_xml(std::string_view xml) {
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kSchemaError, std::string("not well-formed XML: ") + e.what());
  }
  auto root = doc.find("collection");
  if (root == doc.not_found()) {
    throw Error(ErrorCode::kSchemaError, "root element must be <collection>");
  }

  std::vector<ForcedChoiceInstance> out;
  std::size_t ordinal = 0;
  for (const auto& [name, schema] : root->second) {
    if (name != "schema") continue;
    ++ordinal;
    const std::string path = "collection/schema[" + std::to_string(ordinal) + "]";
    const auto& text = child(schema, "text", path);
    const std::string before = squeeze(child(text, "txt1", path + "/text").data());
    child(text, "pron", path + "/text");
    const std::string after = squeeze(child(text, "txt2", path + "/text").data());

    ForcedChoiceInstance inst;
    inst.tag = DatasetTag::kWinograd;
    char id[32];
    std::snprintf(id, sizeof id, "wsc-%04zu", ordinal);
    inst.id = id;
    inst.template_text = before;
    if (!before.empty()) inst.template_text += ' ';
    inst.template_text += kMask;
    if (!after.empty() && !starts_with_punct(after)) inst.template_text += ' ';
    inst.template_text += after;

    const auto& answers = child(schema, "answers", path);
    for (const auto& [tag, answer] : answers) {
      if (tag == "answer") inst.candidates.push_back(squeeze(answer.data()));
    }
    if (inst.candidates.size() < 2) {
      throw Error(ErrorCode::kSchemaError, path + "/answers: fewer than two <answer> elements");
    }
    const auto& correct = child(schema, "correctAnswer", path);
    inst.correct_flags.assign(inst.candidates.size(), false);
    inst.correct_flags[answer_letter(correct.data(), inst.candidates.size(),
                                     path + "/correctAnswer")] = true;
    out.push_back(std::move(inst));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kSchemaError, "collection holds no <schema> elements");
  }
  return out;
}

}  // namespace pllbench
