#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pllbench {

enum class DatasetTag { kWinogradversarial, kWinograd, kWinogrande, kTimeDial };

std::string_view dataset_tag_name(DatasetTag tag);
// Case-insensitive; throws Error(kConfigError).
DatasetTag parse_dataset_tag(std::string_view text);

// Canonical mask placeholder. Winogrande's "_" and TimeDial's "<MASK>" are
// rewritten to it at parse time.
inline constexpr std::string_view kMask = "<mask>";

struct ForcedChoiceInstance {
  std::string id;
  std::string template_text;  // exactly one kMask
  std::vector<std::string> candidates;
  std::vector<bool> correct_flags;
  DatasetTag tag = DatasetTag::kWinogradversarial;
  // Set on Winogradversarial twins: templates one word apart, same answer.
  std::optional<std::string> pair_id;
  std::optional<std::pair<std::string, std::string>> switch_word;

  std::size_t correct_count() const;
  bool two_best() const { return correct_count() >= 2; }

  // Throws kMalformedRow when the structural invariants do not hold.
  void validate() const;

  bool operator==(const ForcedChoiceInstance&) const = default;
};

struct MaterializedCandidate {
  std::string instance_id;
  std::size_t candidate_index = 0;
  std::string full_text;

  bool operator==(const MaterializedCandidate&) const = default;
};

// --- parsers ---------------------------------------------------------------

// JSON lines with sentence/option1/option2/answer, as in the bundled
// 20-item fixture. Extra keys understood: "id", "dataset", further
// "optionN" keys and "correct_flags" (used instead of "answer" for 4-way
// instances). Consecutive lines whose templates differ in exactly one word
// and share their labels are linked as twins.
std::vector<ForcedChoiceInstance> parse_winogradversarial(std::istream& in);
std::vector<ForcedChoiceInstance> parse_winogradversarial(std::string_view text);

// The public WSC XML collection. Segment whitespace is trimmed and internal
// runs collapsed; answers are trimmed but their casing is left to
// substitute().
std::vector<ForcedChoiceInstance> parse_winograd_xml(std::string_view xml);

// Winogrande JSON lines (sentence with "_", option1, option2, answer).
std::vector<ForcedChoiceInstance> parse_winogrande(std::istream& in);
std::vector<ForcedChoiceInstance> parse_winogrande(std::string_view text);

struct TimeDialOptions {
  std::string turn_separator = " ";
};

// TimeDial test.json: an array of rows, each a conversation (list of turns,
// one holding "<MASK>") with correct1/correct2/incorrect1/incorrect2, or an
// explicit "candidates" list with boolean "labels".
std::vector<ForcedChoiceInstance> parse_timedial(std::string_view json,
                                                 const TimeDialOptions& options = {});

// Links consecutive same-label Winogradversarial instances whose templates differ in one word.
void link_twins(std::vector<ForcedChoiceInstance>& instances);

// --- canonical intermediate schema -----------------------------------------

std::string to_canonical_json(const ForcedChoiceInstance& inst);
void write_canonical_jsonl(std::ostream& out, std::span<const ForcedChoiceInstance> instances);

// --- substitution ------------------------------------------------------------

// Replaces the mask with the candidate. A sentence-initial mask gets an
// uppercased first letter; elsewhere an initial capital is dropped unless the
// word looks like a proper noun (see substitute.cpp for the exact rule).
MaterializedCandidate substitute(const ForcedChoiceInstance& inst, std::size_t candidate_index);
std::vector<MaterializedCandidate> materialize(const ForcedChoiceInstance& inst);

// --- preparation diffs -------------------------------------------------------

enum class DefectClass {
  kSpaceBeforePunct,
  kWhitespaceRuns,
  kCasingOnly,
  kConcatenation,
  kOther,
};

std::string_view defect_class_name(DefectClass c);

struct DiffEntry {
  std::string instance_id;
  std::size_t candidate_index = 0;
  std::string text_a;
  std::string text_b;
  std::vector<DefectClass> classes;
};

struct DiffReport {
  std::vector<DiffEntry> entries;
  // Keys present on one side only; reported, not fatal.
  std::vector<std::pair<std::string, std::size_t>> only_in_a;
  std::vector<std::pair<std::string, std::size_t>> only_in_b;

  std::size_t differences() const { return entries.size(); }
  std::map<DefectClass, std::size_t> counts() const;
};

// Classifies each differing (instance id, candidate index) pair by the
// smallest combination of the transforms space-before-punctuation, whitespace
// runs and casing that makes both sides equal. Failing that, equality after
// dropping all whitespace means concatenation; anything else is kOther.
DiffReport diff_preparations(std::span<const MaterializedCandidate> a,
                             std::span<const MaterializedCandidate> b);

// Reads JSON lines that are either canonical instances (materialized through
// substitute) or already-materialized rows {"id", "candidate_index", "text"}.
std::vector<MaterializedCandidate> read_preparation(std::istream& in);

}  // namespace pllbench
