#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pllbench/datasets.hpp"
#include "pllbench/scoring.hpp"

namespace pllbench {

// Everything known about one instance after a run.
struct InstanceOutcome {
  std::string instance_id;
  DatasetTag tag = DatasetTag::kWinogradversarial;
  std::vector<std::string> texts;  // materialized candidates as scored
  std::vector<bool> correct_flags;
  bool skipped = false;
  std::optional<Decision> decision;  // empty iff skipped

  bool two_best() const;
  bool correct() const;
};

struct EvaluationReport {
  DatasetTag tag = DatasetTag::kWinogradversarial;
  ScoreMode mode = ScoreMode::kPll;
  std::size_t n_total = 0;
  std::size_t n_skipped = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;  // n_correct / (n_total - n_skipped)
  std::optional<double> two_best_accuracy;
  // Summed per-worker wall time: the run's "node time". Wall-clock, not
  // device time.
  std::chrono::nanoseconds wall_time_total{0};
  std::chrono::nanoseconds elapsed{0};
  std::vector<InstanceOutcome> per_instance;
};

// Counts and accuracy over the outcomes. Skipped instances count toward
// n_total and n_skipped only. Throws kEmptyInput when nothing was decided and
// kRejectedMixedModes when binary and 2-best instances are mixed.
EvaluationReport aggregate(std::vector<InstanceOutcome> outcomes, ScoreMode mode,
                           std::chrono::nanoseconds wall_time_total,
                           std::chrono::nanoseconds elapsed = std::chrono::nanoseconds{0});

struct DeltaReport {
  DatasetTag dataset_a;
  DatasetTag dataset_b;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  double delta = 0.0;  // accuracy_a - accuracy_b

  double delta_points() const { return 100.0 * delta; }
};

// Throws kModeMismatch unless both reports were scored in the same mode.
DeltaReport delta(const EvaluationReport& a, const EvaluationReport& b);

struct CsvOptions {
  // Off leaves wall_ms empty so runs can be compared byte for byte.
  bool timing = true;
};

inline constexpr std::string_view kCsvHeader =
    "instance_id,dataset,candidate_index,text,token_count,pll,norm_pll,chosen,correct,skipped,wall_ms";

// One row per materialized candidate. "chosen" marks the candidates the
// decision selected and "correct" the gold labels, so an instance was answered
// correctly iff the two columns agree on every one of its rows.
std::string render_csv(const EvaluationReport& report, const CsvOptions& options = {});

// Writes through a temporary file and a rename, so readers never see a
// partial file. Throws kIoError.
void write_csv(const EvaluationReport& report, const std::filesystem::path& path,
               const CsvOptions& options = {});

// {dataset, mode, accuracy, two_best_accuracy, n_total, n_skipped, wall_time_s}
std::string render_summary_json(const EvaluationReport& report, const CsvOptions& options = {});
void write_summary_json(const EvaluationReport& report, const std::filesystem::path& path,
                        const CsvOptions& options = {});

// results.csv -> results.summary.json
std::filesystem::path summary_path_for(const std::filesystem::path& csv_path);

struct CsvRow {
  std::string instance_id;
  std::string dataset;
  std::size_t candidate_index = 0;
  std::string text;
  std::optional<std::size_t> token_count;
  std::optional<double> pll;
  std::optional<double> norm_pll;
  bool chosen = false;
  bool correct = false;
  bool skipped = false;
  std::optional<double> wall_ms;
};

struct CsvSummary {
  std::vector<CsvRow> rows;
  std::size_t n_total = 0;
  std::size_t n_skipped = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

// Parses a results CSV and recomputes the counts from its rows.
CsvSummary parse_csv(std::string_view content);
CsvSummary read_csv(const std::filesystem::path& path);

// RFC 4180 field splitting, exposed for tests.
std::vector<std::vector<std::string>> split_csv_records(std::string_view content);

}  // namespace pllbench
