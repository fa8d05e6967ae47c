#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pllbench/backend.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/protocol.hpp"
#include "pllbench/report.hpp"
#include "pllbench/scoring.hpp"
#include "pllbench/textnorm.hpp"

namespace pllbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDiffFound = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;

inline constexpr const char* kEndpointEnv = "PLLBENCH_ENDPOINT";

struct BackendSpec {
  enum class Kind { kTable, kUnigram, kRemote };
  Kind kind = Kind::kUnigram;
  std::string target;  // file path, or endpoint for kRemote

  // "table:<path>", "unigram:<path>", "remote:<endpoint>" or bare "remote",
  // which reads PLLBENCH_ENDPOINT. Throws kConfigError.
  static BackendSpec parse(const std::string& text);
};

std::unique_ptr<MaskedLmBackend> make_backend(const BackendSpec& spec,
                                              const protocol::RemoteBackendConfig& remote = {});

struct RunOptions {
  ScoreMode mode = ScoreMode::kPll;
  ScoringOptions scoring;
  // Applied to every materialized candidate before tokenization.
  std::optional<textnorm::NormalizationPolicy> normalization;
  std::size_t parallelism = 1;
};

// Scores every instance with a pool of `parallelism` workers. Results are
// placed by instance index, so the report never depends on completion order.
// Backends that are not concurrent-safe are called through a mutex.
EvaluationReport evaluate(std::span<const ForcedChoiceInstance> instances,
                          const MaskedLmBackend& backend, const RunOptions& options);

// Per-instance work, exposed for tests.
InstanceOutcome evaluate_instance(const ForcedChoiceInstance& inst, const MaskedLmBackend& backend,
                                  const RunOptions& options);

struct RunConfig {
  std::filesystem::path dataset_path;
  DatasetTag tag = DatasetTag::kWinogradversarial;
  BackendSpec backend;
  ScoreMode mode = ScoreMode::kPll;
  std::size_t max_tokens = 450;
  bool not_kws = false;
  std::optional<std::size_t> window;
  std::optional<std::size_t> stride;
  std::filesystem::path output_csv;
  std::size_t parallelism = 1;
  bool timing = true;
  std::string turn_separator = " ";
  protocol::RemoteBackendConfig remote;

  // Throws kConfigError.
  void validate() const;
  RunOptions run_options() const;
};

// Picks the parser from the tag and file extension: .xml for Winograd, .json
// for TimeDial, Winogrande JSON lines, and the canonical JSON-lines schema
// for everything else. Throws kConfigError when a canonical file carries a
// different dataset tag.
std::vector<ForcedChoiceInstance> load_dataset(const std::filesystem::path& path, DatasetTag tag,
                                               const TimeDialOptions& timedial = {});

// Subcommands. Messages go to `err`, the one-line result to `out`.
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_clean(const std::filesystem::path& xml_in, const std::filesystem::path& jsonl_out,
              std::ostream& out, std::ostream& err);
int cmd_diff(const std::filesystem::path& a, const std::filesystem::path& b, bool fail_on_diff,
             std::ostream& out, std::ostream& err);

std::string format_diff_report(const DiffReport& report);

}  // namespace pllbench
