#include "pllbench/run.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pllbench/error.hpp"

namespace pllbench {
namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string extension_of(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

BackendSpec BackendSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string target = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  BackendSpec spec;
  if (kind == "table") {
    spec.kind = Kind::kTable;
  } else if (kind == "unigram") {
    spec.kind = Kind::kUnigram;
  } else if (kind == "remote") {
    spec.kind = Kind::kRemote;
  } else {
    throw Error(ErrorCode::kConfigError,
                "backend must be table:<path>, unigram:<path> or remote:<endpoint>, got '" + text + "'");
  }
  spec.target = target;
  if (spec.kind == Kind::kRemote && spec.target.empty()) {
    if (const char* env = std::getenv(kEndpointEnv)) spec.target = env;
  }
  if (spec.target.empty()) {
    throw Error(ErrorCode::kConfigError, "backend '" + text + "' needs a target" +
                                             (spec.kind == Kind::kRemote ? " (or set PLLBENCH_ENDPOINT)" : ""));
  }
  return spec;
}

std::unique_ptr<MaskedLmBackend> make_backend(const BackendSpec& spec,
                                              const protocol::RemoteBackendConfig& remote) {
  switch (spec.kind) {
    case BackendSpec::Kind::kTable:
      return std::make_unique<TableBackend>(TableBackend::load(spec.target));
    case BackendSpec::Kind::kUnigram:
      return std::make_unique<UnigramBackend>(UnigramBackend::load(spec.target));
    case BackendSpec::Kind::kRemote: {
      auto config = remote;
      config.endpoint = spec.target;
      return protocol::RemoteBackend::connect(config);
    }
  }
  throw Error(ErrorCode::kConfigError, "unknown backend kind");
}

InstanceOutcome evaluate_instance(const ForcedChoiceInstance& inst, const MaskedLmBackend& backend,
                                  const RunOptions& options) {
  InstanceOutcome out;
  out.instance_id = inst.id;
  out.tag = inst.tag;
  out.correct_flags = inst.correct_flags;
  for (auto& m : materialize(inst)) {
    out.texts.push_back(options.normalization ? textnorm::normalize(m.full_text, *options.normalization)
                                              : std::move(m.full_text));
  }
  auto scored = [&] {
    try {
      return score_candidates(out.texts, backend, options.scoring);
    } catch (const Error& e) {
      throw Error(e.code(), inst.id + ": " + e.detail());
    }
  }();
  if (scored.skipped) {
    out.skipped = true;
    return out;
  }
  if (inst.two_best()) {
    out.decision = decide_two_best(scored.records, inst.correct_flags, options.mode);
  } else if (scored.records.size() == 2) {
    out.decision = decide_binary(scored.records, options.mode);
  } else {
    out.decision = decide_argmax(scored.records, options.mode);
  }
  return out;
}

EvaluationReport evaluate(std::span<const ForcedChoiceInstance> instances, const MaskedLmBackend& backend,
                          const RunOptions& options) {
  if (options.parallelism < 1) throw Error(ErrorCode::kConfigError, "parallelism must be >= 1");
  std::optional<SerializedBackend> serialized;
  if (!backend.concurrent_safe() && options.parallelism > 1) serialized.emplace(backend);
  const MaskedLmBackend& target = serialized ? static_cast<const MaskedLmBackend&>(*serialized) : backend;

  std::vector<InstanceOutcome> outcomes(instances.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t workers = std::min(options.parallelism, std::max<std::size_t>(instances.size(), 1));
  std::vector<std::chrono::nanoseconds> busy(workers, std::chrono::nanoseconds{0});

  auto work = [&](std::size_t w) {
    const auto start = Clock::now();
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) break;
      try {
        outcomes[i] = evaluate_instance(instances[i], target, options);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
    busy[w] = Clock::now() - start;
  };

  const auto run_start = Clock::now();
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  const auto elapsed = Clock::now() - run_start;
  if (first_error) std::rethrow_exception(first_error);

  std::chrono::nanoseconds node_time{0};
  for (auto b : busy) node_time += b;
  return aggregate(std::move(outcomes), options.mode, node_time,
                   std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed));
}

void RunConfig::validate() const {
  if (dataset_path.empty()) throw Error(ErrorCode::kConfigError, "--dataset is required");
  if (output_csv.empty()) throw Error(ErrorCode::kConfigError, "--out is required");
  if (parallelism < 1) throw Error(ErrorCode::kConfigError, "--parallelism must be >= 1");
  if (max_tokens < 2) throw Error(ErrorCode::kConfigError, "--max-tokens must be >= 2");
  if (window.has_value() != stride.has_value()) {
    throw Error(ErrorCode::kConfigError, "--window and --stride go together");
  }
  if (window && (*window < 1 || *stride < 1)) {
    throw Error(ErrorCode::kConfigError, "--window and --stride must be positive");
  }
  if (window && *window > max_tokens) {
    throw Error(ErrorCode::kConfigError, "--window cannot exceed --max-tokens");
  }
}

RunOptions RunConfig::run_options() const {
  RunOptions o;
  o.mode = mode;
  o.scoring.max_tokens = max_tokens;
  if (window) o.scoring.window = WindowSpec{*window, *stride};
  if (not_kws) o.normalization = textnorm::NormalizationPolicy::not_kws();
  o.parallelism = parallelism;
  return o;
}

std::vector<ForcedChoiceInstance> load_dataset(const std::filesystem::path& path, DatasetTag tag,
                                               const TimeDialOptions& timedial) {
  const std::string content = read_file(path);
  const std::string ext = extension_of(path);
  std::vector<ForcedChoiceInstance> out;
  if (tag == DatasetTag::kWinograd && ext == ".xml") {
    out = parse_winograd_xml(content);
  } else if (tag == DatasetTag::kTimeDial && ext == ".json") {
    out = parse_timedial(content, timedial);
  } else if (tag == DatasetTag::kWinogrande && content.find("<mask>") == std::string::npos) {
    out = parse_winogrande(content);
  } else {
    out = parse_winogradversarial(content);
    // Lines without a "dataset" key parse as Winogradversarial and take the
    // requested tag; any other mismatch is an error.
    for (auto& inst : out) {
      if (inst.tag != tag && inst.tag != DatasetTag::kWinogradversarial) {
        throw Error(ErrorCode::kConfigError, inst.id + " is tagged " +
                                                 std::string(dataset_tag_name(inst.tag)) + ", expected " +
                                                 std::string(dataset_tag_name(tag)));
      }
      inst.tag = tag;
      if (tag != DatasetTag::kWinogradversarial) {
        inst.pair_id.reset();
        inst.switch_word.reset();
      }
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfigError, path.string() + " holds no instances");
  return out;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<ForcedChoiceInstance> instances;
  std::unique_ptr<MaskedLmBackend> backend;
  try {
    config.validate();
    instances = load_dataset(config.dataset_path, config.tag, TimeDialOptions{config.turn_separator});
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    backend = make_backend(config.backend, config.remote);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfigError ? kExitConfig : kExitBackend;
  }

  EvaluationReport report;
  try {
    report = evaluate(instances, *backend, config.run_options());
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kConfigError:
      case ErrorCode::kEmptyInput:
      case ErrorCode::kRejectedMixedModes: return kExitConfig;
      default: return kExitBackend;
    }
  }

  const CsvOptions csv{config.timing};
  try {
    write_csv(report, config.output_csv, csv);
    write_summary_json(report, summary_path_for(config.output_csv), csv);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  char line[256];
  std::snprintf(line, sizeof line, "%s %s accuracy %.6f (%zu/%zu, %zu skipped)",
                std::string(dataset_tag_name(report.tag)).c_str(),
                std::string(score_mode_name(report.mode)).c_str(), report.accuracy, report.n_correct,
                report.n_total - report.n_skipped, report.n_skipped);
  out << line;
  if (config.timing) {
    std::snprintf(line, sizeof line, " wall %.3fs", static_cast<double>(report.wall_time_total.count()) / 1e9);
    out << line;
  }
  out << '\n';
  return kExitOk;
}

int cmd_clean(const std::filesystem::path& xml_in, const std::filesystem::path& jsonl_out,
              std::ostream& out, std::ostream& err) {
  std::vector<ForcedChoiceInstance> instances;
  try {
    instances = parse_winograd_xml(read_file(xml_in));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::ofstream file(jsonl_out, std::ios::binary | std::ios::trunc);
  if (!file) {
    err << "error: cannot write " << jsonl_out.string() << '\n';
    return kExitConfig;
  }
  write_canonical_jsonl(file, instances);
  out << instances.size() << " instances written to " << jsonl_out.string() << '\n';
  return kExitOk;
}

std::string format_diff_report(const DiffReport& report) {
  std::ostringstream os;
  os << report.differences() << (report.differences() == 1 ? " difference" : " differences") << '\n';
  for (const auto& [cls, n] : report.counts()) {
    os << "  " << defect_class_name(cls) << ": " << n << '\n';
  }
  if (!report.only_in_a.empty()) os << "  only in first: " << report.only_in_a.size() << '\n';
  if (!report.only_in_b.empty()) os << "  only in second: " << report.only_in_b.size() << '\n';
  for (const auto& e : report.entries) {
    os << '\n' << e.instance_id << '#' << e.candidate_index << " [";
    for (std::size_t k = 0; k < e.classes.size(); ++k) {
      os << (k ? ", " : "") << defect_class_name(e.classes[k]);
    }
    os << "]\n  a: " << e.text_a << "\n  b: " << e.text_b << '\n';
  }
  return os.str();
}

int cmd_diff(const std::filesystem::path& a, const std::filesystem::path& b, bool fail_on_diff,
             std::ostream& out, std::ostream& err) {
  std::vector<MaterializedCandidate> left;
  std::vector<MaterializedCandidate> right;
  try {
    std::istringstream in_a(read_file(a));
    left = read_preparation(in_a);
    std::istringstream in_b(read_file(b));
    right = read_preparation(in_b);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const auto report = diff_preparations(left, right);
  out << format_diff_report(report);
  return fail_on_diff && report.differences() > 0 ? kExitDiffFound : kExitOk;
}

}  // namespace pllbench
