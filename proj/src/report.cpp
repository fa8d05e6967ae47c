#include "pllbench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "pllbench/error.hpp"

namespace pllbench {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const char* boolean(bool b) { return b ? "true" : "false"; }

double millis(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot move results into " + path.string());
  }
}

bool parse_bool(const std::string& s, std::size_t line) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::kMalformedLine, "csv record " + std::to_string(line) + ": bad boolean '" + s + "'");
}

template <typename T>
std::optional<T> parse_optional(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || !in.eof()) {
    throw Error(ErrorCode::kMalformedLine, "csv record " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

bool InstanceOutcome::two_best() const {
  return std::count(correct_flags.begin(), correct_flags.end(), true) >= 2;
}

bool InstanceOutcome::correct() const {
  if (skipped || !decision) return false;
  if (decision->two_best_correct) return *decision->two_best_correct;
  return decision->chosen_index < correct_flags.size() && correct_flags[decision->chosen_index];
}

EvaluationReport aggregate(std::vector<InstanceOutcome> outcomes, ScoreMode mode,
                           std::chrono::nanoseconds wall_time_total, std::chrono::nanoseconds elapsed) {
  EvaluationReport r;
  r.mode = mode;
  r.wall_time_total = wall_time_total;
  r.elapsed = elapsed;
  if (outcomes.empty()) throw Error(ErrorCode::kEmptyInput, "no instances to aggregate");
  r.tag = outcomes.front().tag;

  std::size_t binary = 0;
  std::size_t two_best = 0;
  for (const auto& o : outcomes) {
    ++r.n_total;
    (o.two_best() ? two_best : binary) += 1;
    if (o.skipped) {
      ++r.n_skipped;
      continue;
    }
    if (!o.decision) throw Error(ErrorCode::kEmptyInput, o.instance_id + " has no decision");
    if (o.correct()) ++r.n_correct;
  }
  if (binary > 0 && two_best > 0) {
    throw Error(ErrorCode::kRejectedMixedModes, std::to_string(binary) + " binary and " +
                                                    std::to_string(two_best) + " 2-best instances");
  }
  if (r.n_total == r.n_skipped) {
    throw Error(ErrorCode::kEmptyInput, "every instance was skipped");
  }
  r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_total - r.n_skipped);
  if (two_best > 0) r.two_best_accuracy = r.accuracy;
  r.per_instance = std::move(outcomes);
  return r;
}

DeltaReport delta(const EvaluationReport& a, const EvaluationReport& b) {
  if (a.mode != b.mode) {
    throw Error(ErrorCode::kModeMismatch, std::string(score_mode_name(a.mode)) + " vs " +
                                              std::string(score_mode_name(b.mode)));
  }
  return {a.tag, b.tag, a.accuracy, b.accuracy, a.accuracy - b.accuracy};
}

std::string render_csv(const EvaluationReport& report, const CsvOptions& options) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& o : report.per_instance) {
    const std::string dataset(dataset_tag_name(o.tag));
    for (std::size_t i = 0; i < o.texts.size(); ++i) {
      std::vector<std::string> f;
      f.push_back(quote(o.instance_id));
      f.push_back(dataset);
      f.push_back(std::to_string(i));
      f.push_back(quote(o.texts[i]));
      if (o.skipped) {
        f.insert(f.end(), {"", "", "", "false", boolean(o.correct_flags[i]), "true", ""});
      } else {
        const auto& rec = o.decision->scores.at(i);
        f.push_back(std::to_string(rec.token_count));
        f.push_back(fixed6(rec.pll));
        f.push_back(fixed6(rec.norm_pll));
        f.push_back(boolean(o.decision->selected.at(i)));
        f.push_back(boolean(o.correct_flags[i]));
        f.push_back("false");
        f.push_back(options.timing ? fixed6(millis(rec.wall_time)) : "");
      }
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (k > 0) out += ',';
        out += f[k];
      }
      out += '\n';
    }
  }
  return out;
}

void write_csv(const EvaluationReport& report, const std::filesystem::path& path, const CsvOptions& options) {
  write_atomically(path, render_csv(report, options));
}

std::string render_summary_json(const EvaluationReport& report, const CsvOptions& options) {
  nlohmann::ordered_json j;
  j["dataset"] = dataset_tag_name(report.tag);
  j["mode"] = score_mode_name(report.mode);
  j["accuracy"] = report.accuracy;
  j["two_best_accuracy"] =
      report.two_best_accuracy ? nlohmann::ordered_json(*report.two_best_accuracy) : nullptr;
  j["n_total"] = report.n_total;
  j["n_skipped"] = report.n_skipped;
  j["wall_time_s"] = options.timing
                         ? nlohmann::ordered_json(static_cast<double>(report.wall_time_total.count()) / 1e9)
                         : nullptr;
  return j.dump(2) + "\n";
}

void write_summary_json(const EvaluationReport& report, const std::filesystem::path& path,
                        const CsvOptions& options) {
  write_atomically(path, render_summary_json(report, options));
}

std::filesystem::path summary_path_for(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".summary.json");
  return p;
}

std::vector<std::vector<std::string>> split_csv_records(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kMalformedLine, "csv ends inside a quoted field");
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

CsvSummary parse_csv(std::string_view content) {
  const auto records = split_csv_records(content);
  if (records.empty()) throw Error(ErrorCode::kMalformedLine, "csv is empty");
  std::string header;
  for (std::size_t k = 0; k < records[0].size(); ++k) header += (k ? "," : "") + records[0][k];
  if (header != kCsvHeader) throw Error(ErrorCode::kMalformedLine, "unexpected csv header");

  CsvSummary s;
  for (std::size_t n = 1; n < records.size(); ++n) {
    const auto& f = records[n];
    if (f.size() != 11) {
      throw Error(ErrorCode::kMalformedLine, "csv record " + std::to_string(n) + " has " +
                                                 std::to_string(f.size()) + " fields");
    }
    CsvRow row;
    row.instance_id = f[0];
    row.dataset = f[1];
    row.candidate_index = parse_optional<std::size_t>(f[2], n).value_or(0);
    row.text = f[3];
    row.token_count = parse_optional<std::size_t>(f[4], n);
    row.pll = parse_optional<double>(f[5], n);
    row.norm_pll = parse_optional<double>(f[6], n);
    row.chosen = parse_bool(f[7], n);
    row.correct = parse_bool(f[8], n);
    row.skipped = parse_bool(f[9], n);
    row.wall_ms = parse_optional<double>(f[10], n);
    s.rows.push_back(std::move(row));
  }

  // Rows of one instance are contiguous; group in order of first appearance.
  std::vector<std::string> order;
  std::map<std::string, std::pair<bool, bool>> state;  // id -> (skipped, all rows agree)
  for (const auto& row : s.rows) {
    auto [it, fresh] = state.try_emplace(row.instance_id, row.skipped, true);
    if (fresh) order.push_back(row.instance_id);
    it->second.first = it->second.first || row.skipped;
    if (row.chosen != row.correct) it->second.second = false;
  }
  for (const auto& id : order) {
    const auto& [skipped, agree] = state[id];
    ++s.n_total;
    if (skipped) {
      ++s.n_skipped;
    } else if (agree) {
      ++s.n_correct;
    }
  }
  if (s.n_total > s.n_skipped) {
    s.accuracy = static_cast<double>(s.n_correct) / static_cast<double>(s.n_total - s.n_skipped);
  }
  return s;
}

CsvSummary read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace pllbench
