// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "pllbench/backend.hpp"
#include "pllbench/datasets.hpp"
#include "pllbench/protocol.hpp"
#include "pllbench/report.hpp"
#include "pllbench/run.hpp"
#include "pllbench/scoring.hpp"
#include "pllbench/textnorm.hpp"

using namespace pllbench;
namespace fs = std::filesystem;

namespace {

const std::string kData = PLLBENCH_DATA_DIR;
const std::string kCli = PLLBENCH_CLI;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  const auto table = oracle::random_table(rng, {"a", "b", "c", "d"}, 2);
  const auto backend = TableBackend::from_json(table.to_json());
  const auto start = std::chrono::steady_clock::now();
  std::size_t checked = 0;
  for (std::size_t len = 1; len <= 8; ++len) {
    for (const auto& words : oracle::all_sequences(table.symbols, len)) {
      const double got = pll(backend.tokenize(oracle::join(words)), backend);
      const double want = oracle::pll(table, words);
      if (got != want) {
        return {false, "mismatch on '" + oracle::join(words) + "'"};
      }
      ++checked;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu sequences, exact, %.2fs, limit 10s", checked, secs);
  return {checked == 87380 && secs < 10.0, buf};
}

Outcome norm_pll_identity() {
  std::mt19937_64 rng(99);
  const auto table = oracle::random_table(rng, {"a", "b", "c", "d"}, 1);
  const auto backend = TableBackend::from_json(table.to_json());
  for (const auto& sym : table.symbols) {
    const auto seq = backend.tokenize(sym);
    if (norm_pll(seq, backend) != pll(seq, backend)) return {false, "L=1 differs for " + sym};
  }
  std::uniform_int_distribution<std::size_t> len(1, 60);
  std::uniform_int_distribution<std::size_t> sym(0, 3);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::string> words;
    for (std::size_t n = len(rng); n > 0; --n) words.push_back(table.symbols[sym(rng)]);
    const auto seq = backend.tokenize(oracle::join(words));
    const double p = pll(seq, backend);
    const double np = norm_pll(seq, backend);
    const auto L = static_cast<double>(seq.scoreable_count());
    if (words.size() == 1 && np != p) return {false, "L=1 identity broken"};
    worst = std::max(worst, oracle::ulps_apart(np * L, p));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "4 L=1 cases + 10000 random, worst %.0f ulp, limit 1", worst);
  return {worst <= 1.0, buf};
}

Outcome two_best_brute_force() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> grid(-8, 0);
  std::uniform_real_distribution<double> real(-30.0, -0.1);
  std::bernoulli_distribution coarse(0.5);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> idx{0, 1, 2, 3};
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<bool> flags(4, false);
    flags[idx[0]] = flags[idx[1]] = true;
    std::vector<double> scores;
    std::vector<ScoreRecord> recs;
    const bool use_grid = coarse(rng);
    for (std::size_t i = 0; i < 4; ++i) {
      scores.push_back(use_grid ? grid(rng) * 0.25 : real(rng));
      ScoreRecord r;
      r.candidate_index = i;
      r.pll = r.norm_pll = scores.back();
      recs.push_back(r);
    }
    if (*decide_two_best(recs, flags, ScoreMode::kPll).two_best_correct == oracle::two_best_by_pairs(scores, flags)) {
      ++agree;
    }
  }
  return {agree == 1000, std::to_string(agree) + "/1000 agree"};
}

Outcome fixture_smoke() {
  const auto data = parse_winogradversarial(slurp(kData + "/winogradversarial.jsonl"));
  std::map<std::string, std::vector<const ForcedChoiceInstance*>> pairs;
  for (const auto& inst : data) {
    if (inst.pair_id) pairs[*inst.pair_id].push_back(&inst);
  }
  bool pairs_ok = data.size() == 20 && pairs.size() == 10;
  for (const auto& [id, members] : pairs) {
    pairs_ok = pairs_ok && members.size() == 2 && members[0]->correct_flags == members[1]->correct_flags;
  }
  if (!pairs_ok) return {false, std::to_string(data.size()) + " instances, " + std::to_string(pairs.size()) + " pairs"};

  const auto dir = fs::temp_directory_path() / "pllbench_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::string> csvs;
  for (const char* name : {"first.csv", "second.csv"}) {
    const auto out = dir / name;
    const std::string cmd = "\"" + kCli + "\" evaluate --dataset " + kData +
                            "/winogradversarial.jsonl --backend unigram:" + kData +
                            "/fixture_unigram.json --no-timing --out " + out.string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (WEXITSTATUS(status) != 0) return {false, "evaluate exited " + std::to_string(WEXITSTATUS(status))};
    csvs.push_back(slurp(out));
  }
  fs::remove_all(dir);
  const auto rows = parse_csv(csvs[0]).rows.size();
  const bool same = csvs[0] == csvs[1];
  return {rows == 40 && same, "20 instances, 10 pairs, " + std::to_string(rows) + " data rows, reruns " +
                                  (same ? "byte-identical" : "differ")};
}

Outcome textnorm_goldens() {
  const auto p = textnorm::NormalizationPolicy::not_kws();
  if (textnorm::normalize("care of john . John", p) != "care of john. John") return {false, "golden"};
  if (textnorm::normalize("Hello , world !", p) != "Hello, world!") return {false, "golden 2"};

  std::mt19937_64 rng(8080);
  const std::vector<std::string> alphabet{"a", "Z", "q", " ", " ", "  ", "\t", "\n", ".", ",", "!", "?",
                                          ";", ":", "'", ")", "(", "”", "’", "-", "é"};
  const std::vector<std::string> plain{"a", "Z", " ", "  ", "\t", "-", "(", "é", "“"};
  std::uniform_int_distribution<std::size_t> len(0, 40);
  const auto draw = [&](const std::vector<std::string>& from) {
    std::uniform_int_distribution<std::size_t> pick(0, from.size() - 1);
    std::string s;
    for (std::size_t n = len(rng); n > 0; --n) s += from[pick(rng)];
    return s;
  };
  for (int i = 0; i < 10000; ++i) {
    const auto s = draw(alphabet);
    const auto once = textnorm::normalize(s, p);
    if (textnorm::normalize(once, p) != once) return {false, "not idempotent on [" + s + "]"};
  }
  for (int i = 0; i < 10000; ++i) {
    const auto s = draw(plain);
    if (textnorm::normalize(s, p) != s) return {false, "changed punctuation-free [" + s + "]"};
  }
  return {true, "goldens, 10000 idempotence, 10000 no-punct identity"};
}

Outcome protocol_loopback() {
  std::mt19937_64 rng(5150);
  const auto table = oracle::random_table(rng, {"a", "b", "c", "d"}, 1);
  const auto direct = TableBackend::from_json(table.to_json(64));
  protocol::HttpServer server(direct);
  const int port = server.start();
  protocol::RemoteBackendConfig cfg;
  cfg.endpoint = "127.0.0.1:" + std::to_string(port);
  cfg.max_batch_positions = 7;
  auto remote = protocol::RemoteBackend::connect(cfg);

  std::uniform_int_distribution<std::size_t> len(1, 40);
  std::uniform_int_distribution<std::size_t> sym(0, 3);
  std::bernoulli_distribution keep(0.6);
  int identical = 0;
  for (int q = 0; q < 500; ++q) {
    std::vector<std::string> words;
    for (std::size_t n = len(rng); n > 0; --n) words.push_back(table.symbols[sym(rng)]);
    const auto text = oracle::join(words);
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (keep(rng)) positions.push_back(i);
    }
    if (positions.empty()) positions.push_back(0);
    const auto want = direct.masked_logprobs(direct.tokenize(text), positions);
    const auto got = remote->masked_logprobs(remote->tokenize(text), positions);
    if (got.positions == want.positions && got.logprobs == want.logprobs) ++identical;
  }
  server.stop();
  return {identical == 500, std::to_string(identical) + "/500 identical over HTTP"};
}

Outcome parallelism_invariance() {
  const auto instances = load_dataset(kData + "/winogradversarial.jsonl", DatasetTag::kWinogradversarial);
  const auto backend = make_backend(BackendSpec::parse("unigram:" + kData + "/fixture_unigram.json"));
  RunOptions one;
  RunOptions eight;
  eight.parallelism = 8;
  const auto a = evaluate(instances, *backend, one);
  const auto b = evaluate(instances, *backend, eight);
  CsvOptions quiet;
  quiet.timing = false;
  const bool same = a.accuracy == b.accuracy && render_csv(a, quiet) == render_csv(b, quiet);
  char buf[96];
  std::snprintf(buf, sizeof buf, "accuracy %.4f vs %.4f, score columns %s", a.accuracy, b.accuracy,
                same ? "identical" : "differ");
  return {same, buf};
}

}  // namespace

int main() {
  report("oracle equivalence, exhaustive length <= 8 over 4 symbols", oracle_equivalence);
  report("NormPLL identity", norm_pll_identity);
  report("2-best decision brute force", two_best_brute_force);
  report("fixture smoke", fixture_smoke);
  report("textnorm goldens and properties", textnorm_goldens);
  report("protocol loopback, 500 random queries", protocol_loopback);
  report("parallelism 1 vs 8 invariance", parallelism_invariance);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
