// pllbench: score forced-choice datasets with (normalized) pseudo-log-likelihoods.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pllbench/error.hpp"
#include "pllbench/protocol.hpp"
#include "pllbench/run.hpp"

namespace {

using namespace pllbench;

int run_serve(const std::string& backend_text, const std::string& host, int port, bool stdio) {
  std::unique_ptr<MaskedLmBackend> backend;
  try {
    const auto spec = BackendSpec::parse(backend_text);
    if (spec.kind == BackendSpec::Kind::kRemote) {
      std::cerr << "error: serve wraps a local backend (table: or unigram:)\n";
      return kExitConfig;
    }
    backend = make_backend(spec);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (stdio) {
    protocol::serve_stream(*backend, std::cin, std::cout);
    return kExitOk;
  }
  protocol::HttpServer server(*backend);
  std::cerr << "serving " << backend->name() << " on " << host << ':' << port << '\n';
  try {
    server.listen_blocking(host, port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  }
  return kExitOk;
}

// Flat key=value files: every key belongs to the evaluate subcommand.
class EvaluateConfig : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty()) item.parents = {"evaluate"};
    }
    return items;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot forced-choice evaluation with masked-LM pseudo-log-likelihoods"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<EvaluateConfig>());
  app.set_config("--config", "", "Flat key=value file mirroring the evaluate flags; flags override it");

  // evaluate ---------------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "Score a dataset and write CSV + JSON summary");
  RunConfig config;
  std::string dataset;
  std::string tag = "Winogradversarial";
  std::string backend;
  std::string mode = "pll";
  std::string out;
  std::optional<std::size_t> window;
  std::optional<std::size_t> stride;
  bool no_timing = false;
  long timeout_ms = 30000;
  eval->fallthrough();
  eval->add_option("--dataset", dataset, "Dataset file (required)");
  eval->add_option("--tag", tag, "Winogradversarial | Winograd | Winogrande | TimeDial")
      ->capture_default_str();
  eval->add_option("--backend", backend,
                   "table:<path> | unigram:<path> | remote:<endpoint> (default: remote via PLLBENCH_ENDPOINT)");
  eval->add_option("--mode", mode, "pll | normpll")->capture_default_str();
  eval->add_option("--max-tokens", config.max_tokens, "Skip instances with a longer candidate")
      ->capture_default_str();
  eval->add_flag("--not-kws", config.not_kws, "Remove spaces before punctuation before scoring");
  eval->add_option("--window", window, "Score over-long candidates in windows of this many tokens");
  eval->add_option("--stride", stride, "Window stride");
  eval->add_option("--out", out, "Results CSV (required)");
  eval->add_option("--parallelism", config.parallelism, "Concurrent instance workers")
      ->capture_default_str();
  eval->add_flag("--no-timing", no_timing, "Leave wall-time columns empty");
  eval->add_option("--turn-separator", config.turn_separator, "TimeDial turn separator")
      ->capture_default_str();
  eval->add_option("--timeout-ms", timeout_ms, "Remote request timeout")->capture_default_str();
  eval->add_option("--batch-positions", config.remote.max_batch_positions,
                   "Positions per remote request")->capture_default_str();
  eval->add_option("--retries", config.remote.retry_count, "Remote retries per request")
      ->capture_default_str();

  // clean ------------------------------------------------------------------
  auto* clean = app.add_subcommand("clean", "Convert the Winograd XML collection to canonical JSON lines");
  std::string clean_in;
  std::string clean_out;
  clean->add_option("input", clean_in, "WSC XML file")->required();
  clean->add_option("output", clean_out, "JSON-lines output")->required();

  // diff -------------------------------------------------------------------
  auto* diff = app.add_subcommand("diff", "Compare two preparations of the same dataset");
  std::string diff_a;
  std::string diff_b;
  bool fail_on_diff = false;
  diff->add_option("first", diff_a, "Canonical or materialized JSON lines")->required();
  diff->add_option("second", diff_b, "Canonical or materialized JSON lines")->required();
  diff->add_flag("--fail-on-diff", fail_on_diff, "Exit 1 when differences exist");

  // serve ------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Serve a local backend over the wire protocol");
  std::string serve_backend;
  std::string host = "127.0.0.1";
  int port = 8765;
  bool stdio = false;
  serve->add_option("--backend", serve_backend, "table:<path> | unigram:<path>")->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_flag("--stdio", stdio, "Line-delimited JSON on stdin/stdout instead of HTTP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*eval) {
    try {
      config.dataset_path = dataset;
      config.tag = parse_dataset_tag(tag);
      config.backend = BackendSpec::parse(backend.empty() ? std::string("remote") : backend);
      config.mode = parse_score_mode(mode);
      config.window = window;
      config.stride = stride;
      config.output_csv = out;
      config.timing = !no_timing;
      config.remote.timeout = std::chrono::milliseconds(timeout_ms);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
    return cmd_evaluate(config, std::cout, std::cerr);
  }
  if (*clean) return cmd_clean(clean_in, clean_out, std::cout, std::cerr);
  if (*diff) return cmd_diff(diff_a, diff_b, fail_on_diff, std::cout, std::cerr);
  if (*serve) return run_serve(serve_backend, host, port, stdio);
  return kExitConfig;
}
