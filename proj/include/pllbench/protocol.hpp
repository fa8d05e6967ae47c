#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pllbench/backend.hpp"

namespace pllbench::protocol {

// Line-delimited JSON, one object per request and per response. Full
// description in docs/protocol.md.
//
//   {"v":1,"op":"info"}
//     -> {"v":1,"model":"name","max_tokens":N,"concurrent_safe":bool}
//   {"v":1,"op":"masked_logprobs","text":"...","positions":[...] | "all"}
//     -> {"v":1,"token_count":N,"scoreable":[...],"positions":[...],"logprobs":[...]}
//   failures -> {"v":1,"error":"TOO_LONG|BAD_REQUEST|MODEL_ERROR","message":"..."}
//
// Every requested position is masked on its own. "all" means every scoreable
// position; an empty list only tokenizes.
inline constexpr int kVersion = 1;

inline constexpr std::string_view kTooLong = "TOO_LONG";
inline constexpr std::string_view kBadRequest = "BAD_REQUEST";
inline constexpr std::string_view kModelError = "MODEL_ERROR";

std::string info_request();
// nullopt positions encodes "all".
std::string masked_logprobs_request(std::string_view text,
                                    std::optional<std::span<const std::size_t>> positions);

struct Info {
  std::string model;
  std::size_t max_tokens = 0;
  bool concurrent_safe = false;
};

struct MaskedResult {
  std::size_t token_count = 0;
  std::vector<bool> scoreable;
  std::vector<std::size_t> positions;
  std::vector<double> logprobs;
};

// Decoders throw Error: kSequenceTooLong for TOO_LONG, kBackendFailure for the
// other error codes and for malformed responses, kNonFiniteScore when a
// logprob is positive or not finite.
Info parse_info_response(std::string_view line);
MaskedResult parse_masked_response(std::string_view line);

// Server side: answers one request line for `backend`. Never throws; every
// failure becomes an error response.
std::string handle_request(const MaskedLmBackend& backend, std::string_view request);

// Reads requests line by line until EOF, writing one response line each.
void serve_stream(const MaskedLmBackend& backend, std::istream& in, std::ostream& out);

// Protocol over HTTP: each POST body to "/" is one request, the response body
// one response line.
class HttpServer {
 public:
  explicit HttpServer(const MaskedLmBackend& backend);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop().
  void listen_blocking(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

struct RemoteBackendConfig {
  std::string endpoint;  // "http://host:port" or "host:port"
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch_positions = 64;
  std::size_t retry_count = 2;
  std::size_t max_in_flight = 8;

  void validate() const;
};

// Sends one request body, returns the response body, or nullopt when the
// transport failed (connection refused, timeout, non-protocol reply).
using Transport = std::function<std::optional<std::string>(const std::string& request)>;

Transport http_transport(const RemoteBackendConfig& config);

// Client for a model served over the protocol. Tokenization happens on the
// server; the sequences this backend returns carry kOpaqueToken ids and are
// re-sent as text. The PLL sum itself stays on this side.
class RemoteBackend final : public MaskedLmBackend {
 public:
  // Performs the info handshake; throws kBackendFailure when unreachable.
  static std::unique_ptr<RemoteBackend> connect(const RemoteBackendConfig& config);
  static std::unique_ptr<RemoteBackend> connect(const RemoteBackendConfig& config, Transport transport);

  std::string name() const override { return info_.model; }
  std::size_t max_tokens() const override { return info_.max_tokens; }
  bool concurrent_safe() const override { return true; }

  TokenizedSequence tokenize(std::string_view text) const override;
  MaskedLogprobVector masked_logprobs(const TokenizedSequence& seq,
                                      std::span<const std::size_t> positions) const override;

  // Number of request bodies sent, retries included.
  std::size_t requests_sent() const noexcept { return requests_sent_.load(); }

 private:
  RemoteBackend(RemoteBackendConfig config, Transport transport);
  std::string round_trip(const std::string& request) const;

  RemoteBackendConfig config_;
  Transport transport_;
  Info info_;
  mutable std::counting_semaphore<> in_flight_;
  mutable std::atomic<std::size_t> requests_sent_{0};
};

}  // namespace pllbench::protocol
