#include "pllbench/protocol.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "httplib.h"
#include "json.hpp"
#include "pllbench/error.hpp"

namespace pllbench::protocol {
namespace {

using ojson = nlohmann::ordered_json;

std::string error_response(std::string_view code, const std::string& message) {
  ojson j;
  j["v"] = kVersion;
  j["error"] = code;
  j["message"] = message;
  return j.dump();
}

bool is_v1(const nlohmann::json& doc) {
  auto v = doc.find("v");
  return v != doc.end() && v->is_number_integer() && v->get<long long>() == kVersion;
}

std::string_view wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSequenceTooLong: return kTooLong;
    case ErrorCode::kEmptyText:
    case ErrorCode::kUnencodableText:
    case ErrorCode::kInvalidSequence: return kBadRequest;
    default: return kModelError;
  }
}

nlohmann::json parse_response(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("unparseable response: ") + e.what());
  }
  if (!doc.is_object() || !is_v1(doc)) {
    throw Error(ErrorCode::kBackendFailure, "response is not a v1 protocol object");
  }
  if (auto err = doc.find("error"); err != doc.end()) {
    const std::string code = err->is_string() ? err->get<std::string>() : "?";
    auto msg = doc.find("message");
    const std::string message = msg != doc.end() && msg->is_string() ? msg->get<std::string>() : "";
    if (code == kTooLong) throw Error(ErrorCode::kSequenceTooLong, message);
    throw Error(ErrorCode::kBackendFailure, code + ": " + message);
  }
  return doc;
}

std::string handle_masked(const MaskedLmBackend& backend, const nlohmann::json& req) {
  auto text = req.find("text");
  if (text == req.end() || !text->is_string()) {
    return error_response(kBadRequest, "\"text\" must be a string");
  }
  auto pos = req.find("positions");
  if (pos == req.end()) return error_response(kBadRequest, "missing \"positions\"");

  const TokenizedSequence seq = backend.tokenize(text->get<std::string>());
  std::vector<std::size_t> positions;
  if (pos->is_string() && pos->get<std::string>() == "all") {
    positions = seq.scoreable_positions();
  } else if (pos->is_array()) {
    for (const auto& p : *pos) {
      if (!p.is_number_unsigned()) {
        return error_response(kBadRequest, "positions must be non-negative integers");
      }
      positions.push_back(p.get<std::size_t>());
    }
    validate_positions(positions, seq.size());
  } else {
    return error_response(kBadRequest, "\"positions\" must be a list or \"all\"");
  }

  MaskedLogprobVector vec;
  if (!positions.empty()) {
    if (seq.size() > backend.max_tokens()) {
      return error_response(kTooLong, std::to_string(seq.size()) + " tokens, limit " +
                                          std::to_string(backend.max_tokens()));
    }
    vec = backend.masked_logprobs(seq, positions);
    validate_logprobs(vec);
  }

  ojson j;
  j["v"] = kVersion;
  j["token_count"] = seq.size();
  j["scoreable"] = seq.scoreable;
  j["positions"] = vec.positions;
  j["logprobs"] = vec.logprobs;
  return j.dump();
}

}  // namespace

std::string info_request() {
  ojson j;
  j["v"] = kVersion;
  j["op"] = "info";
  return j.dump();
}

std::string masked_logprobs_request(std::string_view text,
                                    std::optional<std::span<const std::size_t>> positions) {
  ojson j;
  j["v"] = kVersion;
  j["op"] = "masked_logprobs";
  j["text"] = text;
  if (positions) {
    j["positions"] = std::vector<std::size_t>(positions->begin(), positions->end());
  } else {
    j["positions"] = "all";
  }
  return j.dump();
}

Info parse_info_response(std::string_view line) {
  const auto doc = parse_response(line);
  try {
    Info info;
    info.model = doc.at("model").get<std::string>();
    info.max_tokens = doc.at("max_tokens").get<std::size_t>();
    info.concurrent_safe = doc.value("concurrent_safe", false);
    if (info.model.empty() || info.max_tokens < 2) {
      throw Error(ErrorCode::kBackendFailure, "info response has empty model or max_tokens < 2");
    }
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("bad info response: ") + e.what());
  }
}

MaskedResult parse_masked_response(std::string_view line) {
  const auto doc = parse_response(line);
  MaskedResult r;
  try {
    r.token_count = doc.at("token_count").get<std::size_t>();
    r.scoreable = doc.at("scoreable").get<std::vector<bool>>();
    r.positions = doc.at("positions").get<std::vector<std::size_t>>();
    for (const auto& v : doc.at("logprobs")) {
      // NaN and infinities travel as null in JSON.
      r.logprobs.push_back(v.is_number() ? v.get<double>() : std::nan(""));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("bad masked_logprobs response: ") + e.what());
  }
  if (r.scoreable.size() != r.token_count) {
    throw Error(ErrorCode::kBackendFailure, "scoreable flags disagree with token_count");
  }
  MaskedLogprobVector vec{r.positions, r.logprobs};
  validate_logprobs(vec);
  try {
    validate_positions(r.positions, r.token_count);
  } catch (const Error& e) {
    throw Error(ErrorCode::kBackendFailure, "response positions: " + e.detail());
  }
  return r;
}

std::string handle_request(const MaskedLmBackend& backend, std::string_view request) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(request);
  } catch (const nlohmann::json::exception&) {
    return error_response(kBadRequest, "request is not valid JSON");
  }
  if (!req.is_object()) return error_response(kBadRequest, "request must be an object");
  if (!is_v1(req)) return error_response(kBadRequest, "unsupported protocol version");
  auto op_field = req.find("op");
  if (op_field == req.end() || !op_field->is_string()) {
    return error_response(kBadRequest, "\"op\" must be a string");
  }
  const auto op = op_field->get<std::string>();
  try {
    if (op == "info") {
      ojson j;
      j["v"] = kVersion;
      j["model"] = backend.name();
      j["max_tokens"] = backend.max_tokens();
      j["concurrent_safe"] = backend.concurrent_safe();
      return j.dump();
    }
    if (op == "masked_logprobs") return handle_masked(backend, req);
    return error_response(kBadRequest, "unknown op '" + op + "'");
  } catch (const Error& e) {
    return error_response(wire_code(e.code()), e.detail());
  } catch (const std::exception& e) {
    return error_response(kModelError, e.what());
  }
}

void serve_stream(const MaskedLmBackend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << handle_request(backend, line) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  explicit Impl(const MaskedLmBackend& b) : backend(b) {
    server.Post("/", [this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(handle_request(backend, req.body) + "\n", "application/json");
    });
  }
  const MaskedLmBackend& backend;
  httplib::Server server;
};

HttpServer::HttpServer(const MaskedLmBackend& backend) : impl_(std::make_unique<Impl>(backend)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kBackendFailure, "cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::listen_blocking(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kBackendFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

// ---------------------------------------------------------------------------

void RemoteBackendConfig::validate() const {
  if (endpoint.empty()) throw Error(ErrorCode::kConfigError, "remote endpoint is empty");
  if (timeout.count() <= 0) throw Error(ErrorCode::kConfigError, "timeout must be positive");
  if (max_batch_positions < 1) throw Error(ErrorCode::kConfigError, "max_batch_positions must be >= 1");
  if (max_in_flight < 1) throw Error(ErrorCode::kConfigError, "max_in_flight must be >= 1");
}

Transport http_transport(const RemoteBackendConfig& config) {
  std::string endpoint = config.endpoint;
  if (endpoint.find("://") == std::string::npos) endpoint = "http://" + endpoint;
  const auto timeout = config.timeout;
  return [endpoint, timeout](const std::string& body) -> std::optional<std::string> {
    // One client per call keeps the transport safe to share across threads.
    httplib::Client client(endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post("/", body, "application/json");
    if (!res) return std::nullopt;
    if (res->body.empty() || res->body.front() != '{') return std::nullopt;
    return res->body;
  };
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config, Transport transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight)) {}

std::unique_ptr<RemoteBackend> RemoteBackend::connect(const RemoteBackendConfig& config) {
  config.validate();
  return connect(config, http_transport(config));
}

std::unique_ptr<RemoteBackend> RemoteBackend::connect(const RemoteBackendConfig& config,
                                                      Transport transport) {
  config.validate();
  std::unique_ptr<RemoteBackend> backend(new RemoteBackend(config, std::move(transport)));
  backend->info_ = parse_info_response(backend->round_trip(info_request()));
  return backend;
}

std::string RemoteBackend::round_trip(const std::string& request) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  for (std::size_t attempt = 0; attempt <= config_.retry_count; ++attempt) {
    ++requests_sent_;
    if (auto body = transport_(request)) return *body;
  }
  throw Error(ErrorCode::kBackendFailure,
              "no response from " + config_.endpoint + " after " +
                  std::to_string(config_.retry_count + 1) + " attempts");
}

TokenizedSequence RemoteBackend::tokenize(std::string_view text) const {
  if (text.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos) {
    throw Error(ErrorCode::kEmptyText, "nothing to tokenize");
  }
  const std::vector<std::size_t> none;
  const auto r = parse_masked_response(round_trip(masked_logprobs_request(text, std::span(none))));
  TokenizedSequence seq;
  seq.surface = std::string(text);
  seq.tokens.assign(r.token_count, kOpaqueToken);
  seq.scoreable = r.scoreable;
  return seq;
}

MaskedLogprobVector RemoteBackend::masked_logprobs(const TokenizedSequence& seq,
                                                   std::span<const std::size_t> positions) const {
  validate_positions(positions, seq.size());
  if (seq.size() > info_.max_tokens) {
    throw Error(ErrorCode::kSequenceTooLong, std::to_string(seq.size()) + " tokens, limit " +
                                                 std::to_string(info_.max_tokens));
  }
  MaskedLogprobVector out;
  out.positions.assign(positions.begin(), positions.end());
  out.logprobs.reserve(positions.size());
  for (std::size_t begin = 0; begin < positions.size(); begin += config_.max_batch_positions) {
    const auto chunk = positions.subspan(begin, std::min(config_.max_batch_positions,
                                                         positions.size() - begin));
    const auto r = parse_masked_response(round_trip(masked_logprobs_request(seq.surface, chunk)));
    if (r.token_count != seq.size()) {
      throw Error(ErrorCode::kBackendFailure,
                  "server tokenized to " + std::to_string(r.token_count) + " tokens, expected " +
                      std::to_string(seq.size()));
    }
    if (!std::equal(r.positions.begin(), r.positions.end(), chunk.begin(), chunk.end())) {
      throw Error(ErrorCode::kBackendFailure, "server answered for different positions");
    }
    out.logprobs.insert(out.logprobs.end(), r.logprobs.begin(), r.logprobs.end());
  }
  return out;
}

}  // namespace pllbench::protocol
