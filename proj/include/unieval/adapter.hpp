// Copyright 2026 The unieval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNIEVAL_ADAPTER_HPP_
#define UNIEVAL_ADAPTER_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "unieval/model.hpp"

namespace unieval {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;
inline constexpr int kDefaultWindow = 64;

// Error codes carried by {"type":"error"} replies.
namespace error_code {
inline constexpr const char* kUnsupported = "unsupported_capability";
inline constexpr const char* kCapacity = "capacity";
inline constexpr const char* kInvalid = "invalid_request";
inline constexpr const char* kUnknownType = "unknown_type";
inline constexpr const char* kInternal = "internal";
}  // namespace error_code

// ---- Message construction and parsing -------------------------------------

json hello_request();
json hello_reply(const ModelInfo& info);
// Validates a hello reply; ProtocolError names the offending field.
ModelInfo parse_hello(const json& reply);

json predict_request(std::int64_t id, const TokenSeq& tokens);
json predict_batch_request(std::int64_t id, const std::vector<TokenSeq>& batch);
json grad_dot_request(std::int64_t id, const TokenSeq& tokens, const TokenSeq& baseline,
                      double alpha, int target);
json attention_request(std::int64_t id, const TokenSeq& tokens);
json error_reply(const json& id, const std::string& code, const std::string& message);

// Server side: answers one request with the given model. Never throws;
// problems become error replies.
json handle_request(const Model& model, const json& request);

// Reads newline-delimited requests until EOF and answers each in order.
void serve_stream(const Model& model, std::istream& in, std::ostream& out);

// Serves POST /v1/<type> on a background thread (hello? is served at
// /v1/hello, since '?' cannot appear in a path).
class HttpAdapterServer {
 public:
  explicit HttpAdapterServer(std::shared_ptr<const Model> model);
  ~HttpAdapterServer();
  HttpAdapterServer(const HttpAdapterServer&) = delete;
  HttpAdapterServer& operator=(const HttpAdapterServer&) = delete;

  // Binds and starts listening; port 0 picks a free port. Returns the port.
  int start(const std::string& host, int port);
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---- Transports ------------------------------------------------------------

class Transport {
 public:
  virtual ~Transport() = default;
  // Sends the requests (pipelined up to the window) and returns the replies
  // in request order, matched by id. A request without an id is sent alone
  // and paired with the next reply.
  virtual std::vector<json> exchange(const std::vector<json>& requests) = 0;
  virtual std::string describe() const = 0;
};

struct TransportOptions {
  int window = kDefaultWindow;
  std::chrono::milliseconds timeout{30000};
};

// Child process speaking the protocol on stdin/stdout (run through /bin/sh).
std::unique_ptr<Transport> make_stdio_transport(const std::string& command,
                                                const TransportOptions& options = {});
// http://host:port
std::unique_ptr<Transport> make_http_transport(const std::string& url,
                                               const TransportOptions& options = {});
// In-process: every message is serialized to a line and parsed back on both
// sides. `reverse_replies` answers each window in reverse order.
std::unique_ptr<Transport> make_loopback_transport(std::shared_ptr<const Model> model,
                                                   bool reverse_replies = false,
                                                   const TransportOptions& options = {});

// Raw protocol client: handshake plus id allocation. Replies are returned
// unvalidated apart from id/type matching.
class AdapterClient {
 public:
  explicit AdapterClient(std::unique_ptr<Transport> transport);

  // Sends hello? and validates the reply.
  const ModelInfo& handshake();
  const ModelInfo& info() const { return info_; }
  bool connected() const { return connected_; }

  std::int64_t next_id() { return next_id_++; }
  // Sends requests that already carry ids. Error replies are returned as is.
  std::vector<json> call(const std::vector<json>& requests);
  json call(const json& request);
  Transport& transport() { return *transport_; }

 private:
  std::unique_ptr<Transport> transport_;
  std::mutex mu_;
  ModelInfo info_;
  bool connected_ = false;
  std::atomic<std::int64_t> next_id_{1};
};

// Model whose calls are marshalled to an adapter. Error replies become Errors
// (unsupported_capability -> capability, capacity -> capacity, others ->
// protocol). Calls are serialized; the model reports itself as not
// thread-safe.
class AdapterModel : public Model {
 public:
  AdapterModel(std::shared_ptr<AdapterClient> client, std::string id);

  AdapterClient& client() const { return *client_; }
  // Sequences per predict_batch request.
  static constexpr std::size_t kBatchChunk = 256;

 protected:
  Prediction do_predict(const TokenSeq& tokens) const override;
  std::vector<Prediction> do_predict_batch(std::span<const TokenSeq> batch) const override;
  std::vector<double> do_grad_dot(const TokenSeq& tokens, const TokenSeq& baseline, double alpha,
                                  int target) const override;
  AttentionMap do_attention(const TokenSeq& tokens) const override;

 private:
  json checked(const json& reply, const std::string& type) const;
  std::shared_ptr<AdapterClient> client_;
};

// "stdio:<command>" or "http:<url>"; performs the handshake.
std::shared_ptr<AdapterModel> connect_adapter(const std::string& spec,
                                              const TransportOptions& options = {});

// ---- Conformance -----------------------------------------------------------

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  bool skipped = false;  // capability not claimed
  std::string detail;
};

struct ConformanceReport {
  std::string endpoint;
  std::vector<ConformanceCheck> checks;
  bool passed() const;
  json to_json() const;
};

// Handshake, normalization, determinism, batch consistency, attention rows,
// grad_dot path agreement (5e-3) and error replies. Transport failures are
// recorded as failed checks.
ConformanceReport check_conformance(AdapterClient& client, const std::vector<Instance>& probes,
                                    std::uint64_t seed);

}  // namespace unieval

#endif  // UNIEVAL_ADAPTER_HPP_
