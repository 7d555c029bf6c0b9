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

#include "unieval/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "unieval/error.hpp"
#include "unieval/rng.hpp"

namespace unieval {

// ---- messages ---------------------------------------------------------------

json hello_request() { return json{{"type", "hello?"}, {"version", kProtocolVersion}}; }

json hello_reply(const ModelInfo& info) {
  json caps = json::array({"predict"});
  if (info.capabilities.grad_dot) caps.push_back("grad_dot");
  if (info.capabilities.attention) caps.push_back("attention");
  return json{{"type", "hello"},
              {"version", kProtocolVersion},
              {"classes", info.num_classes},
              {"mask_token", info.mask_token},
              {"capabilities", caps}};
}

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  fail(ErrorKind::kProtocol, "hello reply: field '" + field + "' " + what);
}

}  // namespace

ModelInfo parse_hello(const json& reply) {
  if (!reply.is_object()) fail(ErrorKind::kProtocol, "hello reply is not a JSON object");
  if (!reply.contains("type")) bad_field("type", "is missing");
  if (reply["type"] != "hello") {
    if (reply["type"] == "error") {
      fail(ErrorKind::kProtocol, "hello rejected: " + reply.value("message", std::string("?")));
    }
    bad_field("type", "must be \"hello\"");
  }
  if (!reply.contains("version") || !reply["version"].is_number_integer()) {
    bad_field("version", "must be an integer");
  }
  if (reply["version"].get<int>() != kProtocolVersion) {
    fail(ErrorKind::kProtocol, "protocol version mismatch: adapter speaks " +
                                   reply["version"].dump() + ", engine speaks " +
                                   std::to_string(kProtocolVersion));
  }
  if (!reply.contains("classes") || !reply["classes"].is_number_integer() ||
      reply["classes"].get<long long>() < 2) {
    bad_field("classes", "must be an integer >= 2");
  }
  if (!reply.contains("mask_token") || !reply["mask_token"].is_string() ||
      reply["mask_token"].get<std::string>().empty()) {
    bad_field("mask_token", "must be a non-empty string");
  }
  if (!reply.contains("capabilities") || !reply["capabilities"].is_array()) {
    bad_field("capabilities", "must be an array");
  }
  ModelInfo info;
  info.num_classes = reply["classes"].get<int>();
  info.mask_token = reply["mask_token"].get<std::string>();
  bool predict = false;
  for (const auto& c : reply["capabilities"]) {
    if (!c.is_string()) bad_field("capabilities", "must hold strings");
    const auto s = c.get<std::string>();
    if (s == "predict") {
      predict = true;
    } else if (s == "grad_dot") {
      info.capabilities.grad_dot = true;
    } else if (s == "attention") {
      info.capabilities.attention = true;
    } else {
      bad_field("capabilities", "has unknown entry \"" + s + "\"");
    }
  }
  if (!predict) bad_field("capabilities", "must include \"predict\"");
  info.thread_safe = false;
  return info;
}

json predict_request(std::int64_t id, const TokenSeq& tokens) {
  return json{{"type", "predict"}, {"id", id}, {"tokens", tokens}};
}

json predict_batch_request(std::int64_t id, const std::vector<TokenSeq>& batch) {
  return json{{"type", "predict_batch"}, {"id", id}, {"batch", batch}};
}

json grad_dot_request(std::int64_t id, const TokenSeq& tokens, const TokenSeq& baseline,
                      double alpha, int target) {
  return json{{"type", "grad_dot"}, {"id", id},        {"tokens", tokens},
              {"baseline", baseline}, {"alpha", alpha}, {"target", target}};
}

json attention_request(std::int64_t id, const TokenSeq& tokens) {
  return json{{"type", "attention"}, {"id", id}, {"tokens", tokens}};
}

json error_reply(const json& id, const std::string& code, const std::string& message) {
  return json{{"type", "error"}, {"id", id}, {"code", code}, {"message", message}};
}

// ---- server side ------------------------------------------------------------

namespace {

TokenSeq tokens_field(const json& req, const char* name) {
  require(req.contains(name) && req[name].is_array(), ErrorKind::kContract,
          std::string("field '") + name + "' must be an array of strings");
  TokenSeq out;
  out.reserve(req[name].size());
  for (const auto& t : req[name]) {
    require(t.is_string(), ErrorKind::kContract,
            std::string("field '") + name + "' must be an array of strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

const char* code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCapability:
      return error_code::kUnsupported;
    case ErrorKind::kCapacity:
      return error_code::kCapacity;
    case ErrorKind::kContract:
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
      return error_code::kInvalid;
    default:
      return error_code::kInternal;
  }
}

json answer(const Model& model, const json& req, const json& id) {
  const std::string type = req["type"].get<std::string>();
  if (type == "hello?") return hello_reply(model.info());
  if (type == "predict") {
    const auto p = model.predict(tokens_field(req, "tokens"));
    return json{{"type", "prediction"}, {"id", id}, {"probs", p.probs}};
  }
  if (type == "predict_batch") {
    require(req.contains("batch") && req["batch"].is_array(), ErrorKind::kContract,
            "field 'batch' must be an array");
    std::vector<TokenSeq> batch;
    for (const auto& seq : req["batch"]) {
      json wrap{{"tokens", seq}};
      batch.push_back(tokens_field(wrap, "tokens"));
    }
    json probs = json::array();
    for (const auto& p : model.predict_batch(batch)) probs.push_back(p.probs);
    return json{{"type", "prediction_batch"}, {"id", id}, {"probs", probs}};
  }
  if (type == "grad_dot") {
    require(req.contains("alpha") && req["alpha"].is_number(), ErrorKind::kContract,
            "field 'alpha' must be a number");
    require(req.contains("target") && req["target"].is_number_integer(), ErrorKind::kContract,
            "field 'target' must be an integer");
    const auto v = model.grad_dot(tokens_field(req, "tokens"), tokens_field(req, "baseline"),
                                  req["alpha"].get<double>(), req["target"].get<int>());
    return json{{"type", "grad_dot"}, {"id", id}, {"values", v}};
  }
  if (type == "attention") {
    const auto a = model.attention(tokens_field(req, "tokens"));
    json heads = json::array();
    for (const auto& h : a.heads) {
      json rows = json::array();
      for (int r = 0; r < h.n; ++r) {
        json row = json::array();
        for (int c = 0; c < h.n; ++c) row.push_back(h.at(r, c));
        rows.push_back(std::move(row));
      }
      heads.push_back(std::move(rows));
    }
    return json{{"type", "attention"}, {"id", id}, {"heads", heads}, {"alignment", a.alignment}};
  }
  return error_reply(id, error_code::kUnknownType, "unknown request type '" + type + "'");
}

}  // namespace

json handle_request(const Model& model, const json& request) {
  json id = nullptr;
  try {
    if (!request.is_object()) {
      return error_reply(id, error_code::kInvalid, "request is not a JSON object");
    }
    if (request.contains("id")) id = request["id"];
    if (!request.contains("type") || !request["type"].is_string()) {
      return error_reply(id, error_code::kInvalid, "request without a string 'type'");
    }
    return answer(model, request, id);
  } catch (const Error& e) {
    return error_reply(id, code_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_reply(id, error_code::kInternal, e.what());
  }
}

void serve_stream(const Model& model, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json reply;
    try {
      reply = handle_request(model, json::parse(line));
    } catch (const json::exception& e) {
      reply = error_reply(nullptr, error_code::kInvalid, std::string("bad JSON: ") + e.what());
    }
    out << reply.dump() << '\n';
    out.flush();
  }
}

struct HttpAdapterServer::Impl {
  std::shared_ptr<const Model> model;
  httplib::Server server;
  std::thread thread;
};

HttpAdapterServer::HttpAdapterServer(std::shared_ptr<const Model> model)
    : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  auto* impl = impl_.get();
  impl_->server.Post(R"(/v1/([A-Za-z_]+))", [impl](const httplib::Request& req,
                                                   httplib::Response& res) {
    json reply;
    try {
      auto body = json::parse(req.body);
      const std::string path_type = req.matches[1];
      const std::string want = path_type == "hello" ? "hello?" : path_type;
      if (body.is_object() && body.value("type", std::string()) != want) {
        reply = error_reply(body.value("id", json(nullptr)), error_code::kInvalid,
                            "body type does not match path /v1/" + path_type);
      } else {
        reply = handle_request(*impl->model, body);
      }
    } catch (const json::exception& e) {
      reply = error_reply(nullptr, error_code::kInvalid, std::string("bad JSON: ") + e.what());
    }
    res.set_content(reply.dump(), "application/json");
  });
}

HttpAdapterServer::~HttpAdapterServer() { stop(); }

int HttpAdapterServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  require(bound > 0, ErrorKind::kTransport,
          "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpAdapterServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpAdapterServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---- transports -------------------------------------------------------------

namespace {

bool has_id(const json& req) { return req.contains("id") && !req["id"].is_null(); }

// Pairs replies with outstanding requests.
class ReplyMatcher {
 public:
  explicit ReplyMatcher(std::vector<json>& replies) : replies_(replies) {}

  void expect(const json& req, std::size_t index) {
    if (has_id(req)) {
      require(req["id"].is_number_integer(), ErrorKind::kContract, "request ids must be integers");
      const auto id = req["id"].get<std::int64_t>();
      require(!pending_.count(id), ErrorKind::kContract,
              "duplicate request id " + std::to_string(id));
      pending_[id] = index;
    } else {
      anonymous_ = index;
    }
  }

  void accept(const std::string& line) {
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::kProtocol, std::string("adapter sent invalid JSON: ") + e.what());
    }
    require(reply.is_object(), ErrorKind::kProtocol, "adapter reply is not a JSON object");
    if (!has_id(reply)) {
      if (anonymous_) {
        replies_[*anonymous_] = std::move(reply);
        anonymous_.reset();
        return;
      }
      // An error without an id cannot be attributed; surface it.
      fail(ErrorKind::kProtocol, "adapter reply without id: " + reply.dump());
    }
    require(reply["id"].is_number_integer(), ErrorKind::kProtocol,
            "adapter reply id is not an integer");
    const auto id = reply["id"].get<std::int64_t>();
    auto it = pending_.find(id);
    require(it != pending_.end(), ErrorKind::kProtocol,
            "adapter replied to unknown id " + std::to_string(id));
    replies_[it->second] = std::move(reply);
    pending_.erase(it);
  }

  std::size_t outstanding() const { return pending_.size() + (anonymous_ ? 1 : 0); }
  bool anonymous_pending() const { return anonymous_.has_value(); }

 private:
  std::vector<json>& replies_;
  std::map<std::int64_t, std::size_t> pending_;
  std::optional<std::size_t> anonymous_;
};

class StdioTransport : public Transport {
 public:
  StdioTransport(std::string command, TransportOptions options)
      : command_(std::move(command)), options_(options) {
    require(options_.window >= 1, ErrorKind::kConfig, "adapter window must be >= 1");
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    require(::pipe(to_child) == 0 && ::pipe(from_child) == 0, ErrorKind::kTransport,
            std::string("pipe: ") + std::strerror(errno));
    pid_ = ::fork();
    require(pid_ >= 0, ErrorKind::kTransport, std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
    ::fcntl(in_, F_SETFL, ::fcntl(in_, F_GETFL) | O_NONBLOCK);
    ::fcntl(out_, F_SETFL, ::fcntl(out_, F_GETFL) | O_NONBLOCK);
    ::fcntl(in_, F_SETFD, FD_CLOEXEC);
    ::fcntl(out_, F_SETFD, FD_CLOEXEC);
  }

  ~StdioTransport() override {
    if (in_ >= 0) ::close(in_);
    if (out_ >= 0) ::close(out_);
    if (pid_ > 0) {
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  std::string describe() const override { return "stdio:" + command_; }

  std::vector<json> exchange(const std::vector<json>& requests) override {
    require(!broken_, ErrorKind::kTransport, "adapter '" + command_ + "' is no longer usable");
    try {
      return run(requests);
    } catch (const Error& e) {
      // A half-read pipeline cannot be resumed.
      broken_ = true;
      throw;
    }
  }

 private:
  std::vector<json> run(const std::vector<json>& requests) {
    std::vector<json> replies(requests.size());
    ReplyMatcher matcher(replies);
    std::size_t next = 0, done = 0;
    std::string outbuf;
    auto last = std::chrono::steady_clock::now();
    while (done < requests.size()) {
      while (next < requests.size() && matcher.outstanding() < static_cast<std::size_t>(options_.window) &&
             !matcher.anonymous_pending()) {
        const auto& req = requests[next];
        if (!has_id(req) && matcher.outstanding() > 0) break;
        matcher.expect(req, next);
        outbuf += req.dump();
        outbuf += '\n';
        ++next;
      }
      pollfd fds[2] = {{out_, POLLIN, 0}, {in_, static_cast<short>(outbuf.empty() ? 0 : POLLOUT), 0}};
      const int nfds = outbuf.empty() ? 1 : 2;
      const int rc = ::poll(fds, nfds, 50);
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorKind::kTransport, std::string("poll: ") + std::strerror(errno));
      }
      bool progress = false;
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t w = ::write(in_, outbuf.data(), outbuf.size());
        if (w < 0 && errno != EAGAIN && errno != EINTR) {
          fail(ErrorKind::kTransport, "adapter '" + command_ + "' closed its input (" +
                                          std::strerror(errno) + ")");
        }
        if (w > 0) {
          outbuf.erase(0, static_cast<std::size_t>(w));
          progress = true;
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t r = ::read(out_, buf, sizeof(buf));
        if (r == 0) {
          fail(ErrorKind::kTransport, "adapter '" + command_ + "' exited before replying");
        }
        if (r < 0 && errno != EAGAIN && errno != EINTR) {
          fail(ErrorKind::kTransport, std::string("read: ") + std::strerror(errno));
        }
        if (r > 0) {
          inbuf_.append(buf, static_cast<std::size_t>(r));
          progress = true;
          std::size_t nl;
          while ((nl = inbuf_.find('\n')) != std::string::npos) {
            std::string line = inbuf_.substr(0, nl);
            inbuf_.erase(0, nl + 1);
            if (line.empty() || line == "\r") continue;
            matcher.accept(line);
            ++done;
          }
        }
      }
      const auto now = std::chrono::steady_clock::now();
      if (progress) {
        last = now;
      } else if (now - last > options_.timeout) {
        fail(ErrorKind::kTransport,
             "adapter '" + command_ + "' timed out after " +
                 std::to_string(options_.timeout.count()) + " ms");
      }
    }
    return replies;
  }

  std::string command_;
  TransportOptions options_;
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::string inbuf_;
  bool broken_ = false;
};

std::string path_for(const json& req) {
  std::string type = req.is_object() ? req.value("type", std::string()) : std::string();
  if (type == "hello?") return "/v1/hello";
  return "/v1/" + type;
}

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string url, TransportOptions options)
      : url_(std::move(url)), client_(url_) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout).count();
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout).count() %
                       1000000;
    client_.set_connection_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
    client_.set_read_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
    client_.set_write_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
    client_.set_keep_alive(true);
  }

  std::string describe() const override { return "http:" + url_; }

  std::vector<json> exchange(const std::vector<json>& requests) override {
    std::vector<json> replies(requests.size());
    ReplyMatcher matcher(replies);
    for (std::size_t i = 0; i < requests.size(); ++i) {
      matcher.expect(requests[i], i);
      auto res = client_.Post(path_for(requests[i]), requests[i].dump(), "application/json");
      if (!res) {
        fail(ErrorKind::kTransport,
             "adapter at " + url_ + " unreachable: " + httplib::to_string(res.error()));
      }
      if (res->status != 200) {
        fail(ErrorKind::kProtocol, "adapter at " + url_ + " answered HTTP " +
                                       std::to_string(res->status) + " for " +
                                       path_for(requests[i]));
      }
      matcher.accept(res->body);
    }
    return replies;
  }

 private:
  std::string url_;
  httplib::Client client_;
};

class LoopbackTransport : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<const Model> model, bool reverse, TransportOptions options)
      : model_(std::move(model)), reverse_(reverse), window_(std::max(1, options.window)) {}

  std::string describe() const override { return "loopback:" + model_->id(); }

  std::vector<json> exchange(const std::vector<json>& requests) override {
    std::vector<json> replies(requests.size());
    ReplyMatcher matcher(replies);
    for (std::size_t start = 0; start < requests.size();) {
      const std::size_t end = std::min(requests.size(), start + static_cast<std::size_t>(window_));
      std::vector<std::string> lines;
      for (std::size_t i = start; i < end; ++i) {
        matcher.expect(requests[i], i);
        lines.push_back(handle_request(*model_, json::parse(requests[i].dump())).dump());
      }
      if (reverse_) std::reverse(lines.begin(), lines.end());
      for (const auto& l : lines) matcher.accept(l);
      start = end;
    }
    return replies;
  }

 private:
  std::shared_ptr<const Model> model_;
  bool reverse_;
  int window_;
};

}  // namespace

std::unique_ptr<Transport> make_stdio_transport(const std::string& command,
                                                const TransportOptions& options) {
  require(!command.empty(), ErrorKind::kConfig, "empty adapter command");
  return std::make_unique<StdioTransport>(command, options);
}

std::unique_ptr<Transport> make_http_transport(const std::string& url,
                                               const TransportOptions& options) {
  require(url.rfind("http://", 0) == 0, ErrorKind::kConfig,
          "adapter URL must start with http:// (got '" + url + "')");
  return std::make_unique<HttpTransport>(url, options);
}

std::unique_ptr<Transport> make_loopback_transport(std::shared_ptr<const Model> model,
                                                   bool reverse_replies,
                                                   const TransportOptions& options) {
  require(model != nullptr, ErrorKind::kContract, "loopback transport needs a model");
  return std::make_unique<LoopbackTransport>(std::move(model), reverse_replies, options);
}

// ---- client -----------------------------------------------------------------

AdapterClient::AdapterClient(std::unique_ptr<Transport> transport)
    : transport_(std::move(transport)) {
  require(transport_ != nullptr, ErrorKind::kContract, "adapter client without transport");
}

const ModelInfo& AdapterClient::handshake() {
  const json reply = call(hello_request());
  info_ = parse_hello(reply);
  connected_ = true;
  return info_;
}

std::vector<json> AdapterClient::call(const std::vector<json>& requests) {
  std::lock_guard<std::mutex> lock(mu_);
  return transport_->exchange(requests);
}

json AdapterClient::call(const json& request) {
  return call(std::vector<json>{request}).front();
}

namespace {

ModelInfo connected_info(AdapterClient& client, std::string id) {
  if (!client.connected()) client.handshake();
  ModelInfo info = client.info();
  info.id = std::move(id);
  info.thread_safe = false;
  return info;
}

std::vector<double> number_array(const json& v, const std::string& what) {
  require(v.is_array(), ErrorKind::kProtocol, what + " is not an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    require(x.is_number(), ErrorKind::kProtocol, what + " holds a non-number");
    out.push_back(x.get<double>());
  }
  return out;
}

Prediction prediction_from(const json& probs, int classes) {
  auto p = number_array(probs, "probs");
  require(static_cast<int>(p.size()) == classes, ErrorKind::kProtocol,
          "adapter returned " + std::to_string(p.size()) + " probabilities for " +
              std::to_string(classes) + " classes");
  try {
    return make_prediction(std::move(p));
  } catch (const Error& e) {
    fail(ErrorKind::kProtocol, std::string("adapter probabilities invalid: ") + e.what());
  }
}

}  // namespace

AdapterModel::AdapterModel(std::shared_ptr<AdapterClient> client, std::string id)
    : Model(connected_info(*client, std::move(id))), client_(std::move(client)) {}

json AdapterModel::checked(const json& reply, const std::string& type) const {
  const std::string got = reply.value("type", std::string());
  if (got == "error") {
    const std::string code = reply.value("code", std::string());
    const std::string msg = "adapter error (" + code + "): " + reply.value("message", std::string());
    if (code == error_code::kUnsupported) fail(ErrorKind::kCapability, msg);
    if (code == error_code::kCapacity) fail(ErrorKind::kCapacity, msg);
    fail(ErrorKind::kProtocol, msg);
  }
  require(got == type, ErrorKind::kProtocol,
          "expected a '" + type + "' reply, adapter sent '" + got + "'");
  return reply;
}

Prediction AdapterModel::do_predict(const TokenSeq& tokens) const {
  const auto reply = checked(client_->call(predict_request(client_->next_id(), tokens)), "prediction");
  require(reply.contains("probs"), ErrorKind::kProtocol, "prediction reply without 'probs'");
  return prediction_from(reply["probs"], num_classes());
}

std::vector<Prediction> AdapterModel::do_predict_batch(std::span<const TokenSeq> batch) const {
  std::vector<json> requests;
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < batch.size(); start += kBatchChunk) {
    const std::size_t end = std::min(batch.size(), start + kBatchChunk);
    std::vector<TokenSeq> chunk(batch.begin() + static_cast<std::ptrdiff_t>(start),
                                batch.begin() + static_cast<std::ptrdiff_t>(end));
    requests.push_back(predict_batch_request(client_->next_id(), chunk));
    sizes.push_back(end - start);
  }
  const auto replies = client_->call(requests);
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (std::size_t r = 0; r < replies.size(); ++r) {
    const auto reply = checked(replies[r], "prediction_batch");
    require(reply.contains("probs") && reply["probs"].is_array() &&
                reply["probs"].size() == sizes[r],
            ErrorKind::kProtocol,
            "prediction_batch reply does not hold " + std::to_string(sizes[r]) + " rows");
    for (const auto& row : reply["probs"]) out.push_back(prediction_from(row, num_classes()));
  }
  return out;
}

std::vector<double> AdapterModel::do_grad_dot(const TokenSeq& tokens, const TokenSeq& baseline,
                                              double alpha, int target) const {
  const auto reply = checked(
      client_->call(grad_dot_request(client_->next_id(), tokens, baseline, alpha, target)),
      "grad_dot");
  require(reply.contains("values"), ErrorKind::kProtocol, "grad_dot reply without 'values'");
  auto v = number_array(reply["values"], "values");
  require(v.size() == tokens.size(), ErrorKind::kProtocol,
          "grad_dot reply length differs from the token count");
  return v;
}

AttentionMap AdapterModel::do_attention(const TokenSeq& tokens) const {
  const auto reply = checked(client_->call(attention_request(client_->next_id(), tokens)),
                             "attention");
  require(reply.contains("heads") && reply["heads"].is_array() && reply.contains("alignment") &&
              reply["alignment"].is_array(),
          ErrorKind::kProtocol, "attention reply needs 'heads' and 'alignment' arrays");
  AttentionMap map;
  for (const auto& a : reply["alignment"]) {
    require(a.is_number_integer(), ErrorKind::kProtocol, "alignment holds a non-integer");
    const int v = a.get<int>();
    require(v >= -1 && v < static_cast<int>(tokens.size()), ErrorKind::kProtocol,
            "alignment entry " + std::to_string(v) + " out of range");
    map.alignment.push_back(v);
  }
  const int n = map.positions();
  for (const auto& h : reply["heads"]) {
    require(h.is_array() && static_cast<int>(h.size()) == n, ErrorKind::kProtocol,
            "attention head is not " + std::to_string(n) + " x " + std::to_string(n));
    SquareMatrix mat(n);
    for (int r = 0; r < n; ++r) {
      const auto row = number_array(h[static_cast<std::size_t>(r)], "attention row");
      require(static_cast<int>(row.size()) == n, ErrorKind::kProtocol,
              "attention row has the wrong width");
      for (int c = 0; c < n; ++c) mat.at(r, c) = row[static_cast<std::size_t>(c)];
    }
    map.heads.push_back(std::move(mat));
  }
  require(!map.heads.empty(), ErrorKind::kProtocol, "attention reply without heads");
  return map;
}

std::shared_ptr<AdapterModel> connect_adapter(const std::string& spec,
                                              const TransportOptions& options) {
  std::unique_ptr<Transport> t;
  if (spec.rfind("stdio:", 0) == 0) {
    t = make_stdio_transport(spec.substr(6), options);
  } else if (spec.rfind("http://", 0) == 0) {
    t = make_http_transport(spec, options);
  } else if (spec.rfind("http:", 0) == 0) {
    std::string url = spec.substr(5);
    if (url.rfind("//", 0) == 0) url = "http:" + url;
    t = make_http_transport(url, options);
  } else {
    fail(ErrorKind::kConfig, "adapter spec must be stdio:<command> or http:<url>, got '" + spec + "'");
  }
  auto client = std::make_shared<AdapterClient>(std::move(t));
  return std::make_shared<AdapterModel>(client, "adapter:" + spec);
}

// ---- conformance ------------------------------------------------------------

bool ConformanceReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ConformanceCheck& c) { return c.passed || c.skipped; });
}

json ConformanceReport::to_json() const {
  json j;
  j["endpoint"] = endpoint;
  j["passed"] = passed();
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back(
        {{"name", c.name}, {"status", c.skipped ? "skip" : (c.passed ? "pass" : "fail")},
         {"detail", c.detail}});
  }
  return j;
}

namespace {

constexpr double kNormTol = 1e-6;
constexpr double kBatchTol = 1e-9;
constexpr double kAttentionTol = 1e-5;
constexpr double kGradTol = 5e-3;
constexpr int kGradSteps = 128;
constexpr std::size_t kMaxProbes = 8;
constexpr std::size_t kGradProbes = 3;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Raw probability row checks shared by several checks.
std::string probs_problem(const json& probs, int classes) {
  if (!probs.is_array()) return "probs is not an array";
  if (static_cast<int>(probs.size()) != classes) {
    return std::to_string(probs.size()) + " probabilities for " + std::to_string(classes) + " classes";
  }
  double sum = 0.0;
  for (const auto& p : probs) {
    if (!p.is_number()) return "non-numeric probability";
    const double v = p.get<double>();
    if (!std::isfinite(v) || v < 0.0) return "negative or non-finite probability";
    sum += v;
  }
  if (std::fabs(sum - 1.0) > kNormTol) return "probabilities sum to " + fmt(sum);
  return {};
}

const json& expect_type(const json& reply, const std::string& type) {
  const std::string got = reply.value("type", std::string());
  if (got == "error") {
    fail(ErrorKind::kProtocol, "error reply (" + reply.value("code", std::string()) +
                                   "): " + reply.value("message", std::string()));
  }
  require(got == type, ErrorKind::kProtocol, "expected '" + type + "', got '" + got + "'");
  return reply;
}

template <typename F>
ConformanceCheck run_check(const std::string& name, F&& body) {
  ConformanceCheck c;
  c.name = name;
  try {
    c.detail = body();
    c.passed = c.detail.empty();
    if (c.passed) c.detail = "ok";
  } catch (const Error& e) {
    c.passed = false;
    c.detail = std::string(error_kind_name(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = e.what();
  }
  return c;
}

ConformanceCheck skipped(const std::string& name, const std::string& why) {
  ConformanceCheck c;
  c.name = name;
  c.skipped = true;
  c.detail = why;
  return c;
}

}  // namespace

ConformanceReport check_conformance(AdapterClient& client, const std::vector<Instance>& probes,
                                    std::uint64_t seed) {
  ConformanceReport report;
  report.endpoint = client.transport().describe();

  auto hs = run_check("handshake", [&]() -> std::string {
    if (!client.connected()) client.handshake();
    return {};
  });
  report.checks.push_back(hs);
  if (!hs.passed) return report;
  const ModelInfo info = client.info();
  const int classes = info.num_classes;

  // Probe sequences: each probe as given plus a randomly masked copy.
  std::vector<TokenSeq> seqs;
  for (std::size_t i = 0; i < probes.size() && i < kMaxProbes; ++i) {
    const auto toks = probes[i].tokens();
    seqs.push_back(toks);
    Rng rng = make_rng(seed, i);
    TokenSeq masked = toks;
    for (auto& t : masked) {
      if (uniform01(rng) < 0.3) t = info.mask_token;
    }
    seqs.push_back(std::move(masked));
  }
  if (seqs.empty()) {
    report.checks.push_back(run_check("probes", [] { return std::string("no probe instances"); }));
    return report;
  }

  report.checks.push_back(run_check("normalization", [&]() -> std::string {
    std::vector<json> reqs;
    for (const auto& s : seqs) reqs.push_back(predict_request(client.next_id(), s));
    const auto replies = client.call(reqs);
    for (std::size_t i = 0; i < replies.size(); ++i) {
      const auto& r = expect_type(replies[i], "prediction");
      auto problem = probs_problem(r.value("probs", json()), classes);
      if (!problem.empty()) return "probe " + std::to_string(i) + ": " + problem;
    }
    return {};
  }));

  report.checks.push_back(run_check("determinism", [&]() -> std::string {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto a = expect_type(client.call(predict_request(client.next_id(), seqs[i])), "prediction");
      const auto b = expect_type(client.call(predict_request(client.next_id(), seqs[i])), "prediction");
      if (a.value("probs", json()) != b.value("probs", json())) {
        return "probe " + std::to_string(i) + ": repeated request gave " +
               a.value("probs", json()).dump() + " then " + b.value("probs", json()).dump();
      }
    }
    return {};
  }));

  report.checks.push_back(run_check("batch-consistency", [&]() -> std::string {
    const auto batch = expect_type(client.call(predict_batch_request(client.next_id(), seqs)),
                                   "prediction_batch");
    const json rows = batch.value("probs", json());
    if (!rows.is_array() || rows.size() != seqs.size()) {
      return "batch reply does not hold " + std::to_string(seqs.size()) + " rows";
    }
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto single = expect_type(client.call(predict_request(client.next_id(), seqs[i])),
                                      "prediction");
      const auto a = number_array(rows[i], "batch probs");
      const auto b = number_array(single.value("probs", json()), "probs");
      if (a.size() != b.size()) return "row " + std::to_string(i) + " has the wrong width";
      for (std::size_t c = 0; c < a.size(); ++c) {
        if (std::fabs(a[c] - b[c]) > kBatchTol) {
          return "row " + std::to_string(i) + " differs from single predict by " +
                 fmt(std::fabs(a[c] - b[c]));
        }
      }
    }
    return {};
  }));

  if (info.capabilities.attention) {
    report.checks.push_back(run_check("attention", [&]() -> std::string {
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto r = expect_type(client.call(attention_request(client.next_id(), seqs[i])),
                                   "attention");
        const json heads = r.value("heads", json());
        const json align = r.value("alignment", json());
        if (!heads.is_array() || heads.empty()) return "no heads";
        if (!align.is_array()) return "no alignment";
        const auto n = align.size();
        std::vector<int> seen(seqs[i].size(), 0);
        for (const auto& a : align) {
          if (!a.is_number_integer()) return "non-integer alignment";
          const int v = a.get<int>();
          if (v < -1 || v >= static_cast<int>(seqs[i].size())) return "alignment out of range";
          if (v >= 0) ++seen[static_cast<std::size_t>(v)];
        }
        for (int s : seen) {
          if (s != 1) return "every token must be aligned to exactly one position";
        }
        for (std::size_t h = 0; h < heads.size(); ++h) {
          if (!heads[h].is_array() || heads[h].size() != n) return "head is not square";
          for (std::size_t row = 0; row < n; ++row) {
            const auto v = number_array(heads[h][row], "attention row");
            if (v.size() != n) return "head is not square";
            double sum = 0.0;
            for (double x : v) {
              if (!std::isfinite(x) || x < 0.0) return "negative attention weight";
              sum += x;
            }
            if (std::fabs(sum - 1.0) > kAttentionTol) {
              return "probe " + std::to_string(i) + " head " + std::to_string(h) + " row " +
                     std::to_string(row) + " sums to " + fmt(sum);
            }
          }
        }
      }
      return {};
    }));
  } else {
    report.checks.push_back(skipped("attention", "capability not claimed"));
  }

  if (info.capabilities.grad_dot) {
    report.checks.push_back(run_check("grad_dot", [&]() -> std::string {
      // The midpoint sum of grad_dot along the straight path must reproduce
      // the change of the centered target logit between its ends.
      for (std::size_t i = 0; i < seqs.size() && i < 2 * kGradProbes; i += 2) {
        const TokenSeq& x = seqs[i];
        const TokenSeq base(x.size(), info.mask_token);
        const auto ends = client.call(std::vector<json>{predict_request(client.next_id(), x),
                                                        predict_request(client.next_id(), base)});
        const auto px = prediction_from(expect_type(ends[0], "prediction")["probs"], classes);
        const auto pb = prediction_from(expect_type(ends[1], "prediction")["probs"], classes);
        const int target = px.label;
        const double diff = centered_logit(px, target) - centered_logit(pb, target);
        std::vector<json> reqs;
        for (int t = 1; t <= kGradSteps; ++t) {
          reqs.push_back(grad_dot_request(client.next_id(), x, base, (t - 0.5) / kGradSteps, target));
        }
        const auto replies = client.call(reqs);
        double total = 0.0;
        for (const auto& r : replies) {
          const auto v = number_array(expect_type(r, "grad_dot").value("values", json()), "values");
          if (v.size() != x.size()) return "values length differs from the token count";
          for (double g : v) total += g;
        }
        total /= kGradSteps;
        const double tol = kGradTol * std::max(1.0, std::fabs(diff));
        if (std::fabs(total - diff) > tol) {
          return "probe " + std::to_string(i / 2) + ": path sum " + fmt(total) +
                 " vs logit change " + fmt(diff);
        }
        // No direction, no attribution.
        const auto zero = number_array(
            expect_type(client.call(grad_dot_request(client.next_id(), x, x, 0.5, target)),
                        "grad_dot")
                .value("values", json()),
            "values");
        for (double g : zero) {
          if (std::fabs(g) > 1e-12) return "grad_dot with baseline == tokens is not zero";
        }
      }
      return {};
    }));
  } else {
    report.checks.push_back(skipped("grad_dot", "capability not claimed"));
  }

  report.checks.push_back(run_check("error-reply", [&]() -> std::string {
    const auto id = client.next_id();
    const auto r = client.call(json{{"type", "no_such_request"}, {"id", id}});
    if (r.value("type", std::string()) != "error") return "unknown request type was not rejected";
    if (!r.contains("code") || !r["code"].is_string()) return "error reply without string code";
    if (!r.contains("message") || !r["message"].is_string()) return "error reply without message";
    return {};
  }));

  if (!info.capabilities.grad_dot || !info.capabilities.attention) {
    report.checks.push_back(run_check("capability-gating", [&]() -> std::string {
      std::vector<json> reqs;
      if (!info.capabilities.grad_dot) {
        reqs.push_back(grad_dot_request(client.next_id(), seqs[0],
                                        TokenSeq(seqs[0].size(), info.mask_token), 0.5, 0));
      }
      if (!info.capabilities.attention) reqs.push_back(attention_request(client.next_id(), seqs[0]));
      for (const auto& r : client.call(reqs)) {
        if (r.value("type", std::string()) != "error" ||
            r.value("code", std::string()) != error_code::kUnsupported) {
          return "unclaimed capability answered with " + r.dump().substr(0, 120);
        }
      }
      return {};
    }));
  } else {
    report.checks.push_back(skipped("capability-gating", "all capabilities claimed"));
  }
  return report;
}

}  // namespace unieval
