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

// Misbehaving adapter for the transport and conformance tests. Speaks the
// line protocol on stdin/stdout around the synthetic linear model; each flag
// breaks one thing.
#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "unieval/adapter.hpp"
#include "unieval/synth.hpp"

using namespace unieval;

namespace {

struct Faults {
  bool unnormalized = false;
  bool nondeterministic = false;
  bool reorder = false;
  bool leaky_gating = false;
  bool bad_hello = false;
  bool hang = false;
  bool crash = false;
  int version = kProtocolVersion;
  std::string capabilities = "predict,grad_dot";
};

bool input_ready(int ms) {
  pollfd p{0, POLLIN, 0};
  return poll(&p, 1, ms) > 0;
}

class LineReader {
 public:
  // Next complete line; false on EOF.
  bool next(std::string& line) {
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return true;
      }
      char tmp[4096];
      const ssize_t n = ::read(0, tmp, sizeof(tmp));
      if (n <= 0) return false;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }
  bool has_line() const { return buf_.find('\n') != std::string::npos; }

 private:
  std::string buf_;
};

json answer(const Model& model, const Faults& f, const json& req, int& counter) {
  const std::string type = req.is_object() ? req.value("type", std::string()) : std::string();
  if (type == "hello?") {
    ModelInfo info = model.info();
    json r = hello_reply(info);
    r["version"] = f.version;
    json caps = json::array();
    std::size_t start = 0;
    while (start <= f.capabilities.size()) {
      const auto comma = f.capabilities.find(',', start);
      const auto item = f.capabilities.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) caps.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    r["capabilities"] = caps;
    if (f.bad_hello) r.erase("mask_token");
    return r;
  }
  const bool claimed_grad = f.capabilities.find("grad_dot") != std::string::npos;
  if (type == "grad_dot" && !claimed_grad && !f.leaky_gating) {
    return error_reply(req.value("id", json()), error_code::kUnsupported, "grad_dot not offered");
  }
  json r = handle_request(model, req);
  if (r.value("type", std::string()) == "prediction") {
    auto probs = r["probs"].get<std::vector<double>>();
    if (f.unnormalized) {
      for (double& p : probs) p *= 1.02;
    }
    if (f.nondeterministic) {
      const double eps = (++counter % 2 == 0) ? 1e-3 : -1e-3;
      probs[0] += eps;
      probs[1] -= eps;
    }
    r["probs"] = probs;
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  Faults f;
  CLI::App app{"fake adapter"};
  app.add_flag("--unnormalized", f.unnormalized);
  app.add_flag("--nondeterministic", f.nondeterministic);
  app.add_flag("--reorder", f.reorder, "answer pipelined requests in reverse order");
  app.add_flag("--leaky-gating", f.leaky_gating, "answer grad_dot without claiming it");
  app.add_flag("--bad-hello", f.bad_hello);
  app.add_flag("--hang", f.hang, "never answer after the handshake");
  app.add_flag("--crash", f.crash, "exit after the handshake");
  app.add_option("--version", f.version);
  app.add_option("--capabilities", f.capabilities);
  CLI11_PARSE(app, argc, argv);

  SynthSpec spec;
  spec.instances = 4;
  const auto model = make_linear_bow_model(generate(spec).linear);

  LineReader in;
  std::string line;
  int counter = 0;
  bool greeted = false;
  while (in.next(line)) {
    std::vector<json> pending{json::parse(line, nullptr, false)};
    if (f.reorder) {
      // Gather whatever else is already queued.
      while (in.has_line() || input_ready(50)) {
        if (!in.next(line)) break;
        pending.push_back(json::parse(line, nullptr, false));
      }
      std::reverse(pending.begin(), pending.end());
    }
    for (const auto& req : pending) {
      const bool hello = req.is_object() && req.value("type", std::string()) == "hello?";
      if (greeted && !hello) {
        if (f.crash) return 3;
        if (f.hang) {
          std::this_thread::sleep_for(std::chrono::seconds(20));
          return 0;
        }
      }
      greeted = greeted || hello;
      std::cout << answer(*model, f, req, counter).dump() << "\n";
    }
    std::cout.flush();
  }
  return 0;
}
