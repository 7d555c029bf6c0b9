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

#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "unieval/adapter.hpp"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/faithfulness.hpp"
#include "unieval/synth.hpp"

using namespace unieval;

namespace {

const std::string kFake = FAKE_ADAPTER_PATH;
const std::string kCli = UNIEVAL_CLI_PATH;

struct Planted {
  SynthOutput out;
  std::vector<Instance> data;
  Planted() {
    SynthSpec s;
    s.instances = 4;  // same parameters as the fake adapter's model
    out = generate(s);
    SynthSpec more;
    more.instances = 30;
    more.seed = s.seed;
    for (auto& r : generate(more).records) data.push_back(r.instance);
  }
};

const Planted& planted() {
  static const Planted p;
  return p;
}

TransportOptions quick(int ms = 5000) {
  TransportOptions t;
  t.timeout = std::chrono::milliseconds(ms);
  return t;
}

const ConformanceCheck& check_named(const ConformanceReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return c;
  }
  FAIL("no check named " << name);
  return r.checks.front();
}

ConformanceReport run_fake(const std::string& flags) {
  AdapterClient client(make_stdio_transport(kFake + " " + flags, quick()));
  return check_conformance(client, planted().data, 3);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kContract;
}

}  // namespace

TEST_CASE("hello validation names the field") {
  ModelInfo info;
  json good = hello_reply(info);
  CHECK(parse_hello(good).mask_token == "[MASK]");
  for (const std::string field : {"mask_token", "classes", "capabilities", "version"}) {
    json bad = good;
    bad.erase(field);
    try {
      parse_hello(bad);
      FAIL("accepted hello without " << field);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kProtocol);
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  }
  json old = good;
  old["version"] = 99;
  try {
    parse_hello(old);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("version mismatch") != std::string::npos);
  }
  json noPredict = good;
  noPredict["capabilities"] = json::array({"grad_dot"});
  CHECK(kind_of([&] { parse_hello(noPredict); }) == ErrorKind::kProtocol);
}

TEST_CASE("handle_request never throws") {
  const auto model = make_linear_bow_model(planted().out.linear);
  CHECK(handle_request(*model, json("nonsense"))["type"] == "error");
  CHECK(handle_request(*model, json{{"type", "predict"}, {"id", 1}})["code"] == error_code::kInvalid);
  CHECK(handle_request(*model, json{{"type", "attention"}, {"id", 2}, {"tokens", {"a"}}})["code"] ==
        error_code::kUnsupported);
  CHECK(handle_request(*model, json{{"type", "frobnicate"}, {"id", 3}})["code"] == error_code::kUnknownType);
}

TEST_CASE("loopback with reversed replies keeps results in order") {
  const ModelPtr model = make_linear_bow_model(planted().out.linear);
  TransportOptions t;
  t.window = 7;
  auto remote = std::make_shared<AdapterModel>(
      std::make_shared<AdapterClient>(make_loopback_transport(model, true, t)), "loop");
  std::vector<TokenSeq> batch;
  for (const auto& x : planted().data) batch.push_back(x.tokens());
  const auto a = model->predict_batch(batch);
  const auto b = remote->predict_batch(batch);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].probs == b[i].probs);
  const auto& x = planted().data[0];
  CHECK(remote->grad_dot(x.tokens(), all_mask(x, "[MASK]"), 0.5, 1) ==
        model->grad_dot(x.tokens(), all_mask(x, "[MASK]"), 0.5, 1));
  CHECK(kind_of([&] { remote->attention(x.tokens()); }) == ErrorKind::kCapability);
}

TEST_CASE("loopback explanations and faithfulness equal in-process ones") {
  const ModelPtr model = make_linear_bow_model(planted().out.linear);
  auto remote = std::make_shared<AdapterModel>(
      std::make_shared<AdapterClient>(make_loopback_transport(model, true)), "loop");
  std::vector<Instance> few(planted().data.begin(), planted().data.begin() + 6);
  MethodOptions o;
  o.seed = 9;
  const auto a = explain_dataset("shapley", model, few, o);
  const auto b = explain_dataset("shapley", remote, few, o);
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (const auto& x : few) {
      const auto& ea = a[k].at(x.id).entries;
      const auto& eb = b[k].at(x.id).entries;
      REQUIRE(ea.size() == eb.size());
      for (std::size_t e = 0; e < ea.size(); ++e) CHECK(std::fabs(ea[e].score - eb[e].score) <= 1e-9);
    }
  }
  FaithfulnessOptions fo;
  fo.seed = 2;
  const auto fa = unified_faithfulness(*model, few, {a[0]}, a[2], fo);
  const auto fb = unified_faithfulness(*remote, few, {b[0]}, b[2], fo);
  CHECK(fa.methods[0].comp == fb.methods[0].comp);
  CHECK(fa.random_suff == fb.random_suff);
}

TEST_CASE("well-behaved stdio adapter passes conformance") {
  const auto r = run_fake("");
  CHECK(r.passed());
  CHECK(check_named(r, "grad_dot").passed);
  CHECK(check_named(r, "attention").skipped);
  CHECK(check_named(r, "capability-gating").passed);
}

TEST_CASE("builtin model served over stdio passes conformance") {
  AdapterClient client(make_stdio_transport(kCli + " serve --model builtin:constant", quick()));
  const auto r = check_conformance(client, planted().data, 1);
  CHECK(r.passed());
}

TEST_CASE("out-of-order replies are matched by id") {
  const auto r = run_fake("--reorder");
  CHECK(r.passed());
  auto remote = connect_adapter("stdio:" + kFake + " --reorder", quick());
  const auto model = make_linear_bow_model(planted().out.linear);
  std::vector<TokenSeq> seqs;
  for (const auto& x : planted().data) seqs.push_back(x.tokens());
  for (std::size_t i = 0; i < 5; ++i) CHECK(remote->predict(seqs[i]).probs == model->predict(seqs[i]).probs);
}

TEST_CASE("conformance catches each planted fault") {
  CHECK(!check_named(run_fake("--unnormalized"), "normalization").passed);
  CHECK(!check_named(run_fake("--nondeterministic"), "determinism").passed);
  CHECK(!check_named(run_fake("--capabilities predict --leaky-gating"), "capability-gating").passed);
  CHECK(check_named(run_fake("--capabilities predict"), "capability-gating").passed);
  const auto bad = run_fake("--bad-hello");
  CHECK(!bad.passed());
  CHECK(check_named(bad, "handshake").detail.find("mask_token") != std::string::npos);
  const auto version = run_fake("--version 2");
  CHECK(check_named(version, "handshake").detail.find("version") != std::string::npos);
}

TEST_CASE("adapter model maps failures onto error kinds") {
  auto unnormalized = connect_adapter("stdio:" + kFake + " --unnormalized", quick());
  CHECK(kind_of([&] { unnormalized->predict({"a"}); }) == ErrorKind::kProtocol);

  auto gated = connect_adapter("stdio:" + kFake + " --capabilities predict", quick());
  CHECK(!gated->capabilities().grad_dot);
  CHECK(kind_of([&] { check_method_capability("ig", *gated); }) == ErrorKind::kCapability);

  auto crash = connect_adapter("stdio:" + kFake + " --crash", quick());
  CHECK(kind_of([&] { crash->predict({"a"}); }) == ErrorKind::kTransport);

  auto hang = connect_adapter("stdio:" + kFake + " --hang", quick(300));
  CHECK(kind_of([&] { hang->predict({"a"}); }) == ErrorKind::kTransport);

  CHECK(kind_of([&] { connect_adapter("stdio:/nonexistent/adapter", quick(2000))->predict({"a"}); }) ==
        ErrorKind::kTransport);
  CHECK(kind_of([] { connect_adapter("ftp://x"); }) == ErrorKind::kConfig);
}

TEST_CASE("http transport against the in-process server") {
  const ModelPtr model = make_toy_attention_model({"a", "b", "c"}, "[MASK]", 5);
  HttpAdapterServer server(model);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  AdapterClient client(make_http_transport("http://127.0.0.1:" + std::to_string(port), quick()));
  std::vector<Instance> probes;
  Rng rng(4);
  for (int i = 0; i < 3; ++i) probes.push_back(testing::random_instance(rng, {"a", "b", "c"}, 2, 3));
  const auto r = check_conformance(client, probes, 8);
  CHECK(r.passed());
  CHECK(check_named(r, "attention").passed);
  CHECK(check_named(r, "grad_dot").passed);

  auto remote = connect_adapter("http://127.0.0.1:" + std::to_string(port), quick());
  const auto& x = probes[0];
  CHECK(remote->predict(x.tokens()).probs == model->predict(x.tokens()).probs);
  const auto ma = model->attention(x.tokens());
  const auto mb = remote->attention(x.tokens());
  CHECK(ma.alignment == mb.alignment);
  CHECK(ma.heads[1].data == mb.heads[1].data);
  server.stop();
}
