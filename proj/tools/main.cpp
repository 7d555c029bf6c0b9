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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "unieval/adapter.hpp"
#include "unieval/config.hpp"
#include "unieval/error.hpp"
#include "unieval/io.hpp"
#include "unieval/pipeline.hpp"
#include "unieval/selfcheck.hpp"
#include "unieval/synth.hpp"

namespace {

using namespace unieval;

// Run flags are kept as text and applied after the config file, so flags win.
struct RunFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_file, "key = value config file");
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  static const Flag flags[] = {
      {"--model", "model", "builtin:constant|linear|attention, adapter:stdio:<cmd>, adapter:http:<url>"},
      {"--models", "models_file", "model parameters written by synth (models.json)"},
      {"--data", "dataset", "dataset JSONL"},
      {"--out", "output", "output directory"},
      {"--attributions", "attributions", "directory with attribution files (default: --out)"},
      {"--methods", "methods", "comma list: shapley,kernel-shapley,attention,ig"},
      {"--properties", "properties", "comma list: faithfulness,agreement,simulatability,complexity"},
      {"--span-method", "span_method", "method whose SpanIntEx sets fix the budgets"},
      {"--seed", "seed", "master seed (required)"},
      {"--k-faith", "k_faith", "span steps K for faithfulness and agreement (default 3)"},
      {"--k-sim", "k_sim", "span step k for simulatability (default 1)"},
      {"--jobs", "jobs", "worker threads, 0 = all cores"},
      {"--matchers", "matchers", "interaction matchers: exact,overlap"},
      {"--insertion", "insertion", "simulatability insertion: none|symbol|text"},
      {"--ranking", "ranking", "signed|magnitude"},
      {"--complexity-original", "complexity_original", "entropy over all entries (true|false)"},
      {"--exact-cap", "exact_cap", "largest token count for exact Shapley"},
      {"--kernel-samples", "kernel_samples", "kernel SHAP coalition samples"},
      {"--permutations", "permutations", "bivariate permutations above the cap"},
      {"--ig-steps", "ig_steps", "integrated gradients steps"},
      {"--head", "head", "attention head index or auto"},
      {"--resolution", "resolution", "Louvain resolution"},
      {"--constant-probs", "constant_probs", "probabilities of builtin:constant"},
      {"--timeout", "timeout_s", "adapter timeout in seconds"},
      {"--window", "window", "adapter pipelining window"},
  };
  for (const auto& fl : flags) {
    cmd->add_option_function<std::string>(
        fl.name, [&f, key = std::string(fl.key)](const std::string& v) { f.values[key] = v; },
        fl.help);
  }
  cmd->add_option("--set", f.sets, "extra key=value settings");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig c;
  if (!f.config_file.empty()) {
    std::string text;
    try {
      text = read_file(f.config_file);
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
    apply_config_text(c, text, f.config_file);
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos, ErrorKind::kConfig, "--set expects key=value, got '" + s + "'");
    set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : f.values) set_config_value(c, k, v);
  return c;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "unieval: " << error_kind_name(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "unieval: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unieval: explanation generation and diagnostic evaluation for two-part inputs"};
  app.require_subcommand(1);
  int code = 0;

  // synth
  SynthSpec spec;
  std::string synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "generate the planted synthetic task and its models");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--instances", spec.instances);
  synth->add_option("--vocab", spec.vocab_size, "filler vocabulary size");
  synth->add_option("--m-min", spec.m_min);
  synth->add_option("--m-max", spec.m_max);
  synth->add_option("--n-min", spec.n_min);
  synth->add_option("--n-max", spec.n_max);
  synth->add_option("--pairs", spec.pairs, "planted head pairs");
  synth->add_option("--positive-rate", spec.positive_rate);
  synth->add_option("--decoy-rate", spec.decoy_rate);
  synth->add_option("--extra-pair-rate", spec.extra_pair_rate);
  synth->add_option("--noise", spec.noise, "label flip rate");
  synth->add_option("--head-weight", spec.head_weight);
  synth->add_option("--seed", spec.seed);
  synth->add_option("--mask", spec.mask_token);
  synth->callback([&] {
    code = guarded([&] {
      run_synth(spec, synth_out, std::cerr);
      return 0;
    });
  });

  RunFlags explain_flags, eval_flags;
  auto* explain = app.add_subcommand("explain", "write one attribution file per (method, kind)");
  add_run_flags(explain, explain_flags);
  explain->callback([&] {
    code = guarded([&] {
      const auto out = run_explain(build_config(explain_flags), std::cerr);
      for (const auto& f : out.files) std::cout << f.string() << "\n";
      std::cerr << out.predictions << " model predictions\n";
      return 0;
    });
  });

  auto* eval = app.add_subcommand("eval", "run the diagnostic properties on attribution files");
  add_run_flags(eval, eval_flags);
  eval->callback([&] {
    code = guarded([&] {
      const auto report = run_eval(build_config(eval_flags), std::cerr);
      std::cout << render_report(report.to_json());
      return 0;
    });
  });

  std::string report_path;
  auto* report = app.add_subcommand("report", "print a report.json as a table");
  report->add_option("report", report_path, "report.json")->required();
  report->callback([&] {
    code = guarded([&] {
      json j;
      try {
        j = json::parse(read_file(report_path));
      } catch (const json::exception& e) {
        fail(ErrorKind::kValidation, report_path + ": " + e.what());
      }
      std::cout << render_report(j);
      return 0;
    });
  });

  SelfcheckOptions sc;
  auto* selfcheck = app.add_subcommand("selfcheck", "oracle and invariant checks");
  selfcheck->add_option("--seed", sc.seed);
  selfcheck->add_flag("--corrupt-kernel-weights", sc.corrupt_kernel_weights,
                      "test hook: break kernel SHAP efficiency");
  selfcheck->callback([&] {
    code = guarded([&] {
      const auto r = run_selfcheck(sc);
      std::cout << r.summary();
      return r.passed() ? 0 : 1;
    });
  });

  std::string adapter_spec, probe_path;
  std::uint64_t probe_seed = 0;
  double adapter_timeout = 30.0;
  auto* check = app.add_subcommand("adapter-check", "run the conformance suite against an adapter");
  check->add_option("--adapter", adapter_spec, "stdio:<cmd> or http:<url>")->required();
  check->add_option("--data", probe_path, "probe dataset (default: synthetic probes)");
  check->add_option("--seed", probe_seed);
  check->add_option("--timeout", adapter_timeout, "seconds");
  check->callback([&] {
    code = guarded([&] {
      std::vector<Instance> probes;
      if (probe_path.empty()) {
        SynthSpec s;
        s.instances = 8;
        s.seed = probe_seed;
        for (auto& r : generate(s).records) probes.push_back(r.instance);
      } else {
        for (auto& r : load_dataset(probe_path)) probes.push_back(r.instance);
      }
      TransportOptions t;
      t.timeout = std::chrono::milliseconds(static_cast<long long>(adapter_timeout * 1000.0));
      std::unique_ptr<Transport> transport;
      if (adapter_spec.rfind("stdio:", 0) == 0) {
        transport = make_stdio_transport(adapter_spec.substr(6), t);
      } else if (adapter_spec.rfind("http:", 0) == 0) {
        std::string url = adapter_spec.rfind("http://", 0) == 0 ? adapter_spec : adapter_spec.substr(5);
        if (url.rfind("//", 0) == 0) url = "http:" + url;
        transport = make_http_transport(url, t);
      } else {
        fail(ErrorKind::kConfig, "adapter must be stdio:<cmd> or http:<url>");
      }
      AdapterClient client(std::move(transport));
      const auto r = check_conformance(client, probes, probe_seed);
      std::cout << r.to_json().dump(2) << "\n";
      return r.passed() ? 0 : 1;
    });
  });

  RunFlags serve_flags;
  std::string http_addr;
  auto* serve = app.add_subcommand("serve", "serve a builtin model over the adapter protocol");
  serve->add_option("--model", serve_flags.values["model"], "builtin:<name>")->required();
  serve->add_option("--models", serve_flags.values["models_file"], "models.json");
  serve->add_option("--constant-probs", serve_flags.values["constant_probs"]);
  serve->add_option("--http", http_addr, "host:port instead of stdin/stdout");
  serve->callback([&] {
    code = guarded([&] {
      RunConfig c;
      for (const auto& [k, v] : serve_flags.values) {
        if (!v.empty()) set_config_value(c, k, v);
      }
      require(c.model.rfind("builtin:", 0) == 0, ErrorKind::kConfig, "serve needs a builtin model");
      const auto model = load_model(c);
      if (http_addr.empty()) {
        std::ios::sync_with_stdio(false);
        serve_stream(*model, std::cin, std::cout);
        return 0;
      }
      const auto colon = http_addr.rfind(':');
      require(colon != std::string::npos, ErrorKind::kConfig, "--http expects host:port");
      HttpAdapterServer server(model);
      const int port = server.start(http_addr.substr(0, colon), std::stoi(http_addr.substr(colon + 1)));
      std::cerr << "listening on http://" << http_addr.substr(0, colon) << ":" << port << "\n";
      server.wait();
      return 0;
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code_for(ErrorKind::kConfig);
  }
  return code;
}
