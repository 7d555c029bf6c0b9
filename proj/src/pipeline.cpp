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

#include "unieval/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ostream>

#include "unieval/adapter.hpp"
#include "unieval/attribution.hpp"
#include "unieval/error.hpp"
#include "unieval/rng.hpp"
#include "unieval/toy_models.hpp"

namespace unieval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_models_file(const RunConfig& c, const std::string& which) {
  require(!c.models_file.empty(), ErrorKind::kConfig,
          "builtin:" + which + " needs models_file (written by `unieval synth`)");
  json j;
  try {
    j = json::parse(read_file(c.models_file));
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, c.models_file + ": " + e.what());
  }
  require(j.contains(which), ErrorKind::kConfig,
          c.models_file + " has no '" + which + "' entry");
  return j[which];
}

std::string dataset_id(const std::string& path) { return fs::path(path).stem().string(); }

json seeds_json(std::uint64_t seed) {
  return json{{"master", seed},
              {"explain", split_seed(seed, seed_stream::kExplain)},
              {"faithfulness", split_seed(seed, seed_stream::kFaithfulness)},
              {"agreement", split_seed(seed, seed_stream::kAgreement)},
              {"simulatability", split_seed(seed, seed_stream::kSimulatability)},
              {"complexity", split_seed(seed, seed_stream::kComplexity)}};
}

json file_list(const fs::path& dir, const std::vector<fs::path>& files) {
  json out = json::array();
  for (const auto& f : files) {
    out.push_back({{"file", fs::relative(f, dir).generic_string()},
                   {"fnv1a", fnv1a_hex(read_file(f))}});
  }
  return out;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

std::vector<Instance> instances_of(const std::vector<Record>& records) {
  std::vector<Instance> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.instance);
  return out;
}

MethodOptions method_options(const RunConfig& c, const ModelPtr& model,
                             const std::vector<Instance>& data, std::ostream& log) {
  MethodOptions o;
  o.exact_cap = c.exact_cap;
  o.kernel_samples = c.kernel_samples;
  o.permutations = c.permutations;
  o.ig_steps = c.ig_steps;
  o.resolution = c.resolution;
  o.rule = c.ranking == "magnitude" ? RankingRule::kMagnitude : RankingRule::kSigned;
  o.seed = split_seed(c.require_seed(), seed_stream::kExplain);
  if (c.head == "auto") {
    const bool wants = std::find(c.methods.begin(), c.methods.end(), "attention") != c.methods.end();
    if (wants && model->capabilities().attention && !data.empty()) {
      const int heads = static_cast<int>(model->attention(data.front().tokens()).heads.size());
      std::vector<int> all(static_cast<std::size_t>(heads));
      for (int h = 0; h < heads; ++h) all[static_cast<std::size_t>(h)] = h;
      const std::size_t n = std::min<std::size_t>(data.size(), 50);
      const std::vector<Instance> calib(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n));
      o.head = select_head(*model, calib, all);
      log << "attention head " << o.head << " selected on " << n << " instances\n";
    }
  } else {
    o.head = std::stoi(c.head);
  }
  return o;
}

}  // namespace

void apply_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

ModelPtr load_model(const RunConfig& c) {
  const std::string& spec = c.model;
  require(!spec.empty(), ErrorKind::kConfig, "no model given (--model)");
  if (spec == "builtin:constant") return make_constant_model(c.constant_probs);
  if (spec == "builtin:linear") {
    return make_linear_bow_model(linear_params_from_json(load_models_file(c, "linear")));
  }
  if (spec == "builtin:attention") {
    return make_toy_attention_model(attention_params_from_json(load_models_file(c, "attention")));
  }
  if (spec.rfind("adapter:", 0) == 0) {
    TransportOptions t;
    t.window = c.window;
    t.timeout = std::chrono::milliseconds(static_cast<long long>(c.timeout_s * 1000.0));
    return connect_adapter(spec.substr(8), t);
  }
  fail(ErrorKind::kConfig, "unknown model spec '" + spec +
                               "' (builtin:constant|linear|attention, adapter:stdio:<cmd>, "
                               "adapter:http:<url>)");
}

std::string attribution_filename(const std::string& method, ExplanationKind kind) {
  return method + "." + std::string(kind_name(kind)) + ".jsonl";
}

void run_synth(const SynthSpec& spec, const fs::path& dir, std::ostream& log) {
  const auto out = generate(spec);
  fs::create_directories(dir);
  write_dataset(dir / "data.jsonl", out.records);
  write_json(dir / "models.json", out.models_json());
  int positives = 0;
  for (int c : out.clean_labels) positives += c;
  json manifest{{"command", "synth"},
                {"seed", spec.seed},
                {"spec",
                 {{"instances", spec.instances},
                  {"vocab_size", spec.vocab_size},
                  {"m", {spec.m_min, spec.m_max}},
                  {"n", {spec.n_min, spec.n_max}},
                  {"pairs", spec.pairs},
                  {"positive_rate", spec.positive_rate},
                  {"decoy_rate", spec.decoy_rate},
                  {"extra_pair_rate", spec.extra_pair_rate},
                  {"noise", spec.noise},
                  {"head_weight", spec.head_weight},
                  {"mask_token", spec.mask_token}}},
                {"files", file_list(dir, {dir / "data.jsonl", dir / "models.json"})}};
  manifest["config_hash"] = fnv1a_hex(manifest["spec"].dump() + std::to_string(spec.seed));
  write_json(dir / "synth.manifest.json", manifest);
  log << "wrote " << out.records.size() << " instances (" << positives
      << " clean positives) to " << dir.string() << "\n";
}

ExplainOutput run_explain(const RunConfig& c, std::ostream& log) {
  c.validate();
  const std::uint64_t seed = c.require_seed();
  require(!c.dataset.empty(), ErrorKind::kConfig, "no dataset given (--data)");
  apply_jobs(c.jobs);
  const auto records = load_dataset(c.dataset);
  const auto data = instances_of(records);
  const auto model = load_model(c);
  for (const auto& x : data) x.validate(model->num_classes());
  for (const auto& m : c.methods) check_method_capability(m, *model);

  const fs::path dir = c.attributions.empty() ? fs::path(c.output) : fs::path(c.attributions);
  fs::create_directories(dir);
  const auto options = method_options(c, model, data, log);
  ExplainOutput out;
  for (const auto& method : c.methods) {
    const auto before = model->prediction_count();
    const auto t0 = std::chrono::steady_clock::now();
    const auto sets = explain_dataset(method, model, data, options);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto calls = model->prediction_count() - before;
    out.predictions += calls;
    for (const auto& ms : sets) {
      std::vector<AttributionSet> ordered;
      ordered.reserve(data.size());
      for (const auto& x : data) ordered.push_back(ms.at(x.id));
      const auto path = dir / attribution_filename(method, ms.kind);
      write_attributions(path, ordered);
      out.files.push_back(path);
    }
    log << method << ": " << data.size() << " instances, " << calls << " predictions, "
        << secs << " s\n";
  }
  json manifest{{"command", "explain"},
                {"config_hash", config_hash(c)},
                {"seeds", seeds_json(seed)},
                {"model_id", model->id()},
                {"dataset_id", dataset_id(c.dataset)},
                {"head", options.head},
                {"config", c.canonical()},
                {"files", file_list(dir, out.files)}};
  write_json(dir / "explain.manifest.json", manifest);
  return out;
}

DiagnosticReport run_eval(const RunConfig& c, std::ostream& log) {
  c.validate();
  const std::uint64_t seed = c.require_seed();
  require(!c.dataset.empty(), ErrorKind::kConfig, "no dataset given (--data)");
  apply_jobs(c.jobs);
  const auto records = load_dataset(c.dataset);
  const auto data = instances_of(records);
  const fs::path attr_dir = c.attributions.empty() ? fs::path(c.output) : fs::path(c.attributions);

  // Span budget source.
  std::string span_method = c.span_method;
  if (span_method.empty()) {
    for (const auto& m : c.methods) {
      const auto k = method_kinds(m);
      if (std::find(k.begin(), k.end(), ExplanationKind::kSpanPair) != k.end()) {
        span_method = m;
        break;
      }
    }
  }
  require(!span_method.empty(), ErrorKind::kConfig,
          "no method produces SpanIntEx sets, so there is no budget source; add shapley or "
          "attention to methods or set span_method");

  std::vector<std::string> wanted = c.methods;
  if (std::find(wanted.begin(), wanted.end(), span_method) == wanted.end()) {
    wanted.push_back(span_method);
  }
  std::vector<std::string> missing;
  for (const auto& m : wanted) {
    for (auto k : method_kinds(m)) {
      if (!fs::exists(attr_dir / attribution_filename(m, k))) {
        missing.push_back(attribution_filename(m, k));
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& f : missing) list += "\n  " + f;
    fail(ErrorKind::kConfig, "missing attribution files in " + attr_dir.string() +
                                 "; run `unieval explain` with methods " + [&] {
                                   std::string s;
                                   for (const auto& m : wanted) s += (s.empty() ? "" : ",") + m;
                                   return s;
                                 }() + " to produce:" + list);
  }

  std::vector<MethodSets> methods;
  MethodSets span_source;
  for (const auto& m : wanted) {
    const bool listed = std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
    for (auto k : method_kinds(m)) {
      MethodSets ms;
      ms.method = m;
      ms.kind = k;
      ms.sets = by_instance(load_attributions(attr_dir / attribution_filename(m, k)));
      for (const auto& x : data) {
        require(ms.has(x.id), ErrorKind::kValidation,
                attribution_filename(m, k) + " has no set for instance '" + x.id + "'");
        for (const auto& e : ms.at(x.id).entries) e.unit.validate(x.m(), x.n());
      }
      if (m == span_method && k == ExplanationKind::kSpanPair) span_source = ms;
      if (listed) methods.push_back(std::move(ms));
    }
  }

  auto wants = [&](const std::string& p) {
    return std::find(c.properties.begin(), c.properties.end(), p) != c.properties.end();
  };
  ModelPtr model;
  if (wants("faithfulness") || wants("simulatability")) model = load_model(c);

  DiagnosticReport report;
  report.meta.dataset_id = dataset_id(c.dataset);
  report.meta.model_id = model ? model->id() : c.model;
  report.meta.config_hash = config_hash(c);
  report.meta.seed = seed;
  report.meta.methods = c.methods;
  report.meta.span_method = span_method;

  const fs::path out_dir(c.output);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(out_dir / name, content);
    written.push_back(out_dir / name);
  };

  if (wants("faithfulness")) {
    FaithfulnessOptions o;
    o.k_max = c.k_faith;
    o.seed = split_seed(seed, seed_stream::kFaithfulness);
    report.faithfulness = unified_faithfulness(*model, data, methods, span_source, o);
    emit("faithfulness.csv", faithfulness_csv(*report.faithfulness));
    log << "faithfulness: " << report.faithfulness->n_instances << " instances, "
        << report.faithfulness->skipped.size() << " skipped\n";
  }

  if (wants("agreement")) {
    report.agreement_requested = true;
    std::map<std::string, GoldAnnotation> golds;
    for (const auto& r : records) {
      if (r.gold) golds[r.instance.id] = *r.gold;
    }
    std::vector<MethodSets> interaction;
    for (const auto& ms : methods) {
      if (ms.kind != ExplanationKind::kToken) interaction.push_back(ms);
    }
    for (const auto& name : c.matchers) {
      AgreementOptions o;
      o.k_max = c.k_faith;
      o.matcher = parse_matcher(name);
      o.seed = split_seed(seed, seed_stream::kAgreement);
      try {
        report.agreement.push_back(map_token_level(data, golds, methods, span_source, o));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerate) throw;
        report.notes.push_back(std::string("agreement/token/") + name + ": " + e.what());
      }
      if (interaction.empty()) continue;
      try {
        report.agreement.push_back(map_interaction_level(data, golds, interaction, span_source, o));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerate) throw;
        report.notes.push_back(std::string("agreement/interaction/") + name + ": " + e.what());
      }
    }
    emit("agreement.csv", agreement_csv(report.agreement));
    log << "agreement: " << report.agreement.size() << " level/matcher blocks\n";
  }

  if (wants("simulatability")) {
    SimulatabilityOptions o;
    o.k = c.k_sim;
    o.insertion = parse_insertion(c.insertion);
    o.seed = split_seed(seed, seed_stream::kSimulatability);
    report.simulatability = unified_simulatability(*model, data, methods, span_source, o);
    emit("simulatability.csv", simulatability_csv(*report.simulatability));
    fs::create_directories(out_dir / "agents");
    emit("agents/baseline.json", report.simulatability->baseline.agent.to_json().dump(1) + "\n");
    for (const auto& s : report.simulatability->methods) {
      emit("agents/" + s.method + "." + std::string(kind_name(s.kind)) + ".json",
           s.trained.agent.to_json().dump(1) + "\n");
    }
    log << "simulatability: SF_O " << report.simulatability->sf_o << "\n";
  }

  if (wants("complexity")) {
    ComplexityOptions o;
    o.seed = split_seed(seed, seed_stream::kComplexity);
    o.original_form = c.complexity_original;
    report.complexity = dataset_complexity(data, methods, span_source, o);
    emit("complexity.csv", complexity_csv(*report.complexity));
    log << "complexity: " << report.complexity->n_instances << " instances\n";
  }

  report.check_ranges();
  emit("report.json", report.to_json().dump(2) + "\n");
  emit("radar.csv", radar_csv(report));
  json manifest{{"command", "eval"},
                {"config_hash", report.meta.config_hash},
                {"seeds", seeds_json(seed)},
                {"config", c.canonical()},
                {"files", file_list(out_dir, written)}};
  write_json(out_dir / "eval.manifest.json", manifest);
  return report;
}

}  // namespace unieval
