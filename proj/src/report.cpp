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

#include "unieval/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "unieval/error.hpp"
#include "unieval/io.hpp"

namespace unieval {

using nlohmann::json;

namespace {

constexpr double kSlack = 1e-12;

void in_range(double v, double lo, double hi, const std::string& what) {
  require(std::isfinite(v) && v >= lo - kSlack && v <= hi + kSlack, ErrorKind::kNumeric,
          what + " = " + format_double(v) + " outside [" + format_double(lo) + ", " +
              format_double(hi) + "]");
}

std::string kind_str(ExplanationKind k) { return std::string(kind_name(k)); }

json skipped_json(const std::vector<SkippedInstance>& s) {
  json out = json::array();
  for (const auto& x : s) out.push_back({{"id", x.id}, {"reason", x.reason}});
  return out;
}

json entry(const std::string& method, ExplanationKind kind, const std::string& property,
           const std::string& metric, double score, double baseline, json budget,
           std::uint64_t seed) {
  return json{{"method", method},     {"kind", kind_str(kind)}, {"property", property},
              {"metric", metric},     {"score", score},         {"baseline", baseline},
              {"budget", std::move(budget)}, {"seed", seed}};
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    first = false;
    out += c;
  }
  return out + "\n";
}

std::string num(double v) { return format_double(v); }

}  // namespace

void DiagnosticReport::check_ranges() const {
  if (faithfulness) {
    in_range(faithfulness->random_comp, 0, 1, "random comprehensiveness");
    in_range(faithfulness->random_suff, 0, 1, "random sufficiency");
    for (const auto& s : faithfulness->methods) {
      in_range(s.comp, 0, 1, s.method + " comprehensiveness");
      in_range(s.suff, 0, 1, s.method + " sufficiency");
    }
  }
  for (const auto& level : agreement) {
    in_range(level.random_map, 0, 1, "random MAP");
    for (const auto& s : level.methods) in_range(s.map, 0, 1, s.method + " MAP");
  }
  if (simulatability) {
    for (const auto& s : simulatability->methods) {
      in_range(s.sf, 0, 1, s.method + " SF");
      in_range(s.rsf, -1, 1, s.method + " RSF");
    }
  }
  if (complexity && !complexity->original_form) {
    for (const auto& s : complexity->methods) {
      for (std::size_t i = 0; i < s.per_instance.size(); ++i) {
        in_range(s.per_instance[i], 0, std::log(static_cast<double>(complexity->k_x[i])),
                 s.method + " CL on " + complexity->ids[i]);
      }
    }
  }
}

json DiagnosticReport::to_json() const {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["dataset_id"] = meta.dataset_id;
  j["model_id"] = meta.model_id;
  j["config_hash"] = meta.config_hash;
  j["seed"] = meta.seed;
  j["methods"] = meta.methods;
  j["span_method"] = meta.span_method;
  json props = json::object();
  json entries = json::array();

  if (faithfulness) {
    const auto& f = *faithfulness;
    json methods = json::array();
    for (const auto& s : f.methods) {
      methods.push_back({{"method", s.method},       {"kind", kind_str(s.kind)},
                         {"comp", s.comp},           {"suff", s.suff},
                         {"overshoots", s.overshoots}, {"saturations", s.saturations}});
      const json budget{{"k_max", f.k_max}};
      entries.push_back(entry(s.method, s.kind, "faithfulness", "comp", s.comp, f.random_comp,
                              budget, f.seed));
      entries.push_back(entry(s.method, s.kind, "faithfulness", "suff", s.suff, f.random_suff,
                              budget, f.seed));
    }
    props["faithfulness"] = {{"k_max", f.k_max},
                             {"seed", f.seed},
                             {"n_instances", f.n_instances},
                             {"random", {{"comp", f.random_comp},
                                         {"suff", f.random_suff},
                                         {"sizes", f.random_sizes}}},
                             {"methods", methods},
                             {"skipped", skipped_json(f.skipped)}};
  }

  if (agreement_requested) {
    json levels = json::array();
    for (const auto& l : agreement) {
      json methods = json::array();
      for (const auto& s : l.methods) {
        methods.push_back({{"method", s.method},
                           {"kind", kind_str(s.kind)},
                           {"map", s.map},
                           {"n_instances", s.n_instances}});
        json e = entry(s.method, s.kind, "agreement", "map", s.map, l.random_map,
                       {{"level", l.level}, {"matcher", std::string(matcher_name(l.matcher))}},
                       meta.seed);
        entries.push_back(std::move(e));
      }
      levels.push_back({{"level", l.level},
                        {"matcher", std::string(matcher_name(l.matcher))},
                        {"n_instances", l.n_instances},
                        {"random_map", l.random_map},
                        {"methods", methods},
                        {"skipped", skipped_json(l.skipped)}});
    }
    props["agreement"] = {{"levels", levels}};
  }

  if (simulatability) {
    const auto& s = *simulatability;
    json methods = json::array();
    const json budget{{"k", s.k}, {"insertion", std::string(insertion_name(s.insertion))}};
    for (const auto& m : s.methods) {
      methods.push_back({{"method", m.method},
                         {"kind", kind_str(m.kind)},
                         {"sf", m.sf},
                         {"rsf", m.rsf},
                         {"best_epoch", m.trained.best_epoch},
                         {"dev_f1", m.trained.dev_f1}});
      entries.push_back(entry(m.method, m.kind, "simulatability", "sf", m.sf, s.sf_o, budget,
                              s.seed));
      entries.push_back(entry(m.method, m.kind, "simulatability", "rsf", m.rsf, 0.0, budget,
                              s.seed));
    }
    props["simulatability"] = {
        {"insertion", std::string(insertion_name(s.insertion))},
        {"k", s.k},
        {"seed", s.seed},
        {"sf_o", s.sf_o},
        {"splits", {{"train", s.train}, {"dev", s.dev}, {"test", s.test}}},
        {"baseline", {{"best_epoch", s.baseline.best_epoch}, {"dev_f1", s.baseline.dev_f1},
                      {"test_f1", s.baseline.test_f1}}},
        {"methods", methods}};
  }

  if (complexity) {
    const auto& c = *complexity;
    json methods = json::array();
    const json budget{{"k_x", c.original_form ? "all entries" : "span count"},
                      {"upper_bound", c.upper_bound}};
    for (const auto& m : c.methods) {
      methods.push_back({{"method", m.method},
                         {"kind", kind_str(m.kind)},
                         {"cl", m.cl},
                         {"saturations", m.saturations}});
      entries.push_back(entry(m.method, m.kind, "complexity", "cl", m.cl, c.random_ref, budget,
                              c.seed));
    }
    props["complexity"] = {{"seed", c.seed},
                           {"original_form", c.original_form},
                           {"n_instances", c.n_instances},
                           {"random_ref", c.random_ref},
                           {"upper_bound", c.upper_bound},
                           {"methods", methods},
                           {"skipped", skipped_json(c.skipped)}};
  }

  j["properties"] = props;
  j["entries"] = entries;
  j["notes"] = notes;
  return j;
}

std::string faithfulness_csv(const FaithfulnessResult& r) {
  std::string out = "method,kind,property,k_max,score,baseline,n_instances,seed\n";
  const auto k = std::to_string(r.k_max), n = std::to_string(r.n_instances),
             seed = std::to_string(r.seed);
  for (const auto& s : r.methods) {
    out += csv_row({s.method, kind_str(s.kind), "comp", k, num(s.comp), num(r.random_comp), n, seed});
    out += csv_row({s.method, kind_str(s.kind), "suff", k, num(s.suff), num(r.random_suff), n, seed});
  }
  return out;
}

std::string agreement_csv(const std::vector<LevelResult>& levels) {
  std::string out = "method,kind,level,matcher,MAP,baseline,n_instances\n";
  for (const auto& l : levels) {
    for (const auto& s : l.methods) {
      out += csv_row({s.method, kind_str(s.kind), l.level, std::string(matcher_name(l.matcher)),
                      num(s.map), num(l.random_map), std::to_string(s.n_instances)});
    }
  }
  return out;
}

std::string simulatability_csv(const SimulatabilityResult& r) {
  std::string out = "method,kind,insertion,SF,SF_O,RSF,k,seed\n";
  for (const auto& s : r.methods) {
    out += csv_row({s.method, kind_str(s.kind), std::string(insertion_name(r.insertion)),
                    num(s.sf), num(r.sf_o), num(s.rsf), std::to_string(r.k),
                    std::to_string(r.seed)});
  }
  return out;
}

std::string complexity_csv(const ComplexityResult& r) {
  std::string out = "method,kind,CL,random_ref,upper_bound,n_instances,seed\n";
  for (const auto& s : r.methods) {
    out += csv_row({s.method, kind_str(s.kind), num(s.cl), num(r.random_ref), num(r.upper_bound),
                    std::to_string(r.n_instances), std::to_string(r.seed)});
  }
  return out;
}

std::string radar_csv(const DiagnosticReport& report) {
  std::string out = "method,kind,axis,raw,normalized\n";
  auto row = [&](const std::string& m, ExplanationKind k, const std::string& axis, double raw,
                 double norm) {
    out += csv_row({m, kind_str(k), axis, num(raw), num(norm)});
  };
  if (report.faithfulness) {
    for (const auto& s : report.faithfulness->methods) {
      row(s.method, s.kind, "comprehensiveness", s.comp, s.comp);
      row(s.method, s.kind, "sufficiency", s.suff, s.suff);
    }
  }
  for (const auto& l : report.agreement) {
    for (const auto& s : l.methods) {
      row(s.method, s.kind, "agreement-" + l.level + "-" + std::string(matcher_name(l.matcher)),
          s.map, s.map);
    }
  }
  if (report.simulatability) {
    for (const auto& s : report.simulatability->methods) {
      row(s.method, s.kind, "simulatability", s.rsf, (s.rsf + 1.0) / 2.0);
    }
  }
  if (report.complexity) {
    const double ub = report.complexity->upper_bound;
    for (const auto& s : report.complexity->methods) {
      row(s.method, s.kind, "complexity", s.cl, ub > 0.0 ? 1.0 - s.cl / ub : 1.0);
    }
  }
  return out;
}

std::string render_report(const json& report) {
  std::ostringstream os;
  os << "dataset " << report.value("dataset_id", std::string("?")) << "  model "
     << report.value("model_id", std::string("?")) << "  config "
     << report.value("config_hash", std::string("?")) << "\n";
  if (!report.contains("entries")) return os.str();
  os << std::left << std::setw(16) << "method" << std::setw(12) << "kind" << std::setw(16)
     << "property" << std::setw(8) << "metric" << std::setw(22) << "variant" << std::right
     << std::setw(10) << "score" << std::setw(10) << "baseline"
     << "\n";
  for (const auto& e : report["entries"]) {
    std::string variant;
    if (e["property"] == "agreement") {
      variant = e["budget"]["level"].get<std::string>() + "/" +
                e["budget"]["matcher"].get<std::string>();
    }
    os << std::left << std::setw(16) << e["method"].get<std::string>() << std::setw(12)
       << e["kind"].get<std::string>() << std::setw(16) << e["property"].get<std::string>()
       << std::setw(8) << e["metric"].get<std::string>() << std::setw(22) << variant
       << std::right << std::fixed << std::setprecision(4) << std::setw(10)
       << e["score"].get<double>() << std::setw(10) << e["baseline"].get<double>() << "\n";
  }
  return os.str();
}

}  // namespace unieval
