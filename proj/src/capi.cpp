// Copyright 2026 The LanePerf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "laneperf/laneperf.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "core.hpp"
#include "estimators.hpp"
#include "harness.hpp"
#include "lane_eval.hpp"
#include "laneperf_model.hpp"
#include "synth_gen.hpp"

using namespace laneperf;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

thread_local std::string g_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs `fn` and maps exceptions onto status codes.
template <typename Fn>
lp_status guarded(Fn&& fn) {
  try {
    g_error.clear();
    return fn();
  } catch (const DataError& e) {
    g_error = e.what();
    return LP_ERR_DATA;
  } catch (const std::invalid_argument& e) {
    g_error = e.what();
    return LP_ERR_USAGE;
  } catch (const std::exception& e) {
    g_error = e.what();
    return LP_ERR_INTERNAL;
  }
}

std::vector<std::string> split_methods(const char* csv) {
  if (csv == nullptr || *csv == '\0') return kAllMethods;
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(kAllMethods.begin(), kAllMethods.end(), item) == kAllMethods.end())
      throw std::invalid_argument("unknown method '" + item + "'");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("no methods requested");
  return out;
}

std::unique_ptr<ImageEmbedder> make_embedder(const char* kind, const Manifest& m) {
  std::string k = kind == nullptr ? "precomputed" : kind;
  if (k == "builtin") return std::make_unique<BuiltinEmbedder>(m.base_dir);
  if (k == "precomputed") return std::make_unique<PrecomputedEmbedder>(m.d_img);
  throw std::invalid_argument("unknown embedder '" + k + "' (builtin|precomputed)");
}

}  // namespace

struct lp_manifest {
  Manifest m;
  std::string fingerprint;
};

struct lp_corpus {
  std::vector<MiniDataset> sets;

  std::vector<const MiniDataset*> with_role(const char* role) const {
    std::vector<const MiniDataset*> out;
    for (const auto& d : sets)
      if (role == nullptr || std::string(role) == role_name(d.role))
        out.push_back(&d);
    return out;
  }
};

struct lp_bundle {
  CalibrationBundle bundle;
};

extern "C" {

const char* lp_error_message(void) { return g_error.c_str(); }

void lp_string_free(char* s) { std::free(s); }

lp_status lp_manifest_open(const char* path, lp_manifest** out) {
  return guarded([&]() -> lp_status {
    if (path == nullptr || out == nullptr)
      throw std::invalid_argument("lp_manifest_open: null argument");
    auto h = std::make_unique<lp_manifest>();
    h->m = parse_manifest(path);
    h->fingerprint = manifest_fingerprint(h->m);
    *out = h.release();
    return LP_OK;
  });
}

void lp_manifest_close(lp_manifest* m) { delete m; }

const char* lp_manifest_fingerprint(const lp_manifest* m) {
  return m == nullptr ? "" : m->fingerprint.c_str();
}

lp_status lp_corpus_load(const lp_manifest* m, int minidataset_size_override,
                         lp_corpus** out) {
  return guarded([&]() -> lp_status {
    if (m == nullptr || out == nullptr)
      throw std::invalid_argument("lp_corpus_load: null argument");
    auto h = std::make_unique<lp_corpus>();
    h->sets = load_corpus(m->m, minidataset_size_override);
    *out = h.release();
    return LP_OK;
  });
}

void lp_corpus_close(lp_corpus* c) { delete c; }

int lp_corpus_count(const lp_corpus* c, const char* role) {
  if (c == nullptr) return 0;
  try {
    return static_cast<int>(c->with_role(role).size());
  } catch (...) {
    return 0;
  }
}

const char* lp_corpus_dataset_id(const lp_corpus* c, const char* role, int index) {
  if (c == nullptr || index < 0) return nullptr;
  auto sel = c->with_role(role);
  if (index >= static_cast<int>(sel.size())) return nullptr;
  return sel[static_cast<size_t>(index)]->dataset_id.c_str();
}

lp_status lp_eval_f1(const lp_manifest* m, const lp_corpus* c, const char* role,
                     int index, double* precision, double* recall, double* f1) {
  return guarded([&]() -> lp_status {
    if (m == nullptr || c == nullptr)
      throw std::invalid_argument("lp_eval_f1: null argument");
    auto sel = c->with_role(role);
    if (index < 0 || index >= static_cast<int>(sel.size()))
      throw std::invalid_argument("lp_eval_f1: index out of range");
    F1Stats s = dataset_f1(*sel[static_cast<size_t>(index)], m->m);
    if (precision) *precision = s.precision;
    if (recall) *recall = s.recall;
    if (f1) *f1 = s.f1;
    return LP_OK;
  });
}

lp_status lp_calibrate(const lp_manifest* m, const lp_corpus* c,
                       const char* methods_csv, const char* embedder,
                       uint64_t seed, const char* out_dir,
                       char** report_json_out) {
  return guarded([&]() -> lp_status {
    if (m == nullptr || c == nullptr || out_dir == nullptr)
      throw std::invalid_argument("lp_calibrate: null argument");
    auto methods = split_methods(methods_csv);
    auto emb = make_embedder(embedder, m->m);

    std::vector<MiniDataset> val_sets;
    std::vector<std::vector<double>> reference;
    for (const auto& d : c->sets) {
      if (d.role == SegmentRole::kSourceVal) val_sets.push_back(d);
      if (d.role == SegmentRole::kSourceTrainRef)
        for (auto& f : collect_features(d)) reference.push_back(std::move(f));
    }
    if (val_sets.empty())
      throw DataError("no source_val mini-datasets in the corpus");

    TrainConfig cfg;
    cfg.seed = seed;
    CalibrationBundle bundle =
        calibrate_all(val_sets, reference, *emb, cfg, m->m, methods);

    fs::create_directories(out_dir);
    json report;
    report["calibrated"] = json::array();
    for (const auto& [name, artifact] : bundle.artifacts) {
      std::string path = (fs::path(out_dir) / (name + ".artifact.json")).string();
      atomic_write(path, artifact_to_text(artifact));
      report["calibrated"].push_back(name);
    }
    if (bundle.weights) {
      std::string path = (fs::path(out_dir) / "laneperf.weights.json").string();
      atomic_write(path, weights_to_text(*bundle.weights, cfg, m->fingerprint));
      report["calibrated"].push_back("laneperf");
    }
    if (std::find(methods.begin(), methods.end(), "ac") != methods.end())
      report["notes"]["ac"] = "calibration-free; no artifact written";
    json failures = json::object();
    for (const auto& [name, reason] : bundle.failures) failures[name] = reason;
    report["failures"] = std::move(failures);
    if (report_json_out) *report_json_out = dup_string(report.dump(2) + "\n");
    return bundle.failures.empty() ? LP_OK : LP_ERR_PARTIAL;
  });
}

lp_status lp_bundle_open(const char* dir, const lp_manifest* m,
                         const char* methods_csv, lp_bundle** out) {
  return guarded([&]() -> lp_status {
    if (dir == nullptr || m == nullptr || out == nullptr)
      throw std::invalid_argument("lp_bundle_open: null argument");
    auto methods = split_methods(methods_csv);
    auto h = std::make_unique<lp_bundle>();
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p);
      if (!in) throw DataError("artifact file not found: " + p.string());
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    for (const auto& name : methods) {
      if (name == "ac") continue;
      if (name == "laneperf") {
        h->bundle.weights = weights_from_text(
            slurp(fs::path(dir) / "laneperf.weights.json"), m->m);
        continue;
      }
      CalibrationArtifact a =
          artifact_from_text(slurp(fs::path(dir) / (name + ".artifact.json")));
      check_artifact(a, name, m->m);
      h->bundle.artifacts.emplace(name, std::move(a));
    }
    *out = h.release();
    return LP_OK;
  });
}

void lp_bundle_close(lp_bundle* b) { delete b; }

lp_status lp_estimate(const lp_manifest* m, const lp_corpus* c,
                      const lp_bundle* b, const char* method, const char* role,
                      int index, const char* embedder, double* out) {
  return guarded([&]() -> lp_status {
    if (m == nullptr || c == nullptr || method == nullptr || out == nullptr)
      throw std::invalid_argument("lp_estimate: null argument");
    if (b == nullptr && std::string(method) != "ac")
      throw std::invalid_argument("lp_estimate: method needs calibration artifacts");
    auto sel = c->with_role(role);
    if (index < 0 || index >= static_cast<int>(sel.size()))
      throw std::invalid_argument("lp_estimate: index out of range");
    auto emb = make_embedder(embedder, m->m);
    static const CalibrationBundle empty_bundle;
    const CalibrationBundle& bundle = b ? b->bundle : empty_bundle;
    *out = estimate_with_method(method, *sel[static_cast<size_t>(index)], bundle,
                                *emb, m->m);
    return LP_OK;
  });
}

lp_status lp_benchmark(const lp_manifest* m, const lp_corpus* c,
                       const lp_bundle* b, const char* methods_csv,
                       const char* embedder, char** csv_out, char** table_out) {
  return guarded([&]() -> lp_status {
    if (m == nullptr || c == nullptr || b == nullptr)
      throw std::invalid_argument("lp_benchmark: null argument");
    auto methods = split_methods(methods_csv);
    auto emb = make_embedder(embedder, m->m);
    std::vector<MiniDataset> targets;
    for (const auto& d : c->sets)
      if (d.role == SegmentRole::kTarget) targets.push_back(d);
    if (targets.empty()) throw DataError("no target mini-datasets in the corpus");
    EvalReport report = run_benchmark(targets, b->bundle, *emb, m->m, methods);
    if (csv_out) *csv_out = dup_string(report_to_csv(report));
    if (table_out) *table_out = dup_string(report_to_table(report));
    return report.failures.empty() ? LP_OK : LP_ERR_PARTIAL;
  });
}

lp_status lp_synth_generate(const char* config_json, const char* out_dir) {
  return guarded([&]() -> lp_status {
    if (config_json == nullptr || out_dir == nullptr)
      throw std::invalid_argument("lp_synth_generate: null argument");
    generate_corpus(synth_config_from_text(config_json), out_dir);
    return LP_OK;
  });
}

lp_status lp_synth_default_config(uint64_t seed, char** config_json_out) {
  return guarded([&]() -> lp_status {
    if (config_json_out == nullptr)
      throw std::invalid_argument("lp_synth_default_config: null argument");
    SynthConfig cfg = default_suite(seed, 20, 100, {0.2, 0.4, 0.6, 0.8}, 5, 100);
    *config_json_out = dup_string(synth_config_to_text(cfg));
    return LP_OK;
  });
}

lp_status lp_gradcheck(uint64_t seed, int trials, int corrupt,
                       double* max_rel_error, int* pass) {
  return guarded([&]() -> lp_status {
    GradCheckResult r = gradient_check(seed, trials > 0 ? trials : 100,
                                       corrupt != 0);
    if (max_rel_error) *max_rel_error = r.max_rel_error;
    if (pass) *pass = r.pass ? 1 : 0;
    return LP_OK;
  });
}

}  // extern "C"
