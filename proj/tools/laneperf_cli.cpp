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

// Command-line front end. Talks to the library exclusively through the
// extern-C interface in laneperf/laneperf.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "laneperf/laneperf.h"

namespace {

int fail(lp_status st) {
  std::cerr << "error: " << lp_error_message() << "\n";
  return static_cast<int>(st == LP_ERR_INTERNAL ? LP_ERR_DATA : st);
}

struct ManifestCloser {
  void operator()(lp_manifest* p) const { lp_manifest_close(p); }
};
struct CorpusCloser {
  void operator()(lp_corpus* p) const { lp_corpus_close(p); }
};
struct BundleCloser {
  void operator()(lp_bundle* p) const { lp_bundle_close(p); }
};
using ManifestPtr = std::unique_ptr<lp_manifest, ManifestCloser>;
using CorpusPtr = std::unique_ptr<lp_corpus, CorpusCloser>;
using BundlePtr = std::unique_ptr<lp_bundle, BundleCloser>;

std::string join_methods(const std::vector<std::string>& methods) {
  std::string csv;
  for (const auto& m : methods) {
    if (!csv.empty()) csv += ',';
    csv += m;
  }
  return csv;
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

int open_inputs(const std::string& manifest_path, int size_override,
                ManifestPtr& manifest, CorpusPtr& corpus) {
  lp_manifest* m = nullptr;
  lp_status st = lp_manifest_open(manifest_path.c_str(), &m);
  if (st != LP_OK) return fail(st);
  manifest.reset(m);
  lp_corpus* c = nullptr;
  st = lp_corpus_load(manifest.get(), size_override, &c);
  if (st != LP_OK) return fail(st);
  corpus.reset(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-free lane-detection performance estimation"};
  app.require_subcommand(1);

  std::string manifest_path, artifacts_dir, out_path, embedder = "precomputed";
  std::string role = "target", config_path, method_one;
  std::vector<std::string> methods;
  uint64_t seed = 1;
  int size_override = 0, index = -1, trials = 100;
  bool corrupt = false;

  auto add_manifest = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Corpus manifest path")
        ->required();
    cmd->add_option("--minidataset-size", size_override,
                    "Override the manifest mini-dataset size");
  };
  auto add_embedder = [&](CLI::App* cmd) {
    cmd->add_option("--embedder", embedder,
                    "Image embedding source: builtin|precomputed");
  };

  CLI::App* eval = app.add_subcommand(
      "eval", "Ground-truth precision/recall/F1 per mini-dataset");
  add_manifest(eval);
  eval->add_option("--role", role,
                   "Which mini-datasets to score: "
                   "source_train_ref|source_val|target|all");

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Fit estimators on the source validation mini-datasets");
  add_manifest(calibrate);
  add_embedder(calibrate);
  calibrate->add_option("--method", methods, "Method to calibrate (repeatable)");
  calibrate->add_option("--artifacts-dir", artifacts_dir,
                        "Directory to write calibration artifacts to")
      ->required();
  calibrate->add_option("--seed", seed, "Training seed");

  CLI::App* estimate = app.add_subcommand(
      "estimate", "Label-free F1 estimate for target mini-datasets");
  add_manifest(estimate);
  add_embedder(estimate);
  estimate->add_option("--method", method_one, "Estimation method")->required();
  estimate->add_option("--artifacts-dir", artifacts_dir,
                       "Directory holding calibration artifacts");
  estimate->add_option("--role", role, "Mini-dataset role to estimate on");
  estimate->add_option("--index", index,
                       "Single mini-dataset index; default: all of the role");

  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "Score all methods against ground truth on target data");
  add_manifest(benchmark);
  add_embedder(benchmark);
  benchmark->add_option("--method", methods, "Method to score (repeatable)");
  benchmark->add_option("--artifacts-dir", artifacts_dir,
                        "Directory holding calibration artifacts")
      ->required();
  benchmark->add_option("--out", out_path, "Write the per-dataset CSV here");

  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic domain-shift corpus");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--config", config_path,
                    "Generator configuration JSON; default: built-in suite");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against finite differences");
  gradcheck->add_option("--seed", seed, "Check seed");
  gradcheck->add_option("--trials", trials, "Parameter entries to probe");
  gradcheck->add_flag("--corrupt", corrupt)->group("");  // negative control

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const char* role_arg = role == "all" ? nullptr : role.c_str();

  if (eval->parsed()) {
    ManifestPtr m;
    CorpusPtr c;
    if (int rc = open_inputs(manifest_path, size_override, m, c)) return rc;
    int n = lp_corpus_count(c.get(), role_arg);
    if (n == 0) {
      std::cerr << "error: no mini-datasets with role '" << role << "'\n";
      return LP_ERR_DATA;
    }
    std::printf("%-24s %10s %10s %10s\n", "dataset", "precision", "recall", "f1");
    for (int i = 0; i < n; ++i) {
      double p = 0, r = 0, f = 0;
      lp_status st = lp_eval_f1(m.get(), c.get(), role_arg, i, &p, &r, &f);
      if (st != LP_OK) return fail(st);
      std::printf("%-24s %10.4f %10.4f %10.4f\n",
                  lp_corpus_dataset_id(c.get(), role_arg, i), p, r, f);
    }
    return 0;
  }

  if (calibrate->parsed()) {
    ManifestPtr m;
    CorpusPtr c;
    if (int rc = open_inputs(manifest_path, size_override, m, c)) return rc;
    char* report = nullptr;
    lp_status st = lp_calibrate(m.get(), c.get(), join_methods(methods).c_str(),
                                embedder.c_str(), seed, artifacts_dir.c_str(),
                                &report);
    if (report != nullptr) {
      std::cout << report;
      lp_string_free(report);
    }
    if (st == LP_ERR_PARTIAL) {
      std::cerr << "warning: some methods failed to calibrate\n";
      return LP_ERR_PARTIAL;
    }
    return st == LP_OK ? 0 : fail(st);
  }

  if (estimate->parsed()) {
    ManifestPtr m;
    CorpusPtr c;
    if (int rc = open_inputs(manifest_path, size_override, m, c)) return rc;
    BundlePtr b;
    if (method_one != "ac") {
      if (artifacts_dir.empty()) {
        std::cerr << "error: --artifacts-dir is required for method '"
                  << method_one << "'\n";
        return 1;
      }
      lp_bundle* raw = nullptr;
      lp_status st = lp_bundle_open(artifacts_dir.c_str(), m.get(),
                                    method_one.c_str(), &raw);
      if (st != LP_OK) return fail(st);
      b.reset(raw);
    }
    int n = lp_corpus_count(c.get(), role_arg);
    int lo = index >= 0 ? index : 0;
    int hi = index >= 0 ? index + 1 : n;
    if (lo >= n) {
      std::cerr << "error: index " << index << " out of range (have " << n
                << ")\n";
      return 1;
    }
    std::printf("%-24s %10s\n", "dataset", "est_f1");
    for (int i = lo; i < hi; ++i) {
      double est = 0;
      lp_status st = lp_estimate(m.get(), c.get(), b.get(), method_one.c_str(),
                                 role_arg, i, embedder.c_str(), &est);
      if (st != LP_OK) return fail(st);
      std::printf("%-24s %10.4f\n", lp_corpus_dataset_id(c.get(), role_arg, i),
                  est);
    }
    return 0;
  }

  if (benchmark->parsed()) {
    ManifestPtr m;
    CorpusPtr c;
    if (int rc = open_inputs(manifest_path, size_override, m, c)) return rc;
    lp_bundle* raw = nullptr;
    lp_status st = lp_bundle_open(artifacts_dir.c_str(), m.get(),
                                  join_methods(methods).c_str(), &raw);
    if (st != LP_OK) return fail(st);
    BundlePtr b(raw);
    char* csv = nullptr;
    char* table = nullptr;
    st = lp_benchmark(m.get(), c.get(), b.get(), join_methods(methods).c_str(),
                      embedder.c_str(), &csv, &table);
    if (st != LP_OK && st != LP_ERR_PARTIAL) return fail(st);
    if (table != nullptr) std::cout << table;
    if (csv != nullptr && !out_path.empty() && !write_file(out_path, csv)) {
      std::cerr << "error: cannot write " << out_path << "\n";
      lp_string_free(csv);
      lp_string_free(table);
      return LP_ERR_DATA;
    }
    lp_string_free(csv);
    lp_string_free(table);
    if (st == LP_ERR_PARTIAL)
      std::cerr << "warning: some methods could not be scored\n";
    return static_cast<int>(st);
  }

  if (synth->parsed()) {
    std::string config;
    if (config_path.empty()) {
      char* text = nullptr;
      lp_status st = lp_synth_default_config(seed, &text);
      if (st != LP_OK) return fail(st);
      config = text;
      lp_string_free(text);
    } else {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) {
        std::cerr << "error: cannot read " << config_path << "\n";
        return LP_ERR_DATA;
      }
      config.assign(std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>());
    }
    lp_status st = lp_synth_generate(config.c_str(), out_path.c_str());
    if (st != LP_OK) return fail(st);
    std::cout << "wrote corpus to " << out_path << "\n";
    return 0;
  }

  if (gradcheck->parsed()) {
    double max_rel = 0;
    int pass = 0;
    lp_status st = lp_gradcheck(seed, trials, corrupt ? 1 : 0, &max_rel, &pass);
    if (st != LP_OK) return fail(st);
    std::printf("max_rel_error=%.3e %s\n", max_rel, pass ? "PASS" : "FAIL");
    return pass ? 0 : LP_ERR_DATA;
  }

  return 1;
}
