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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <laneperf/laneperf.h>

namespace fs = std::filesystem;

namespace {

// Small end-to-end corpus shared across the test cases in this file.
struct Fixture {
  fs::path root;
  fs::path corpus_dir;
  fs::path artifacts_dir;
  lp_manifest* manifest = nullptr;
  lp_corpus* corpus = nullptr;

  Fixture() {
    root = fs::temp_directory_path() / "lp_capi_fixture";
    fs::remove_all(root);
    corpus_dir = root / "corpus";
    artifacts_dir = root / "artifacts";

    const char* config = R"json({
      "seed": 910,
      "canvas": [160, 120],
      "d_lane": 4,
      "d_img": 3,
      "lane_stroke_width": 14.0,
      "minidataset_size": 25,
      "families": [
        {"name": "ref", "role": "source_train_ref", "severity": 0.0, "segments": 1, "frames": 50},
        {"name": "val", "role": "source_val", "severity": 0.0, "segments": 2, "frames": 50},
        {"name": "tgt", "role": "target", "severity": 0.5, "segments": 1, "frames": 50}
      ]
    })json";
    REQUIRE(lp_synth_generate(config, corpus_dir.string().c_str()) == LP_OK);
    REQUIRE(lp_manifest_open((corpus_dir / "manifest.json").string().c_str(),
                             &manifest) == LP_OK);
    REQUIRE(lp_corpus_load(manifest, 0, &corpus) == LP_OK);
  }

  ~Fixture() {
    lp_corpus_close(corpus);
    lp_manifest_close(manifest);
    fs::remove_all(root);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("manifest and corpus handles expose the generated data") {
  Fixture& f = fixture();
  const char* fp = lp_manifest_fingerprint(f.manifest);
  REQUIRE(fp != nullptr);
  CHECK(std::strlen(fp) == 16);

  // 4 segments x 50 frames at minidataset_size 25 -> 2 chunks each.
  CHECK(lp_corpus_count(f.corpus, nullptr) == 8);
  CHECK(lp_corpus_count(f.corpus, "source_train_ref") == 2);
  CHECK(lp_corpus_count(f.corpus, "source_val") == 4);
  CHECK(lp_corpus_count(f.corpus, "target") == 2);

  const char* id = lp_corpus_dataset_id(f.corpus, "target", 0);
  REQUIRE(id != nullptr);
  CHECK(std::string(id).find("tgt/") == 0);
  CHECK(lp_corpus_dataset_id(f.corpus, "target", 99) == nullptr);
  CHECK(lp_corpus_count(f.corpus, "bogus_role") == 0);
}

TEST_CASE("error paths return codes and messages, not crashes") {
  lp_manifest* m = nullptr;
  CHECK(lp_manifest_open("/nonexistent/manifest.json", &m) == LP_ERR_DATA);
  CHECK(m == nullptr);
  CHECK(std::strlen(lp_error_message()) > 0);

  CHECK(lp_manifest_open(nullptr, &m) == LP_ERR_USAGE);
  CHECK(lp_synth_generate("not json", "/tmp/lp_never") == LP_ERR_DATA);

  Fixture& f = fixture();
  double p, r, f1;
  CHECK(lp_eval_f1(f.manifest, f.corpus, "target", 99, &p, &r, &f1) ==
        LP_ERR_USAGE);
  lp_bundle* b = nullptr;
  CHECK(lp_bundle_open("/nonexistent/dir", f.manifest, "doc", &b) == LP_ERR_DATA);
  CHECK(b == nullptr);
}

TEST_CASE("ground-truth evaluation matches expectations per role") {
  Fixture& f = fixture();
  double p = -1, r = -1, f1 = -1;
  REQUIRE(lp_eval_f1(f.manifest, f.corpus, "source_val", 0, &p, &r, &f1) == LP_OK);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(f1 > 0.5);  // severity-0 validation data is nearly clean

  double f1_tgt;
  REQUIRE(lp_eval_f1(f.manifest, f.corpus, "target", 0, &p, &r, &f1_tgt) == LP_OK);
  CHECK(f1_tgt < f1);  // severity 0.5 degrades the detector
}

TEST_CASE("calibrate, reload, estimate, benchmark round trip") {
  Fixture& f = fixture();
  char* report = nullptr;
  REQUIRE(lp_calibrate(f.manifest, f.corpus, "ac,doc,atc,fid,ebm,laneperf",
                       "precomputed", 1234, f.artifacts_dir.string().c_str(),
                       &report) == LP_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("calibrated") != std::string::npos);
  lp_string_free(report);
  CHECK(fs::exists(f.artifacts_dir / "doc.artifact.json"));
  CHECK(fs::exists(f.artifacts_dir / "laneperf.weights.json"));

  lp_bundle* b = nullptr;
  REQUIRE(lp_bundle_open(f.artifacts_dir.string().c_str(), f.manifest,
                         "ac,doc,atc,fid,ebm,laneperf", &b) == LP_OK);

  double est = -1;
  for (const char* method : {"ac", "doc", "atc", "fid", "ebm", "laneperf"}) {
    REQUIRE(lp_estimate(f.manifest, f.corpus, b, method, "target", 0,
                        "precomputed", &est) == LP_OK);
    CHECK(est >= 0.0);
    CHECK(est <= 1.0);
  }

  // AC needs no bundle; the others refuse a NULL bundle.
  CHECK(lp_estimate(f.manifest, f.corpus, nullptr, "ac", "target", 0,
                    "precomputed", &est) == LP_OK);
  CHECK(lp_estimate(f.manifest, f.corpus, nullptr, "doc", "target", 0,
                    "precomputed", &est) == LP_ERR_USAGE);

  char* csv = nullptr;
  char* table = nullptr;
  REQUIRE(lp_benchmark(f.manifest, f.corpus, b, "ac,doc,laneperf", "precomputed",
                       &csv, &table) == LP_OK);
  REQUIRE(csv != nullptr);
  REQUIRE(table != nullptr);
  CHECK(std::string(csv).find("method,dataset_id") == 0);
  CHECK(std::string(table).find("laneperf") != std::string::npos);
  lp_string_free(csv);
  lp_string_free(table);
  lp_bundle_close(b);

  // A bundle written against one manifest refuses another.
  fs::path other_dir = f.root / "other_corpus";
  std::string tiny = R"json({
    "seed": 6, "canvas": [160, 120], "d_lane": 6, "d_img": 3,
    "families": [{"name": "val", "role": "source_val", "severity": 0.0,
                  "segments": 1, "frames": 10}]
  })json";
  REQUIRE(lp_synth_generate(tiny.c_str(), other_dir.string().c_str()) == LP_OK);
  lp_manifest* other = nullptr;
  REQUIRE(lp_manifest_open((other_dir / "manifest.json").string().c_str(),
                           &other) == LP_OK);
  lp_bundle* bad = nullptr;
  CHECK(lp_bundle_open(f.artifacts_dir.string().c_str(), other, "doc", &bad) ==
        LP_ERR_DATA);
  CHECK(bad == nullptr);
  lp_manifest_close(other);
}

TEST_CASE("calibration with an impossible method reports partial success") {
  Fixture& f = fixture();
  // A corpus whose validation role yields a single mini-dataset: the FID
  // regression needs at least two, so it must fail while DOC still succeeds.
  fs::path one_dir = f.root / "one_val_corpus";
  std::string one = R"json({
    "seed": 8, "canvas": [160, 120], "d_lane": 4, "d_img": 3,
    "minidataset_size": 60,
    "families": [{"name": "val", "role": "source_val", "severity": 0.0,
                  "segments": 1, "frames": 40}]
  })json";
  REQUIRE(lp_synth_generate(one.c_str(), one_dir.string().c_str()) == LP_OK);
  lp_manifest* m1 = nullptr;
  lp_corpus* c1 = nullptr;
  REQUIRE(lp_manifest_open((one_dir / "manifest.json").string().c_str(), &m1) ==
          LP_OK);
  REQUIRE(lp_corpus_load(m1, 0, &c1) == LP_OK);
  REQUIRE(lp_corpus_count(c1, "source_val") == 1);

  fs::path dir = f.root / "partial_artifacts";
  char* report = nullptr;
  lp_status st = lp_calibrate(m1, c1, "doc,fid", "precomputed", 7,
                              dir.string().c_str(), &report);
  CHECK(st == LP_ERR_PARTIAL);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("fid") != std::string::npos);
  lp_string_free(report);
  CHECK(fs::exists(dir / "doc.artifact.json"));
  CHECK_FALSE(fs::exists(dir / "fid.artifact.json"));
  lp_corpus_close(c1);
  lp_manifest_close(m1);

  CHECK(lp_calibrate(f.manifest, f.corpus, "doc,nonsense", "precomputed", 7,
                     dir.string().c_str(), nullptr) == LP_ERR_USAGE);
}

TEST_CASE("default synth config is valid JSON accepted by the generator") {
  char* cfg = nullptr;
  REQUIRE(lp_synth_default_config(99, &cfg) == LP_OK);
  REQUIRE(cfg != nullptr);
  CHECK(std::string(cfg).find("\"seed\": 99") != std::string::npos);
  lp_string_free(cfg);
}

TEST_CASE("gradient self-check passes, corrupt control fails") {
  double err = -1;
  int pass = 0;
  REQUIRE(lp_gradcheck(2024, 10, 0, &err, &pass) == LP_OK);
  CHECK(pass == 1);
  CHECK(err < 1e-4);

  REQUIRE(lp_gradcheck(2024, 10, 1, &err, &pass) == LP_OK);
  CHECK(pass == 0);
  CHECK(err > 1e-4);
}
