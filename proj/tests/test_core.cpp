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

#include <filesystem>
#include <fstream>

#include "core.hpp"

using namespace laneperf;
namespace fs = std::filesystem;

namespace {

Manifest tiny_manifest() {
  Manifest m;
  m.image_width = 20;
  m.image_height = 20;
  m.d_lane = 3;
  m.d_img = 2;
  return m;
}

std::string minimal_manifest_json() {
  return R"({"image_width": 640, "image_height": 480, "d_lane": 4, "d_img": 8,
             "segments": [{"id": "seg0", "path": "seg0.jsonl", "role": "target"}]})";
}

fs::path make_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("laneperf_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Sample make_sample(int i, int n_pred, bool with_gt) {
  Sample s;
  s.sample_id = "s" + std::to_string(i);
  s.segment_id = "seg";
  for (int k = 0; k < n_pred; ++k) {
    Lane lane;
    lane.points = {{1.0 + k, 2.0}, {3.0 + k, 17.0}};
    lane.confidence = 0.25 * (k + 1);
    lane.feature = {0.1 * k, 0.2, 0.3};
    s.pred_lanes.push_back(lane);
  }
  if (with_gt) {
    Lane g;
    g.points = {{1.0, 2.0}, {3.0, 17.0}};
    s.gt_lanes = std::vector<Lane>{g};
  }
  return s;
}

}  // namespace

TEST_CASE("manifest defaults and overrides") {
  Manifest m = parse_manifest_text(minimal_manifest_json(), "/base");
  CHECK(m.iou_threshold == 0.5);
  CHECK(m.minidataset_size == 200);
  CHECK(m.lane_stroke_width == 30.0);
  CHECK(m.confidence_threshold_note == 0.4);
  CHECK_FALSE(m.covariance_bessel);
  CHECK(m.base_dir == "/base");
  REQUIRE(m.segments.size() == 1);
  CHECK(m.segments[0].role == SegmentRole::kTarget);

  Manifest m50 = parse_manifest_text(
      R"({"image_width": 640, "image_height": 480, "d_lane": 4, "d_img": 8,
          "minidataset_size": 50})",
      "");
  CHECK(m50.minidataset_size == 50);
}

TEST_CASE("manifest invariant violations are schema errors") {
  CHECK_THROWS_AS(parse_manifest_text(
                      R"({"image_width": 640, "image_height": 480, "d_lane": 4,
                          "d_img": 8, "iou_threshold": 1.5})",
                      ""),
                  DataError);
  CHECK_THROWS_AS(parse_manifest_text(
                      R"({"image_width": 0, "image_height": 480, "d_lane": 4,
                          "d_img": 8})",
                      ""),
                  DataError);
  CHECK_THROWS_AS(parse_manifest_text(R"({"image_width": 640})", ""), DataError);
  CHECK_THROWS_AS(parse_manifest_text("not json", ""), DataError);
  CHECK_THROWS_AS(parse_manifest("/nonexistent/manifest.json"), DataError);
}

TEST_CASE("manifest fingerprint is stable and field-sensitive") {
  Manifest a = parse_manifest_text(minimal_manifest_json(), "/x");
  Manifest b = parse_manifest_text(minimal_manifest_json(), "/other/dir");
  CHECK(manifest_fingerprint(a) == manifest_fingerprint(b));  // base_dir excluded
  CHECK(manifest_fingerprint(a).size() == 16);
  b.iou_threshold = 0.6;
  CHECK(manifest_fingerprint(a) != manifest_fingerprint(b));
}

TEST_CASE("sample line round trip is field-for-field identical") {
  Manifest m = tiny_manifest();
  Sample s = make_sample(0, 2, true);
  s.pred_lanes[0].logits = {2.0, 0.0};
  s.pred_lanes[0].confidence = 1.0 / (1.0 + std::exp(-2.0));
  s.image_embedding = std::vector<double>{0.5, -1.25};
  s.image_ref = "img/000.ppm";

  std::string line = sample_to_line(s);
  Sample back = sample_from_line(line, m, "t");
  CHECK(back == s);
  // Serialization is deterministic.
  CHECK(sample_to_line(back) == line);
}

TEST_CASE("record parsing rejects invariant breaches") {
  Manifest m = tiny_manifest();
  auto parse = [&](const std::string& line) {
    return sample_from_line(line, m, "seg:1");
  };
  // Feature length must equal d_lane.
  CHECK_THROWS_WITH_AS(
      parse(R"({"sample_id":"a","segment_id":"s","pred_lanes":[
        {"points":[[0,0],[1,1]],"confidence":0.5,"feature":[1,2]}]})"),
      doctest::Contains("does not match manifest d_lane"), DataError);
  // Confidence must agree with softmax of the logits.
  CHECK_THROWS_WITH_AS(
      parse(R"({"sample_id":"a","segment_id":"s","pred_lanes":[
        {"points":[[0,0],[1,1]],"confidence":0.9,"logits":[0,0]}]})"),
      doctest::Contains("inconsistent with softmax"), DataError);
  // Ground-truth lanes carry geometry only.
  CHECK_THROWS_WITH_AS(
      parse(R"({"sample_id":"a","segment_id":"s","pred_lanes":[],
        "gt_lanes":[{"points":[[0,0],[1,1]],"confidence":0.5}]})"),
      doctest::Contains("ground-truth lane must not carry"), DataError);
  CHECK_THROWS_AS(parse(R"({"sample_id":"a","segment_id":"s","pred_lanes":[
        {"points":[[0,0],[1,1]],"confidence":1.5}]})"),
                  DataError);
  CHECK_THROWS_AS(parse("{bad json"), DataError);
}

TEST_CASE("load_segment reads records in order and reports line numbers") {
  fs::path dir = make_temp_dir("core_load");
  Manifest m = tiny_manifest();
  m.base_dir = dir.string();

  MiniDataset d;
  d.samples = {make_sample(0, 1, true), make_sample(1, 0, true),
               make_sample(2, 2, true)};
  fs::path file = dir / "seg.jsonl";
  atomic_write(file.string(), segment_to_text(d));

  SegmentDecl decl{"seg", "seg.jsonl", SegmentRole::kSourceVal};
  MiniDataset loaded = load_segment(decl, m);
  REQUIRE(loaded.samples.size() == 3);
  CHECK(loaded.samples[1].pred_lanes.empty());
  CHECK(loaded.samples == d.samples);
  CHECK(loaded.dataset_id == "seg");
  CHECK(loaded.role == SegmentRole::kSourceVal);

  // Unlabeled record on line 2 of a validation segment.
  Sample unlabeled = make_sample(9, 1, false);
  std::ofstream out(file, std::ios::app);
  out << sample_to_line(unlabeled) << "\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_segment(decl, m), doctest::Contains("seg:4"),
                       DataError);

  // Target role never requires labels.
  SegmentDecl tgt{"seg", "seg.jsonl", SegmentRole::kTarget};
  CHECK(load_segment(tgt, m).samples.size() == 4);

  fs::remove_all(dir);
}

TEST_CASE("chunking follows the short-final-chunk rule") {
  auto mk = [](int n) {
    std::vector<Sample> ss;
    for (int i = 0; i < n; ++i) ss.push_back(make_sample(i, 0, false));
    return ss;
  };

  auto one = chunk_minidatasets(mk(200), 200, "a", SegmentRole::kTarget);
  REQUIRE(one.size() == 1);
  CHECK(one[0].samples.size() == 200);
  CHECK(one[0].dataset_id == "a");

  // 120 at size 50: trailing 20 < 25 folds into the previous chunk.
  auto folded = chunk_minidatasets(mk(120), 50, "b", SegmentRole::kTarget);
  REQUIRE(folded.size() == 2);
  CHECK(folded[0].samples.size() == 50);
  CHECK(folded[1].samples.size() == 70);
  CHECK(folded[0].dataset_id == "b#0");
  CHECK(folded[1].dataset_id == "b#1");

  // Trailing 30 >= 25 is kept.
  auto kept = chunk_minidatasets(mk(130), 50, "c", SegmentRole::kTarget);
  REQUIRE(kept.size() == 3);
  CHECK(kept[2].samples.size() == 30);

  CHECK(chunk_minidatasets(mk(50), 50, "d", SegmentRole::kTarget).size() == 1);
  // A lone short input is its own chunk.
  CHECK(chunk_minidatasets(mk(10), 50, "e", SegmentRole::kTarget).size() == 1);

  CHECK_THROWS_AS(chunk_minidatasets({}, 50, "f", SegmentRole::kTarget),
                  DataError);
  CHECK_THROWS_AS(chunk_minidatasets(mk(5), 0, "g", SegmentRole::kTarget),
                  DataError);
}

TEST_CASE("chunking preserves every sample exactly once, in order") {
  std::vector<Sample> ss;
  for (int i = 0; i < 173; ++i) ss.push_back(make_sample(i, i % 3, false));
  auto chunks = chunk_minidatasets(ss, 40, "p", SegmentRole::kSourceVal);
  std::vector<Sample> flat;
  for (const auto& c : chunks) {
    CHECK(c.role == SegmentRole::kSourceVal);
    flat.insert(flat.end(), c.samples.begin(), c.samples.end());
  }
  CHECK(flat == ss);
}

TEST_CASE("load_corpus honors the size override") {
  fs::path dir = make_temp_dir("core_corpus");
  Manifest m = tiny_manifest();
  m.base_dir = dir.string();
  m.minidataset_size = 100;
  m.segments = {{"seg", "seg.jsonl", SegmentRole::kTarget}};

  MiniDataset d;
  for (int i = 0; i < 100; ++i) d.samples.push_back(make_sample(i, 1, true));
  atomic_write((dir / "seg.jsonl").string(), segment_to_text(d));

  CHECK(load_corpus(m, 0).size() == 1);
  CHECK(load_corpus(m, 25).size() == 4);
  fs::remove_all(dir);
}

TEST_CASE("role names round trip") {
  for (auto role : {SegmentRole::kSourceTrainRef, SegmentRole::kSourceVal,
                    SegmentRole::kTarget})
    CHECK(role_from_name(role_name(role)) == role);
  CHECK_THROWS_AS(role_from_name("bogus"), DataError);
}
