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

#include "core.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace laneperf {

using json = nlohmann::json;
namespace fs = std::filesystem;

const char* role_name(SegmentRole role) {
  switch (role) {
    case SegmentRole::kSourceTrainRef: return "source_train_ref";
    case SegmentRole::kSourceVal: return "source_val";
    case SegmentRole::kTarget: return "target";
  }
  return "target";
}

SegmentRole role_from_name(const std::string& name) {
  if (name == "source_train_ref") return SegmentRole::kSourceTrainRef;
  if (name == "source_val") return SegmentRole::kSourceVal;
  if (name == "target") return SegmentRole::kTarget;
  throw DataError("unknown segment role '" + name + "'");
}

namespace {

[[noreturn]] void fail(const std::string& context, const std::string& msg) {
  throw DataError(context.empty() ? msg : context + ": " + msg);
}

double require_finite(double v, const std::string& context, const std::string& field) {
  if (!std::isfinite(v)) fail(context, "field '" + field + "' is not finite");
  return v;
}

const json& require_key(const json& j, const char* key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) fail(context, std::string("missing field '") + key + "'");
  return *it;
}

std::vector<Point> parse_points(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() < 2)
    fail(context, "'points' must be an array of at least 2 [x,y] pairs");
  std::vector<Point> pts;
  pts.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      fail(context, "each point must be a numeric [x,y] pair");
    pts.push_back({require_finite(p[0].get<double>(), context, "points.x"),
                   require_finite(p[1].get<double>(), context, "points.y")});
  }
  return pts;
}

Lane parse_pred_lane(const json& j, const Manifest& m, const std::string& context) {
  Lane lane;
  lane.points = parse_points(require_key(j, "points", context), context);
  const json& conf = require_key(j, "confidence", context);
  if (!conf.is_number()) fail(context, "'confidence' must be a number");
  lane.confidence = require_finite(conf.get<double>(), context, "confidence");
  if (*lane.confidence < 0.0 || *lane.confidence > 1.0)
    fail(context, "'confidence' outside [0,1]");
  if (auto it = j.find("logits"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2)
      fail(context, "'logits' must be a pair [f_lane, f_background]");
    lane.logits = {require_finite((*it)[0].get<double>(), context, "logits[0]"),
                   require_finite((*it)[1].get<double>(), context, "logits[1]")};
    // Confidence is stored redundantly with the logits; silent disagreement
    // would let the confidence baselines and EBM see different inputs.
    double a = (*lane.logits)[0], b = (*lane.logits)[1];
    double mx = std::max(a, b);
    double softmax_lane = std::exp(a - mx) / (std::exp(a - mx) + std::exp(b - mx));
    if (std::abs(softmax_lane - *lane.confidence) > 1e-6)
      fail(context, "confidence inconsistent with softmax of logits (|diff| > 1e-6)");
  }
  if (auto it = j.find("feature"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail(context, "'feature' must be an array");
    lane.feature.reserve(it->size());
    for (const auto& v : *it)
      lane.feature.push_back(require_finite(v.get<double>(), context, "feature"));
    if (static_cast<int>(lane.feature.size()) != m.d_lane)
      fail(context, "feature length " + std::to_string(lane.feature.size()) +
                        " does not match manifest d_lane " + std::to_string(m.d_lane));
  }
  return lane;
}

Lane parse_gt_lane(const json& j, const std::string& context) {
  for (const char* key : {"confidence", "logits", "feature"})
    if (j.contains(key))
      fail(context, std::string("ground-truth lane must not carry '") + key + "'");
  Lane lane;
  lane.points = parse_points(require_key(j, "points", context), context);
  return lane;
}

json lane_to_json(const Lane& lane) {
  json j;
  json pts = json::array();
  for (const auto& p : lane.points) pts.push_back(json::array({p.x, p.y}));
  j["points"] = std::move(pts);
  if (lane.confidence) j["confidence"] = *lane.confidence;
  if (lane.logits) j["logits"] = json::array({(*lane.logits)[0], (*lane.logits)[1]});
  if (!lane.feature.empty()) j["feature"] = lane.feature;
  return j;
}

}  // namespace

Manifest parse_manifest_text(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  m.base_dir = base_dir;
  const std::string ctx = "manifest";
  m.image_width = require_key(j, "image_width", ctx).get<int>();
  m.image_height = require_key(j, "image_height", ctx).get<int>();
  if (m.image_width <= 0 || m.image_height <= 0)
    fail(ctx, "image dimensions must be > 0");
  m.d_lane = require_key(j, "d_lane", ctx).get<int>();
  m.d_img = require_key(j, "d_img", ctx).get<int>();
  if (m.d_lane <= 0) fail(ctx, "'d_lane' must be > 0");
  if (m.d_img <= 0) fail(ctx, "'d_img' must be > 0");
  if (j.contains("iou_threshold")) m.iou_threshold = j["iou_threshold"].get<double>();
  if (m.iou_threshold <= 0.0 || m.iou_threshold >= 1.0)
    fail(ctx, "'iou_threshold' must lie in (0,1)");
  if (j.contains("lane_stroke_width"))
    m.lane_stroke_width = j["lane_stroke_width"].get<double>();
  if (m.lane_stroke_width < 1.0) fail(ctx, "'lane_stroke_width' must be >= 1");
  if (j.contains("minidataset_size"))
    m.minidataset_size = j["minidataset_size"].get<int>();
  if (m.minidataset_size < 1) fail(ctx, "'minidataset_size' must be >= 1");
  if (j.contains("confidence_threshold_note"))
    m.confidence_threshold_note = j["confidence_threshold_note"].get<double>();
  if (j.contains("covariance_bessel"))
    m.covariance_bessel = j["covariance_bessel"].get<bool>();
  if (j.contains("segments")) {
    if (!j["segments"].is_array()) fail(ctx, "'segments' must be an array");
    for (const auto& s : j["segments"]) {
      SegmentDecl d;
      d.id = require_key(s, "id", ctx).get<std::string>();
      d.path = require_key(s, "path", ctx).get<std::string>();
      d.role = role_from_name(require_key(s, "role", ctx).get<std::string>());
      m.segments.push_back(std::move(d));
    }
  }
  return m;
}

Manifest parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_text(ss.str(), fs::path(path).parent_path().string());
}

std::string manifest_to_text(const Manifest& m) {
  json j;
  j["image_width"] = m.image_width;
  j["image_height"] = m.image_height;
  j["d_lane"] = m.d_lane;
  j["d_img"] = m.d_img;
  j["iou_threshold"] = m.iou_threshold;
  j["lane_stroke_width"] = m.lane_stroke_width;
  j["minidataset_size"] = m.minidataset_size;
  j["confidence_threshold_note"] = m.confidence_threshold_note;
  j["covariance_bessel"] = m.covariance_bessel;
  json segs = json::array();
  for (const auto& s : m.segments)
    segs.push_back({{"id", s.id}, {"path", s.path}, {"role", role_name(s.role)}});
  j["segments"] = std::move(segs);
  return j.dump(2) + "\n";
}

std::string manifest_fingerprint(const Manifest& m) {
  // FNV-1a 64 over the canonical serialization.
  std::string text = manifest_to_text(m);
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Sample sample_from_line(const std::string& line, const Manifest& m,
                        const std::string& context) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(context, std::string("malformed record: ") + e.what());
  }
  Sample s;
  s.sample_id = require_key(j, "sample_id", context).get<std::string>();
  s.segment_id = require_key(j, "segment_id", context).get<std::string>();
  const json& preds = require_key(j, "pred_lanes", context);
  if (!preds.is_array()) fail(context, "'pred_lanes' must be an array");
  for (const auto& lj : preds) s.pred_lanes.push_back(parse_pred_lane(lj, m, context));
  if (auto it = j.find("gt_lanes"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail(context, "'gt_lanes' must be an array");
    std::vector<Lane> gts;
    for (const auto& lj : *it) gts.push_back(parse_gt_lane(lj, context));
    s.gt_lanes = std::move(gts);
  }
  if (auto it = j.find("image_embedding"); it != j.end() && !it->is_null()) {
    std::vector<double> emb;
    for (const auto& v : *it)
      emb.push_back(require_finite(v.get<double>(), context, "image_embedding"));
    if (static_cast<int>(emb.size()) != m.d_img)
      fail(context, "image_embedding length " + std::to_string(emb.size()) +
                        " does not match manifest d_img " + std::to_string(m.d_img));
    s.image_embedding = std::move(emb);
  }
  if (auto it = j.find("image_ref"); it != j.end() && !it->is_null())
    s.image_ref = it->get<std::string>();
  return s;
}

std::string sample_to_line(const Sample& s) {
  json j;
  j["sample_id"] = s.sample_id;
  j["segment_id"] = s.segment_id;
  json preds = json::array();
  for (const auto& lane : s.pred_lanes) preds.push_back(lane_to_json(lane));
  j["pred_lanes"] = std::move(preds);
  if (s.gt_lanes) {
    json gts = json::array();
    for (const auto& lane : *s.gt_lanes) gts.push_back(lane_to_json(lane));
    j["gt_lanes"] = std::move(gts);
  }
  if (s.image_embedding) j["image_embedding"] = *s.image_embedding;
  if (s.image_ref) j["image_ref"] = *s.image_ref;
  return j.dump();
}

std::string segment_to_text(const MiniDataset& d) {
  std::string out;
  for (const auto& s : d.samples) {
    out += sample_to_line(s);
    out += '\n';
  }
  return out;
}

MiniDataset load_segment(const SegmentDecl& decl, const Manifest& m) {
  fs::path p(decl.path);
  if (p.is_relative() && !m.base_dir.empty()) p = fs::path(m.base_dir) / p;
  std::ifstream in(p);
  if (!in) throw DataError("segment file not found: " + p.string());
  MiniDataset d;
  d.dataset_id = decl.id;
  d.role = decl.role;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string ctx = decl.id + ":" + std::to_string(lineno);
    Sample s = sample_from_line(line, m, ctx);
    if (decl.role == SegmentRole::kSourceVal && !s.gt_lanes)
      fail(ctx, "role source_val requires gt_lanes on every sample");
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) throw DataError("segment '" + decl.id + "' is empty");
  return d;
}

std::vector<MiniDataset> chunk_minidatasets(const std::vector<Sample>& samples,
                                            int size, const std::string& id_prefix,
                                            SegmentRole role) {
  if (size < 1) throw DataError("chunk size must be >= 1");
  if (samples.empty()) throw DataError("cannot chunk an empty sample list");
  std::vector<MiniDataset> out;
  size_t n = samples.size();
  for (size_t begin = 0; begin < n; begin += static_cast<size_t>(size)) {
    size_t end = std::min(n, begin + static_cast<size_t>(size));
    MiniDataset d;
    d.role = role;
    d.samples.assign(samples.begin() + begin, samples.begin() + end);
    out.push_back(std::move(d));
  }
  // Final short chunk: keep if >= size/2, else fold into the previous chunk.
  if (out.size() > 1 && 2 * out.back().samples.size() < static_cast<size_t>(size)) {
    auto tail = std::move(out.back().samples);
    out.pop_back();
    auto& prev = out.back().samples;
    prev.insert(prev.end(), tail.begin(), tail.end());
  }
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].dataset_id =
        out.size() == 1 ? id_prefix : id_prefix + "#" + std::to_string(i);
  }
  return out;
}

std::vector<MiniDataset> load_corpus(const Manifest& m, int size_override) {
  int size = size_override > 0 ? size_override : m.minidataset_size;
  std::vector<MiniDataset> out;
  for (const auto& decl : m.segments) {
    MiniDataset seg = load_segment(decl, m);
    auto chunks = chunk_minidatasets(seg.samples, size, decl.id, decl.role);
    for (auto& c : chunks) out.push_back(std::move(c));
  }
  return out;
}

void atomic_write(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << text;
    if (!out) throw DataError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

}  // namespace laneperf
