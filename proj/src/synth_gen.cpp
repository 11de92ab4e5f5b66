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

#include "synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "core.hpp"
#include "laneperf_model.hpp"
#include "rng.hpp"

namespace laneperf {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

double clamp(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

// Smooth near-vertical curve through the lower part of the canvas.
std::vector<Point> make_lane_polyline(double cx, double tilt, double curv,
                                      int canvas_h) {
  std::vector<Point> pts;
  double y0 = 0.35 * canvas_h;
  double y1 = canvas_h - 1.0;
  int steps = 12;
  for (int i = 0; i <= steps; ++i) {
    double y = y0 + (y1 - y0) * i / steps;
    double dy = (y - y1) / canvas_h;
    pts.push_back({cx + tilt * dy * canvas_h + curv * dy * dy * canvas_h, y});
  }
  return pts;
}

// Confidence -> symmetric logit pair, then the stored confidence is
// recomputed from the logits so both stay consistent to the bit.
void attach_logits(Lane& lane, double confidence) {
  double c = clamp(confidence, 1e-4, 1.0 - 1e-4);
  double logit = std::log(c / (1.0 - c));
  lane.logits = {logit / 2.0, -logit / 2.0};
  lane.confidence = 1.0 / (1.0 + std::exp(-logit));
}

std::vector<double> make_feature(const SynthConfig& cfg, bool is_tp, double quality,
                                 double confidence, double severity, Rng& rng) {
  std::vector<double> f(cfg.d_lane);
  f[0] = quality + rng.normal(0.0, 0.03);
  if (cfg.d_lane > 1) f[1] = confidence + rng.normal(0.0, 0.03);
  double center = is_tp ? 0.5 : -0.5;
  for (int j = 2; j < cfg.d_lane; ++j) {
    // Mild severity drift: enough for the feature-shift contract (the
    // quality/confidence dims drift too), small enough that a network trained
    // at severity 0 is not fed far-out-of-distribution inputs.
    double shift = (j % 2 == 0 ? 0.25 : -0.2) * severity;
    f[j] = center + shift + rng.normal(0.0, 0.15);
  }
  return f;
}

std::vector<double> make_image_embedding(const SynthConfig& cfg, int n_gt,
                                         double severity, Rng& rng) {
  std::vector<double> e(cfg.d_img);
  e[0] = static_cast<double>(n_gt) / 6.0 + rng.normal(0.0, 0.03);
  if (cfg.d_img > 1) e[1] = 0.2 + 0.1 * severity + rng.normal(0.0, 0.05);
  for (int j = 2; j < cfg.d_img; ++j) {
    double shift = (j % 3 == 0 ? 0.1 : 0.02) * severity;
    e[j] = rng.normal(shift, 0.1);
  }
  return e;
}

PpmImage render_frame_image(const SynthConfig& cfg, double severity, Rng& rng) {
  PpmImage img;
  img.width = 64;
  img.height = 64;
  img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
  // Flat color drifting with severity: bright gray road -> dark blue night.
  auto channel = [&](double base) {
    return static_cast<uint8_t>(clamp(base + rng.normal(0.0, 6.0), 0.0, 255.0));
  };
  uint8_t r = channel(170.0 - 110.0 * severity);
  uint8_t g = channel(170.0 - 110.0 * severity);
  uint8_t b = channel(175.0 - 60.0 * severity);
  for (size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  return img;
}

}  // namespace

MiniDataset generate_segment(const SynthConfig& cfg, const SynthFamily& family,
                             int segment_index, uint64_t segment_seed) {
  Rng rng(segment_seed);
  const DetectorParams& det = cfg.detector;
  double s = family.severity;
  double p_drop = clamp(det.drop_base + det.drop_gain * s, 0.0, 1.0);
  double jitter_sigma = det.jitter_base + det.jitter_gain * s;
  double p_fp = clamp(det.fp_base + det.fp_gain * s, 0.0, 1.0);
  double w = cfg.lane_stroke_width;

  MiniDataset out;
  out.role = family.role;
  out.dataset_id = family.name + "/seg" + std::to_string(segment_index);

  int stretch_start = cfg.zero_lane_stretch > 0
                          ? std::min(10, std::max(0, family.frames - cfg.zero_lane_stretch))
                          : -1;
  for (int frame = 0; frame < family.frames; ++frame) {
    Sample sample;
    sample.segment_id = out.dataset_id;
    sample.sample_id = out.dataset_id + "/f" + std::to_string(frame);

    bool in_stretch = stretch_start >= 0 && frame >= stretch_start &&
                      frame < stretch_start + cfg.zero_lane_stretch;
    int n_gt = in_stretch ? 0
                          : static_cast<int>(rng.int_range(cfg.lanes_min, cfg.lanes_max));

    std::vector<Lane> gts;
    for (int i = 0; i < n_gt; ++i) {
      double cx = cfg.canvas_w * (i + 1.0) / (n_gt + 1.0) + rng.normal(0.0, 4.0);
      double tilt = rng.uniform(-0.25, 0.25);
      double curv = rng.uniform(-0.15, 0.15);
      Lane gt;
      gt.points = make_lane_polyline(cx, tilt, curv, cfg.canvas_h);
      gts.push_back(std::move(gt));
    }

    for (const auto& gt : gts) {
      if (rng.uniform() < p_drop) continue;  // missed detection
      double offset = rng.normal(0.0, jitter_sigma);
      Lane pred;
      pred.points = gt.points;
      for (auto& p : pred.points) p.x += offset + rng.normal(0.0, 0.5);
      // Parallel-strip IoU proxy for the applied offset; drives both the
      // quality feature and the (overconfident) softmax score.
      double quality = std::max(0.0, (w - std::abs(offset)) / (w + std::abs(offset)));
      double confidence =
          clamp(0.45 + 0.55 * quality + rng.normal(0.0, det.confidence_noise),
                0.01, 0.999);
      attach_logits(pred, confidence);
      pred.feature = make_feature(cfg, true, quality, confidence, s, rng);
      sample.pred_lanes.push_back(std::move(pred));
    }

    if (!in_stretch) {
      int n_fp = (rng.uniform() < p_fp ? 1 : 0) + (rng.uniform() < p_fp / 3.0 ? 1 : 0);
      for (int i = 0; i < n_fp; ++i) {
        double cx = rng.uniform(0.1, 0.9) * cfg.canvas_w;
        Lane fp;
        fp.points = make_lane_polyline(cx, rng.uniform(-0.4, 0.4),
                                       rng.uniform(-0.2, 0.2), cfg.canvas_h);
        double quality = rng.uniform(0.0, 0.25);
        double confidence =
            clamp(0.45 + 0.55 * quality + rng.normal(0.0, det.confidence_noise * 2.0),
                  0.01, 0.999);
        attach_logits(fp, confidence);
        fp.feature = make_feature(cfg, false, quality, confidence, s, rng);
        sample.pred_lanes.push_back(std::move(fp));
      }
    }

    sample.gt_lanes = std::move(gts);
    sample.image_embedding = make_image_embedding(cfg, n_gt, s, rng);
    out.samples.push_back(std::move(sample));
  }
  return out;
}

Manifest generate_corpus(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.d_lane < 2) throw DataError("synth config: d_lane must be >= 2");
  if (cfg.d_img < 1) throw DataError("synth config: d_img must be >= 1");
  if (cfg.lanes_min < 0 || cfg.lanes_max < cfg.lanes_min)
    throw DataError("synth config: invalid lanes_per_frame range");
  for (const auto& f : cfg.families)
    if (f.severity < 0.0 || f.severity > 1.0)
      throw DataError("synth config: severity must lie in [0,1]");
  if (cfg.families.empty()) throw DataError("synth config: no families declared");

  fs::create_directories(out_dir);
  if (cfg.emit_images) fs::create_directories(fs::path(out_dir) / "images");

  Manifest m;
  m.image_width = cfg.canvas_w;
  m.image_height = cfg.canvas_h;
  m.d_lane = cfg.d_lane;
  m.d_img = cfg.emit_images ? BuiltinEmbedder::kDim : cfg.d_img;
  m.lane_stroke_width = cfg.lane_stroke_width;
  m.minidataset_size = cfg.minidataset_size;
  m.base_dir = out_dir;

  uint64_t family_index = 0;
  for (const auto& family : cfg.families) {
    for (int seg = 0; seg < family.segments; ++seg) {
      uint64_t seed =
          Rng::derive(cfg.seed, family_index * 100003ull + static_cast<uint64_t>(seg));
      MiniDataset d = generate_segment(cfg, family, seg, seed);

      if (cfg.emit_images) {
        Rng img_rng(Rng::derive(seed, 0xBEEF));
        for (auto& sample : d.samples) {
          PpmImage img = render_frame_image(cfg, family.severity, img_rng);
          std::string rel = "images/" + family.name + "_s" + std::to_string(seg) +
                            "_" + std::to_string(&sample - d.samples.data()) + ".ppm";
          write_ppm((fs::path(out_dir) / rel).string(), img);
          sample.image_ref = rel;
          sample.image_embedding.reset();  // builtin embedder path
        }
      }

      std::string rel_path = family.name + "_seg" + std::to_string(seg) + ".jsonl";
      atomic_write((fs::path(out_dir) / rel_path).string(), segment_to_text(d));
      m.segments.push_back({d.dataset_id, rel_path, family.role});
    }
    ++family_index;
  }
  atomic_write((fs::path(out_dir) / "manifest.json").string(), manifest_to_text(m));
  return m;
}

SynthConfig default_suite(uint64_t seed, int val_segments, int val_frames,
                          const std::vector<double>& target_severities,
                          int target_segments, int target_frames) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.families.push_back({"ref", SegmentRole::kSourceTrainRef, 0.0, 2, val_frames});
  cfg.families.push_back({"val", SegmentRole::kSourceVal, 0.0, val_segments, val_frames});
  for (double s : target_severities) {
    char name[32];
    std::snprintf(name, sizeof(name), "sev%.1f", s);
    cfg.families.push_back({name, SegmentRole::kTarget, s, target_segments, target_frames});
  }
  return cfg;
}

SynthConfig synth_config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("synth config is not valid JSON: ") + e.what());
  }
  SynthConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("canvas")) {
    cfg.canvas_w = j["canvas"][0].get<int>();
    cfg.canvas_h = j["canvas"][1].get<int>();
  }
  if (j.contains("d_lane")) cfg.d_lane = j["d_lane"].get<int>();
  if (j.contains("d_img")) cfg.d_img = j["d_img"].get<int>();
  if (j.contains("lane_stroke_width"))
    cfg.lane_stroke_width = j["lane_stroke_width"].get<double>();
  if (j.contains("minidataset_size"))
    cfg.minidataset_size = j["minidataset_size"].get<int>();
  if (j.contains("lanes_min")) cfg.lanes_min = j["lanes_min"].get<int>();
  if (j.contains("lanes_max")) cfg.lanes_max = j["lanes_max"].get<int>();
  if (j.contains("zero_lane_stretch"))
    cfg.zero_lane_stretch = j["zero_lane_stretch"].get<int>();
  if (j.contains("emit_images")) cfg.emit_images = j["emit_images"].get<bool>();
  if (j.contains("detector")) {
    const json& d = j["detector"];
    auto get = [&](const char* key, double& into) {
      if (d.contains(key)) into = d[key].get<double>();
    };
    get("drop_base", cfg.detector.drop_base);
    get("drop_gain", cfg.detector.drop_gain);
    get("jitter_base", cfg.detector.jitter_base);
    get("jitter_gain", cfg.detector.jitter_gain);
    get("fp_base", cfg.detector.fp_base);
    get("fp_gain", cfg.detector.fp_gain);
    get("confidence_noise", cfg.detector.confidence_noise);
  }
  if (j.contains("families")) {
    for (const auto& f : j["families"]) {
      SynthFamily fam;
      fam.name = f.at("name").get<std::string>();
      fam.role = role_from_name(f.at("role").get<std::string>());
      fam.severity = f.at("severity").get<double>();
      fam.segments = f.at("segments").get<int>();
      fam.frames = f.at("frames").get<int>();
      cfg.families.push_back(std::move(fam));
    }
  }
  return cfg;
}

std::string synth_config_to_text(const SynthConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["canvas"] = {cfg.canvas_w, cfg.canvas_h};
  j["d_lane"] = cfg.d_lane;
  j["d_img"] = cfg.d_img;
  j["lane_stroke_width"] = cfg.lane_stroke_width;
  j["minidataset_size"] = cfg.minidataset_size;
  j["lanes_min"] = cfg.lanes_min;
  j["lanes_max"] = cfg.lanes_max;
  j["zero_lane_stretch"] = cfg.zero_lane_stretch;
  j["emit_images"] = cfg.emit_images;
  j["detector"] = {{"drop_base", cfg.detector.drop_base},
                   {"drop_gain", cfg.detector.drop_gain},
                   {"jitter_base", cfg.detector.jitter_base},
                   {"jitter_gain", cfg.detector.jitter_gain},
                   {"fp_base", cfg.detector.fp_base},
                   {"fp_gain", cfg.detector.fp_gain},
                   {"confidence_noise", cfg.detector.confidence_noise}};
  json fams = json::array();
  for (const auto& f : cfg.families)
    fams.push_back({{"name", f.name},
                    {"role", role_name(f.role)},
                    {"severity", f.severity},
                    {"segments", f.segments},
                    {"frames", f.frames}});
  j["families"] = std::move(fams);
  return j.dump(2) + "\n";
}

}  // namespace laneperf
