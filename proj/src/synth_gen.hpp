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

#ifndef LANEPERF_SYNTH_GEN_HPP
#define LANEPERF_SYNTH_GEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace laneperf {

// One generated family of segments: a named group sharing a role and a
// domain-shift severity.
struct SynthFamily {
  std::string name;
  SegmentRole role = SegmentRole::kTarget;
  double severity = 0.0;  // in [0,1]
  int segments = 1;
  int frames = 100;
};

// Detector simulation knobs. Severity linearly scales the drop probability,
// point jitter, and false-positive rate.
struct DetectorParams {
  double drop_base = 0.05, drop_gain = 0.25;
  double jitter_base = 2.0, jitter_gain = 4.0;   // px, lane-offset sigma
  double fp_base = 0.10, fp_gain = 0.45;         // expected FP lanes per frame
  double confidence_noise = 0.04;
};

struct SynthConfig {
  uint64_t seed = 1;
  int canvas_w = 320, canvas_h = 180;
  int d_lane = 8, d_img = 16;
  double lane_stroke_width = 14.0;
  int minidataset_size = 200;
  int lanes_min = 2, lanes_max = 5;
  // When > 0, each segment contains this many consecutive frames with empty
  // ground truth and empty predictions.
  int zero_lane_stretch = 0;
  bool emit_images = false;
  DetectorParams detector;
  std::vector<SynthFamily> families;
};

SynthConfig synth_config_from_text(const std::string& text);
std::string synth_config_to_text(const SynthConfig& cfg);

// A convenient default suite: a severity-0 reference + validation family and
// one target family per requested severity.
SynthConfig default_suite(uint64_t seed, int val_segments, int val_frames,
                          const std::vector<double>& target_severities,
                          int target_segments, int target_frames);

// Writes manifest.json, one record file per segment, and (optionally) flat
// color images under out_dir. Deterministic per seed, independent of the
// order segments are generated in.
Manifest generate_corpus(const SynthConfig& cfg, const std::string& out_dir);

// In-memory generation of a single segment; exposed for tests.
MiniDataset generate_segment(const SynthConfig& cfg, const SynthFamily& family,
                             int segment_index, uint64_t segment_seed);

}  // namespace laneperf

#endif  // LANEPERF_SYNTH_GEN_HPP
