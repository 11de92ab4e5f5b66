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

#ifndef LANEPERF_TYPES_HPP
#define LANEPERF_TYPES_HPP

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace laneperf {

// Data or schema problem in user-supplied input. Maps to exit code 2 in the
// CLI and LP_ERR_DATA in the C API.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

// One lane instance. Predicted lanes carry confidence (softmax score of the
// lane class) and usually logits and a detector feature vector; ground-truth
// lanes carry only the polyline.
struct Lane {
  std::vector<Point> points;
  std::optional<double> confidence;
  std::optional<std::array<double, 2>> logits;  // (lane, background)
  std::vector<double> feature;                  // empty when absent

  bool operator==(const Lane&) const = default;
};

struct Sample {
  std::string sample_id;
  std::string segment_id;
  std::vector<Lane> pred_lanes;
  std::optional<std::vector<Lane>> gt_lanes;  // absent = unlabeled
  std::optional<std::vector<double>> image_embedding;
  std::optional<std::string> image_ref;

  bool operator==(const Sample&) const = default;
};

enum class SegmentRole { kSourceTrainRef, kSourceVal, kTarget };

const char* role_name(SegmentRole role);
SegmentRole role_from_name(const std::string& name);

struct MiniDataset {
  std::string dataset_id;
  std::vector<Sample> samples;
  SegmentRole role = SegmentRole::kTarget;

  bool operator==(const MiniDataset&) const = default;
};

struct SegmentDecl {
  std::string id;
  std::string path;  // relative to the manifest file
  SegmentRole role = SegmentRole::kTarget;
};

struct Manifest {
  int image_width = 0;
  int image_height = 0;
  int d_lane = 0;
  int d_img = 0;
  double iou_threshold = 0.5;
  double lane_stroke_width = 30.0;
  int minidataset_size = 200;
  double confidence_threshold_note = 0.4;  // informational only
  bool covariance_bessel = false;          // 1/(n-1) instead of 1/n
  std::vector<SegmentDecl> segments;

  // Directory of the manifest file, used to resolve segment paths. Not part
  // of the fingerprint.
  std::string base_dir;
};

}  // namespace laneperf

#endif  // LANEPERF_TYPES_HPP
