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

#ifndef LANEPERF_LANE_EVAL_HPP
#define LANEPERF_LANE_EVAL_HPP

#include <cstdint>
#include <tuple>
#include <vector>

#include "types.hpp"

namespace laneperf {

// Binary raster over a W x H canvas, packed 64 pixels per word.
class Mask {
 public:
  Mask(int w, int h) : w_(w), h_(h), bits_((static_cast<size_t>(w) * h + 63) / 64) {}

  void set(int x, int y) { bits_[idx(x, y) >> 6] |= 1ull << (idx(x, y) & 63); }
  bool get(int x, int y) const {
    return (bits_[idx(x, y) >> 6] >> (idx(x, y) & 63)) & 1;
  }
  int width() const { return w_; }
  int height() const { return h_; }
  int64_t count() const;
  static int64_t intersection_count(const Mask& a, const Mask& b);
  static int64_t union_count(const Mask& a, const Mask& b);

 private:
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * w_ + x; }
  int w_, h_;
  std::vector<uint64_t> bits_;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  struct Pair {
    int pred_index;
    int gt_index;
    double iou;
  };
  std::vector<Pair> matched_pairs;
};

struct F1Stats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the zero/zero convention fired (no predictions and no ground
  // truth anywhere), so reports can flag it.
  bool degenerate_empty = false;
};

// Pixels whose lattice point lies within width/2 (Euclidean) of the polyline,
// clipped to the canvas. Throws DataError for a degenerate lane (all points
// identical).
Mask rasterize_lane(const Lane& lane, double width, int canvas_w, int canvas_h);

// |mask(a) & mask(b)| / |mask(a) | mask(b)|; 0 when the union is empty.
double lane_iou(const Lane& a, const Lane& b, double width, int canvas_w,
                int canvas_h);

// Optimal one-to-one assignment over pairs with IoU >= threshold, maximizing
// first the number of matches and then the total IoU. Pairs below the
// threshold are never matched.
MatchResult match_lanes(const std::vector<Lane>& preds,
                        const std::vector<Lane>& gts, const Manifest& m);

// Assignment on a precomputed IoU matrix (iou[i][j] between pred i and gt j).
// n_gt is explicit because an empty prediction set leaves the matrix without
// rows to infer it from.
MatchResult match_from_iou(const std::vector<std::vector<double>>& iou,
                           int n_gt, double threshold);

// Micro-aggregated dataset F1: TP/FP/FN summed across samples, then
// precision/recall/F1 from the aggregate counts. Throws if any sample lacks
// ground truth.
F1Stats dataset_f1(const MiniDataset& d, const Manifest& m);
F1Stats dataset_f1(const std::vector<MiniDataset>& ds, const Manifest& m);

// Single-sample F1 with the empty-set conventions: both sets empty -> 1.0,
// exactly one empty -> 0.0.
double per_sample_f1(const Sample& s, const Manifest& m);

// Counts -> F1 with the stated conventions; shared by dataset and per-sample
// paths.
F1Stats f1_from_counts(int64_t tp, int64_t fp, int64_t fn);

}  // namespace laneperf

#endif  // LANEPERF_LANE_EVAL_HPP
