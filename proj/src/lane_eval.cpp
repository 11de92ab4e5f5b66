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

#include "lane_eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace laneperf {

int64_t Mask::count() const {
  int64_t n = 0;
  for (uint64_t w : bits_) n += std::popcount(w);
  return n;
}

int64_t Mask::intersection_count(const Mask& a, const Mask& b) {
  int64_t n = 0;
  for (size_t i = 0; i < a.bits_.size(); ++i) n += std::popcount(a.bits_[i] & b.bits_[i]);
  return n;
}

int64_t Mask::union_count(const Mask& a, const Mask& b) {
  int64_t n = 0;
  for (size_t i = 0; i < a.bits_.size(); ++i) n += std::popcount(a.bits_[i] | b.bits_[i]);
  return n;
}

namespace {

double dist_sq_point_segment(double px, double py, const Point& a, const Point& b) {
  double vx = b.x - a.x, vy = b.y - a.y;
  double wx = px - a.x, wy = py - a.y;
  double len_sq = vx * vx + vy * vy;
  double t = len_sq > 0.0 ? std::clamp((wx * vx + wy * vy) / len_sq, 0.0, 1.0) : 0.0;
  double dx = wx - t * vx, dy = wy - t * vy;
  return dx * dx + dy * dy;
}

}  // namespace

Mask rasterize_lane(const Lane& lane, double width, int canvas_w, int canvas_h) {
  if (lane.points.size() < 2) throw DataError("lane has fewer than 2 points");
  bool degenerate = true;
  for (const auto& p : lane.points)
    if (p.x != lane.points[0].x || p.y != lane.points[0].y) degenerate = false;
  if (degenerate) throw DataError("degenerate lane: all points identical");

  double r = width / 2.0;
  double r_sq = r * r;
  Mask mask(canvas_w, canvas_h);
  for (size_t i = 0; i + 1 < lane.points.size(); ++i) {
    const Point& a = lane.points[i];
    const Point& b = lane.points[i + 1];
    int x0 = std::max(0, static_cast<int>(std::ceil(std::min(a.x, b.x) - r)));
    int x1 = std::min(canvas_w - 1, static_cast<int>(std::floor(std::max(a.x, b.x) + r)));
    int y0 = std::max(0, static_cast<int>(std::ceil(std::min(a.y, b.y) - r)));
    int y1 = std::min(canvas_h - 1, static_cast<int>(std::floor(std::max(a.y, b.y) + r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (dist_sq_point_segment(x, y, a, b) <= r_sq) mask.set(x, y);
  }
  return mask;
}

double lane_iou(const Lane& a, const Lane& b, double width, int canvas_w,
                int canvas_h) {
  Mask ma = rasterize_lane(a, width, canvas_w, canvas_h);
  Mask mb = rasterize_lane(b, width, canvas_w, canvas_h);
  int64_t uni = Mask::union_count(ma, mb);
  if (uni == 0) return 0.0;
  return static_cast<double>(Mask::intersection_count(ma, mb)) / static_cast<double>(uni);
}

MatchResult match_from_iou(const std::vector<std::vector<double>>& iou,
                           int n_gt, double threshold) {
  int n_pred = static_cast<int>(iou.size());

  // Run the DP with the smaller side as the bitmask; the objective is
  // symmetric so we can transpose freely.
  if (n_gt > n_pred) {
    std::vector<std::vector<double>> t(n_gt, std::vector<double>(n_pred));
    for (int i = 0; i < n_pred; ++i)
      for (int j = 0; j < n_gt; ++j) t[j][i] = iou[i][j];
    MatchResult r = match_from_iou(t, n_pred, threshold);
    std::swap(r.fp, r.fn);
    for (auto& p : r.matched_pairs) std::swap(p.pred_index, p.gt_index);
    return r;
  }

  MatchResult result;
  result.fp = n_pred;
  result.fn = n_gt;
  if (n_pred == 0 || n_gt == 0) return result;
  if (n_gt > 20) throw DataError("too many lanes in one frame to match (> 20)");

  // Matched-pair benefit kBig + iou: maximizes match count first, then total
  // IoU among maximum-count assignments.
  constexpr double kBig = 1048576.0;
  const double kNeg = -1.0;
  size_t n_masks = 1ull << n_gt;
  std::vector<std::vector<double>> dp(n_pred + 1,
                                      std::vector<double>(n_masks, kNeg));
  std::vector<std::vector<int8_t>> choice(n_pred,
                                          std::vector<int8_t>(n_masks, -2));
  dp[0][0] = 0.0;
  for (int i = 0; i < n_pred; ++i) {
    for (size_t mask = 0; mask < n_masks; ++mask) {
      double base = dp[i][mask];
      if (base < 0.0) continue;
      if (base > dp[i + 1][mask]) {  // pred i unmatched
        dp[i + 1][mask] = base;
        choice[i][mask] = -1;
      }
      for (int j = 0; j < n_gt; ++j) {
        if (mask & (1ull << j)) continue;
        if (iou[i][j] < threshold) continue;
        double v = base + kBig + iou[i][j];
        size_t nm = mask | (1ull << j);
        if (v > dp[i + 1][nm]) {
          dp[i + 1][nm] = v;
          choice[i][nm] = static_cast<int8_t>(j);
        }
      }
    }
  }
  size_t best_mask = 0;
  for (size_t mask = 1; mask < n_masks; ++mask)
    if (dp[n_pred][mask] > dp[n_pred][best_mask]) best_mask = mask;

  size_t mask = best_mask;
  for (int i = n_pred - 1; i >= 0; --i) {
    int8_t c = choice[i][mask];
    if (c >= 0) {
      result.matched_pairs.push_back({i, c, iou[i][c]});
      mask &= ~(1ull << c);
    } else {
      // Re-derive whether this state came through "unmatched" for pred i.
      // choice == -1 marks it; -2 states are unreachable on the optimal path.
    }
  }
  std::reverse(result.matched_pairs.begin(), result.matched_pairs.end());
  result.tp = static_cast<int>(result.matched_pairs.size());
  result.fp = n_pred - result.tp;
  result.fn = n_gt - result.tp;
  return result;
}

MatchResult match_lanes(const std::vector<Lane>& preds,
                        const std::vector<Lane>& gts, const Manifest& m) {
  std::vector<Mask> pred_masks, gt_masks;
  pred_masks.reserve(preds.size());
  gt_masks.reserve(gts.size());
  for (const auto& lane : preds)
    pred_masks.push_back(
        rasterize_lane(lane, m.lane_stroke_width, m.image_width, m.image_height));
  for (const auto& lane : gts)
    gt_masks.push_back(
        rasterize_lane(lane, m.lane_stroke_width, m.image_width, m.image_height));
  std::vector<std::vector<double>> iou(preds.size(),
                                       std::vector<double>(gts.size(), 0.0));
  for (size_t i = 0; i < preds.size(); ++i) {
    for (size_t j = 0; j < gts.size(); ++j) {
      int64_t uni = Mask::union_count(pred_masks[i], gt_masks[j]);
      iou[i][j] = uni == 0 ? 0.0
                           : static_cast<double>(Mask::intersection_count(
                                 pred_masks[i], gt_masks[j])) /
                                 static_cast<double>(uni);
    }
  }
  return match_from_iou(iou, static_cast<int>(gts.size()), m.iou_threshold);
}

F1Stats f1_from_counts(int64_t tp, int64_t fp, int64_t fn) {
  F1Stats out;
  if (tp + fp == 0 && tp + fn == 0) {
    out.precision = out.recall = out.f1 = 1.0;
    out.degenerate_empty = true;
    return out;
  }
  out.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  double pr = out.precision + out.recall;
  out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  return out;
}

F1Stats dataset_f1(const MiniDataset& d, const Manifest& m) {
  return dataset_f1(std::vector<MiniDataset>{d}, m);
}

F1Stats dataset_f1(const std::vector<MiniDataset>& ds, const Manifest& m) {
  int64_t tp = 0, fp = 0, fn = 0;
  for (const auto& d : ds) {
    for (const auto& s : d.samples) {
      if (!s.gt_lanes)
        throw DataError("dataset_f1: sample '" + s.sample_id + "' has no ground truth");
      MatchResult r = match_lanes(s.pred_lanes, *s.gt_lanes, m);
      tp += r.tp;
      fp += r.fp;
      fn += r.fn;
    }
  }
  return f1_from_counts(tp, fp, fn);
}

double per_sample_f1(const Sample& s, const Manifest& m) {
  if (!s.gt_lanes)
    throw DataError("per_sample_f1: sample '" + s.sample_id + "' has no ground truth");
  if (s.pred_lanes.empty() && s.gt_lanes->empty()) return 1.0;
  if (s.pred_lanes.empty() || s.gt_lanes->empty()) return 0.0;
  MatchResult r = match_lanes(s.pred_lanes, *s.gt_lanes, m);
  return f1_from_counts(r.tp, r.fp, r.fn).f1;
}

}  // namespace laneperf
