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

#include <algorithm>
#include <cmath>

#include "lane_eval.hpp"
#include "rng.hpp"

using namespace laneperf;

namespace {

// Oracle: per-pixel point-to-polyline distance, no acceleration.
double dist_point_segment(double px, double py, Point a, Point b) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double len2 = dx * dx + dy * dy;
  double t = len2 == 0.0 ? 0.0 : ((px - a.x) * dx + (py - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

Mask oracle_rasterize(const Lane& lane, double width, int w, int h) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = 1e30;
      for (size_t i = 0; i + 1 < lane.points.size(); ++i)
        best = std::min(best, dist_point_segment(x, y, lane.points[i],
                                                 lane.points[i + 1]));
      if (best <= width / 2.0) m.set(x, y);
    }
  return m;
}

bool masks_equal(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) return false;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (a.get(x, y) != b.get(x, y)) return false;
  return true;
}

// Oracle: exhaustive one-to-one assignment maximizing first the match count,
// then the total IoU, over pairs at or above the threshold.
struct OracleBest {
  int tp = 0;
  double total_iou = -1.0;
};

void oracle_recurse(const std::vector<std::vector<double>>& iou, double thr,
                    size_t i, std::vector<bool>& used_gt, int tp, double sum,
                    OracleBest& best) {
  if (i == iou.size()) {
    if (tp > best.tp || (tp == best.tp && sum > best.total_iou)) {
      best.tp = tp;
      best.total_iou = sum;
    }
    return;
  }
  oracle_recurse(iou, thr, i + 1, used_gt, tp, sum, best);  // pred i unmatched
  for (size_t j = 0; j < used_gt.size(); ++j) {
    if (used_gt[j] || iou[i][j] < thr) continue;
    used_gt[j] = true;
    oracle_recurse(iou, thr, i + 1, used_gt, tp + 1, sum + iou[i][j], best);
    used_gt[j] = false;
  }
}

OracleBest oracle_match(const std::vector<std::vector<double>>& iou,
                        size_t n_gt, double thr) {
  OracleBest best;
  std::vector<bool> used(n_gt, false);
  oracle_recurse(iou, thr, 0, used, 0, 0.0, best);
  return best;
}

Lane vline(double x, double y0 = 2.0, double y1 = 17.0) {
  Lane lane;
  lane.points = {{x, y0}, {x, y1}};
  return lane;
}

Manifest tiny_manifest() {
  Manifest m;
  m.image_width = 20;
  m.image_height = 20;
  m.d_lane = 2;
  m.d_img = 2;
  m.lane_stroke_width = 4.0;
  return m;
}

Lane random_lane(Rng& rng, double cx) {
  Lane lane;
  int k = 2 + rng.int_range(0, 2);
  double x = cx, y = 2.0;
  for (int i = 0; i < k; ++i) {
    lane.points.push_back({x, y});
    x += rng.uniform(-3.0, 3.0);
    y += 16.0 / k;
  }
  return lane;
}

}  // namespace

TEST_CASE("rasterization matches the brute-force pixel oracle") {
  Lane lane = vline(10.0);
  Mask got = rasterize_lane(lane, 4.0, 20, 20);
  Mask want = oracle_rasterize(lane, 4.0, 20, 20);
  CHECK(masks_equal(got, want));
  CHECK(got.count() > 0);

  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    Lane l = random_lane(rng, rng.uniform(2.0, 18.0));
    double w = rng.uniform(1.0, 8.0);
    CHECK(masks_equal(rasterize_lane(l, w, 20, 20),
                      oracle_rasterize(l, w, 20, 20)));
  }
}

TEST_CASE("rasterization clips, rejects degenerate lanes, ignores order") {
  CHECK(rasterize_lane(vline(-50.0), 4.0, 20, 20).count() == 0);

  Lane degenerate;
  degenerate.points = {{5.0, 5.0}, {5.0, 5.0}, {5.0, 5.0}};
  CHECK_THROWS_AS(rasterize_lane(degenerate, 4.0, 20, 20), DataError);

  Rng rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    Lane l = random_lane(rng, rng.uniform(2.0, 18.0));
    Lane rev = l;
    std::reverse(rev.points.begin(), rev.points.end());
    CHECK(masks_equal(rasterize_lane(l, 5.0, 20, 20),
                      rasterize_lane(rev, 5.0, 20, 20)));
  }
}

TEST_CASE("lane IoU identities and pixel-count oracle") {
  Lane a = vline(6.0), far = vline(16.0);
  CHECK(lane_iou(a, a, 4.0, 20, 20) == 1.0);
  CHECK(lane_iou(a, far, 4.0, 20, 20) == 0.0);
  CHECK(lane_iou(a, far, 4.0, 20, 20) == lane_iou(far, a, 4.0, 20, 20));

  // Parallel lanes offset by half the stroke width: value from mask counts.
  Lane b = vline(8.0);
  Mask ma = oracle_rasterize(a, 4.0, 20, 20);
  Mask mb = oracle_rasterize(b, 4.0, 20, 20);
  double want = static_cast<double>(Mask::intersection_count(ma, mb)) /
                static_cast<double>(Mask::union_count(ma, mb));
  CHECK(lane_iou(a, b, 4.0, 20, 20) == doctest::Approx(want).epsilon(1e-12));
  CHECK(want > 0.0);
  CHECK(want < 1.0);
}

TEST_CASE("matching equals exhaustive assignment on random IoU matrices") {
  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    size_t np = static_cast<size_t>(rng.int_range(0, 5));
    size_t ng = static_cast<size_t>(rng.int_range(0, 5));
    std::vector<std::vector<double>> iou(np, std::vector<double>(ng));
    for (auto& row : iou)
      for (auto& v : row) v = rng.uniform(0.0, 1.0);
    double thr = rng.uniform(0.2, 0.8);

    MatchResult got = match_from_iou(iou, static_cast<int>(ng), thr);
    OracleBest want = oracle_match(iou, ng, thr);
    CHECK(got.tp == want.tp);
    CHECK(got.fp == static_cast<int>(np) - want.tp);
    CHECK(got.fn == static_cast<int>(ng) - want.tp);
    CHECK(static_cast<int>(got.matched_pairs.size()) == got.tp);
    double sum = 0.0;
    std::vector<bool> seen_p(np, false), seen_g(ng, false);
    for (const auto& pr : got.matched_pairs) {
      CHECK(pr.iou >= thr);
      CHECK_FALSE(seen_p[static_cast<size_t>(pr.pred_index)]);
      CHECK_FALSE(seen_g[static_cast<size_t>(pr.gt_index)]);
      seen_p[static_cast<size_t>(pr.pred_index)] = true;
      seen_g[static_cast<size_t>(pr.gt_index)] = true;
      sum += pr.iou;
    }
    CHECK(sum == doctest::Approx(std::max(0.0, want.total_iou)).epsilon(1e-9));
  }
}

TEST_CASE("matching hand cases and pred/gt symmetry") {
  Manifest m = tiny_manifest();
  std::vector<Lane> two = {vline(5.0), vline(14.0)};
  MatchResult perfect = match_lanes(two, two, m);
  CHECK(perfect.tp == 2);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  MatchResult miss = match_lanes({vline(3.0)}, {vline(16.0)}, m);
  CHECK(miss.tp == 0);
  CHECK(miss.fp == 1);
  CHECK(miss.fn == 1);

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Lane> a, b;
    for (int i = 0; i < rng.int_range(0, 4); ++i)
      a.push_back(random_lane(rng, rng.uniform(2.0, 18.0)));
    for (int i = 0; i < rng.int_range(0, 4); ++i)
      b.push_back(random_lane(rng, rng.uniform(2.0, 18.0)));
    MatchResult ab = match_lanes(a, b, m);
    MatchResult ba = match_lanes(b, a, m);
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
  }
}

TEST_CASE("F1 from counts applies the declared conventions") {
  F1Stats both_zero = f1_from_counts(0, 0, 0);
  CHECK(both_zero.f1 == 1.0);
  CHECK(both_zero.precision == 1.0);
  CHECK(both_zero.recall == 1.0);
  CHECK(both_zero.degenerate_empty);

  CHECK(f1_from_counts(0, 1, 0).f1 == 0.0);
  CHECK(f1_from_counts(0, 0, 2).f1 == 0.0);

  F1Stats half = f1_from_counts(1, 1, 1);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == 0.5);
  CHECK_FALSE(half.degenerate_empty);

  // Harmonic-mean identity whenever P + R > 0.
  F1Stats s = f1_from_counts(3, 1, 2);
  CHECK(s.f1 == doctest::Approx(2.0 * s.precision * s.recall /
                                (s.precision + s.recall))
                    .epsilon(1e-15));
}

TEST_CASE("dataset F1 micro-aggregates and is order invariant") {
  Manifest m = tiny_manifest();
  MiniDataset d;
  // Sample 1: perfect pair. Sample 2: one FP, one FN.
  Sample s1;
  s1.pred_lanes = {vline(5.0), vline(14.0)};
  s1.gt_lanes = std::vector<Lane>{vline(5.0), vline(14.0)};
  Sample s2;
  s2.pred_lanes = {vline(3.0)};
  s2.gt_lanes = std::vector<Lane>{vline(16.0)};
  d.samples = {s1, s2};

  F1Stats f = dataset_f1(d, m);
  // TP=2, FP=1, FN=1 pooled across samples.
  CHECK(f.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  std::swap(d.samples[0], d.samples[1]);
  CHECK(dataset_f1(d, m).f1 == f.f1);

  MiniDataset perfect;
  perfect.samples = {s1};
  F1Stats p = dataset_f1(perfect, m);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.f1 == 1.0);

  Sample unlabeled;
  unlabeled.pred_lanes = {vline(5.0)};
  MiniDataset bad;
  bad.samples = {unlabeled};
  CHECK_THROWS_AS(dataset_f1(bad, m), DataError);
}

TEST_CASE("per-sample F1 empty-set conventions") {
  Manifest m = tiny_manifest();
  Sample empty_both;
  empty_both.gt_lanes = std::vector<Lane>{};
  CHECK(per_sample_f1(empty_both, m) == 1.0);

  Sample missed;
  missed.gt_lanes = std::vector<Lane>{vline(5.0), vline(14.0)};
  CHECK(per_sample_f1(missed, m) == 0.0);

  Sample ghost;
  ghost.pred_lanes = {vline(5.0)};
  ghost.gt_lanes = std::vector<Lane>{};
  CHECK(per_sample_f1(ghost, m) == 0.0);

  // One matched, one false positive: P=0.5, R=1, F1=2/3.
  Sample mixed;
  mixed.pred_lanes = {vline(5.0), vline(14.0)};
  mixed.gt_lanes = std::vector<Lane>{vline(5.0)};
  CHECK(per_sample_f1(mixed, m) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Sample unlabeled;
  CHECK_THROWS_AS(per_sample_f1(unlabeled, m), DataError);
}
