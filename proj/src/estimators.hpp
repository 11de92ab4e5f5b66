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

#ifndef LANEPERF_ESTIMATORS_HPP
#define LANEPERF_ESTIMATORS_HPP

#include <string>
#include <variant>
#include <vector>

#include "linalg.hpp"
#include "types.hpp"

namespace laneperf {

struct LabeledSet {
  const MiniDataset* dataset;
  double actual_f1;
};

struct DocArtifact {
  double offset = 0.0;
};

struct AtcArtifact {
  double threshold = 0.0;
};

struct FidArtifact {
  GaussianStats reference;
  LinearFit regression;
};

struct EbmArtifact {
  double temperature = 1.0;
  LinearFit regression;
};

struct CalibrationArtifact {
  std::string method;  // "doc" | "atc" | "fid" | "ebm"
  std::string manifest_fingerprint;
  std::variant<DocArtifact, AtcArtifact, FidArtifact, EbmArtifact> payload;
};

std::string artifact_to_text(const CalibrationArtifact& a);
CalibrationArtifact artifact_from_text(const std::string& text);

// Throws DataError unless the artifact has the expected method and matches
// the manifest fingerprint.
void check_artifact(const CalibrationArtifact& a, const std::string& method,
                    const Manifest& m);

// --- Average Confidence ---------------------------------------------------
// Lane-level pooling: mean softmax confidence over every predicted lane in
// the dataset; zero when nothing is predicted.
double ac_estimate(const MiniDataset& d);

// --- Difference of Confidence ---------------------------------------------
CalibrationArtifact doc_calibrate(const std::vector<LabeledSet>& val_sets,
                                  const Manifest& m);
double doc_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m);

// --- Averaged Threshold Confidence ----------------------------------------
// Candidate thresholds are the sorted unique validation confidences plus 0;
// the fit minimizes the summed L1 discrepancy; ties take the smallest t.
CalibrationArtifact atc_fit(const std::vector<LabeledSet>& val_sets,
                            const Manifest& m);
double atc_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m);

// --- Frechet feature distance ---------------------------------------------
CalibrationArtifact fid_calibrate(
    const std::vector<std::vector<double>>& reference_features,
    const std::vector<LabeledSet>& val_sets, const Manifest& m);
double fid_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m);

// --- Energy ----------------------------------------------------------------
// -T * log(sum_j exp(logit_j / T)), evaluated with a max-shift.
double energy_score(const Lane& lane, double temperature);

// Grid search over 25 log-spaced temperatures in [0.1, 10]; each candidate
// fits a line from mean validation energies to F1; the pair with the least
// summed squared residual wins, ties to the smallest T.
CalibrationArtifact ebm_calibrate(const std::vector<LabeledSet>& val_sets,
                                  const Manifest& m);
double ebm_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m);

// All predicted-lane feature vectors of a dataset (lanes without a stored
// feature are skipped).
std::vector<std::vector<double>> collect_features(const MiniDataset& d);

}  // namespace laneperf

#endif  // LANEPERF_ESTIMATORS_HPP
