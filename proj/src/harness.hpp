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

#ifndef LANEPERF_HARNESS_HPP
#define LANEPERF_HARNESS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "laneperf_model.hpp"
#include "types.hpp"

namespace laneperf {

double mae(const std::vector<double>& actual, const std::vector<double>& estimated);

struct RhoResult {
  double rho = 0.0;
  // Set when either vector is constant; rho is reported as 0 then.
  bool constant_input = false;
};

// Spearman rank correlation with average ranks for ties. Equals
// 1 - 6*sum(d^2)/(N(N^2-1)) when all values are distinct.
RhoResult spearman_rho(const std::vector<double>& actual,
                       const std::vector<double>& estimated);

inline const std::vector<std::string> kAllMethods = {"ac",  "doc", "atc",
                                                     "fid", "ebm", "laneperf"};

// Calibration output: per-method artifacts (or an error note when a method's
// preconditions failed) plus the trained network. A failed method never
// aborts the others.
struct CalibrationBundle {
  std::map<std::string, CalibrationArtifact> artifacts;
  std::optional<NetworkWeights> weights;
  TrainConfig train_config;
  std::map<std::string, std::string> failures;  // method -> reason
};

CalibrationBundle calibrate_all(const std::vector<MiniDataset>& val_sets,
                                const std::vector<std::vector<double>>& reference_features,
                                const ImageEmbedder& embedder,
                                const TrainConfig& train_config, const Manifest& m,
                                const std::vector<std::string>& methods = kAllMethods);

// Estimate with a named method; throws DataError when the bundle lacks the
// needed artifact or weights.
double estimate_with_method(const std::string& method, const MiniDataset& d,
                            const CalibrationBundle& bundle,
                            const ImageEmbedder& embedder, const Manifest& m);

struct EvalRow {
  std::string method;
  std::string dataset_id;
  double actual_f1 = 0.0;
  double estimated_f1 = 0.0;
  double abs_error = 0.0;
  bool degenerate_empty = false;
};

struct MethodAggregate {
  double mae = 0.0;
  double rho = 0.0;
  bool rho_constant_flag = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, MethodAggregate> aggregates;
  std::string manifest_fp;
  uint64_t seed = 0;
  std::map<std::string, std::string> failures;  // methods that could not run
};

// Scores every requested method on every labeled target mini-dataset.
// Per-method failures are recorded, not fatal.
EvalReport run_benchmark(const std::vector<MiniDataset>& target_sets,
                         const CalibrationBundle& bundle,
                         const ImageEmbedder& embedder, const Manifest& m,
                         const std::vector<std::string>& methods = kAllMethods);

// Machine-readable rows followed by an aggregate block.
std::string report_to_csv(const EvalReport& r);

// Rendered table: families x methods with per-family averages, plus the
// overall average both over all rows and over family averages.
std::string report_to_table(const EvalReport& r);

}  // namespace laneperf

#endif  // LANEPERF_HARNESS_HPP
