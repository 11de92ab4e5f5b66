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

#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "core.hpp"

namespace laneperf {

using json = nlohmann::json;

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> collect_confidences(const MiniDataset& d) {
  std::vector<double> out;
  for (const auto& s : d.samples)
    for (const auto& lane : s.pred_lanes) {
      if (!lane.confidence)
        throw DataError("predicted lane without confidence in '" + s.sample_id + "'");
      out.push_back(*lane.confidence);
    }
  return out;
}

size_t lane_count(const MiniDataset& d) {
  size_t n = 0;
  for (const auto& s : d.samples) n += s.pred_lanes.size();
  return n;
}

double mean_energy(const MiniDataset& d, double temperature) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& s : d.samples)
    for (const auto& lane : s.pred_lanes) {
      sum += energy_score(lane, temperature);
      ++n;
    }
  if (n == 0) throw DataError("mean energy of a dataset with no predicted lanes");
  return sum / static_cast<double>(n);
}

}  // namespace

std::vector<std::vector<double>> collect_features(const MiniDataset& d) {
  std::vector<std::vector<double>> out;
  for (const auto& s : d.samples)
    for (const auto& lane : s.pred_lanes)
      if (!lane.feature.empty()) out.push_back(lane.feature);
  return out;
}

double ac_estimate(const MiniDataset& d) {
  auto confs = collect_confidences(d);
  if (confs.empty()) return 0.0;
  double sum = 0.0;
  for (double c : confs) sum += c;
  return sum / static_cast<double>(confs.size());
}

CalibrationArtifact doc_calibrate(const std::vector<LabeledSet>& val_sets,
                                  const Manifest& m) {
  if (val_sets.empty()) throw DataError("doc_calibrate: no validation sets");
  double sum = 0.0;
  for (const auto& v : val_sets) sum += v.actual_f1 - ac_estimate(*v.dataset);
  CalibrationArtifact a;
  a.method = "doc";
  a.manifest_fingerprint = manifest_fingerprint(m);
  a.payload = DocArtifact{sum / static_cast<double>(val_sets.size())};
  return a;
}

double doc_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m) {
  check_artifact(a, "doc", m);
  return clamp01(ac_estimate(d) + std::get<DocArtifact>(a.payload).offset);
}

CalibrationArtifact atc_fit(const std::vector<LabeledSet>& val_sets,
                            const Manifest& m) {
  if (val_sets.empty()) throw DataError("atc_fit: no validation sets");
  std::vector<std::vector<double>> per_set_confs;
  std::vector<double> candidates = {0.0};
  size_t total = 0;
  for (const auto& v : val_sets) {
    per_set_confs.push_back(collect_confidences(*v.dataset));
    total += per_set_confs.back().size();
    for (double c : per_set_confs.back()) candidates.push_back(c);
  }
  if (total == 0) throw DataError("atc_fit: no predicted lanes in validation");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  double best_t = candidates.front();
  double best_obj = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    double obj = 0.0;
    for (size_t k = 0; k < val_sets.size(); ++k) {
      const auto& confs = per_set_confs[k];
      double frac = 0.0;
      if (!confs.empty()) {
        size_t above = 0;
        for (double c : confs)
          if (c > t) ++above;  // strict, matching the indicator
        frac = static_cast<double>(above) / static_cast<double>(confs.size());
      }
      obj += std::abs(frac - val_sets[k].actual_f1);
    }
    if (obj < best_obj) {  // strict: ties keep the smallest t
      best_obj = obj;
      best_t = t;
    }
  }
  CalibrationArtifact a;
  a.method = "atc";
  a.manifest_fingerprint = manifest_fingerprint(m);
  a.payload = AtcArtifact{best_t};
  return a;
}

double atc_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m) {
  check_artifact(a, "atc", m);
  auto confs = collect_confidences(d);
  if (confs.empty()) return 0.0;
  double t = std::get<AtcArtifact>(a.payload).threshold;
  size_t above = 0;
  for (double c : confs)
    if (c > t) ++above;
  return static_cast<double>(above) / static_cast<double>(confs.size());
}

CalibrationArtifact fid_calibrate(
    const std::vector<std::vector<double>>& reference_features,
    const std::vector<LabeledSet>& val_sets, const Manifest& m) {
  if (reference_features.size() <= 1)
    throw DataError("fid_calibrate: reference corpus needs more than 1 feature");
  if (static_cast<int>(reference_features.size()) < m.d_lane + 1)
    std::cerr << "warning: FID reference corpus has " << reference_features.size()
              << " features for d_lane=" << m.d_lane
              << "; covariance is rank deficient\n";
  GaussianStats ref = gaussian_stats(reference_features, m.covariance_bessel);

  std::vector<double> dists, f1s;
  for (const auto& v : val_sets) {
    auto feats = collect_features(*v.dataset);
    if (feats.empty()) {
      std::cerr << "warning: skipping validation set '" << v.dataset->dataset_id
                << "' with no lane features in FID calibration\n";
      continue;
    }
    dists.push_back(
        frechet_distance(ref, gaussian_stats(feats, m.covariance_bessel)));
    f1s.push_back(v.actual_f1);
  }
  if (dists.size() < 2)
    throw DataError("fid_calibrate: need >= 2 validation sets with lane features");
  CalibrationArtifact a;
  a.method = "fid";
  a.manifest_fingerprint = manifest_fingerprint(m);
  a.payload = FidArtifact{std::move(ref), fit_linear_regression(dists, f1s)};
  return a;
}

double fid_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m) {
  check_artifact(a, "fid", m);
  if (lane_count(d) == 0) return 0.0;
  auto feats = collect_features(d);
  if (feats.empty()) return 0.0;
  const auto& payload = std::get<FidArtifact>(a.payload);
  double dist = frechet_distance(payload.reference,
                                 gaussian_stats(feats, m.covariance_bessel));
  return clamp01(payload.regression.slope * dist + payload.regression.intercept);
}

double energy_score(const Lane& lane, double temperature) {
  if (!lane.logits) throw DataError("energy_score: lane has no logits");
  if (temperature <= 0.0) throw DataError("energy_score: temperature must be > 0");
  double a = (*lane.logits)[0] / temperature;
  double b = (*lane.logits)[1] / temperature;
  double mx = std::max(a, b);
  double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
  return -temperature * lse;
}

CalibrationArtifact ebm_calibrate(const std::vector<LabeledSet>& val_sets,
                                  const Manifest& m) {
  std::vector<const MiniDataset*> usable;
  std::vector<double> f1s;
  for (const auto& v : val_sets) {
    if (lane_count(*v.dataset) == 0) {
      std::cerr << "warning: skipping validation set '" << v.dataset->dataset_id
                << "' with no predicted lanes in EBM calibration\n";
      continue;
    }
    usable.push_back(v.dataset);
    f1s.push_back(v.actual_f1);
  }
  if (usable.empty()) throw DataError("ebm_calibrate: no lanes in validation");
  if (usable.size() < 2)
    throw DataError("ebm_calibrate: need >= 2 validation sets with lanes");

  double best_residual = std::numeric_limits<double>::infinity();
  EbmArtifact best;
  for (int i = 0; i < 25; ++i) {
    double temperature =
        0.1 * std::pow(100.0, static_cast<double>(i) / 24.0);  // [0.1, 10]
    std::vector<double> energies;
    energies.reserve(usable.size());
    for (const auto* d : usable) energies.push_back(mean_energy(*d, temperature));
    LinearFit fit = fit_linear_regression(energies, f1s);
    double residual = 0.0;
    for (size_t k = 0; k < energies.size(); ++k) {
      double r = fit.slope * energies[k] + fit.intercept - f1s[k];
      residual += r * r;
    }
    if (residual < best_residual) {  // strict: ties keep the smallest T
      best_residual = residual;
      best = EbmArtifact{temperature, fit};
    }
  }
  CalibrationArtifact a;
  a.method = "ebm";
  a.manifest_fingerprint = manifest_fingerprint(m);
  a.payload = best;
  return a;
}

double ebm_estimate(const MiniDataset& d, const CalibrationArtifact& a,
                    const Manifest& m) {
  check_artifact(a, "ebm", m);
  if (lane_count(d) == 0) return 0.0;
  const auto& payload = std::get<EbmArtifact>(a.payload);
  double e = mean_energy(d, payload.temperature);
  return clamp01(payload.regression.slope * e + payload.regression.intercept);
}

void check_artifact(const CalibrationArtifact& a, const std::string& method,
                    const Manifest& m) {
  if (a.method != method)
    throw DataError("artifact method '" + a.method + "' used where '" + method +
                    "' was expected");
  std::string fp = manifest_fingerprint(m);
  if (a.manifest_fingerprint != fp)
    throw DataError("artifact fingerprint " + a.manifest_fingerprint +
                    " does not match manifest fingerprint " + fp);
}

std::string artifact_to_text(const CalibrationArtifact& a) {
  json j;
  j["version"] = 1;
  j["method"] = a.method;
  j["manifest_fingerprint"] = a.manifest_fingerprint;
  json p;
  if (const auto* doc = std::get_if<DocArtifact>(&a.payload)) {
    p["offset"] = doc->offset;
  } else if (const auto* atc = std::get_if<AtcArtifact>(&a.payload)) {
    p["threshold"] = atc->threshold;
  } else if (const auto* fid = std::get_if<FidArtifact>(&a.payload)) {
    p["mu"] = fid->reference.mu;
    json rows = json::array();
    for (int i = 0; i < fid->reference.sigma.n; ++i) {
      json row = json::array();
      for (int k = 0; k < fid->reference.sigma.n; ++k)
        row.push_back(fid->reference.sigma.at(i, k));
      rows.push_back(std::move(row));
    }
    p["sigma"] = std::move(rows);
    p["n"] = fid->reference.n;
    p["slope"] = fid->regression.slope;
    p["intercept"] = fid->regression.intercept;
  } else if (const auto* ebm = std::get_if<EbmArtifact>(&a.payload)) {
    p["temperature"] = ebm->temperature;
    p["slope"] = ebm->regression.slope;
    p["intercept"] = ebm->regression.intercept;
  }
  j["payload"] = std::move(p);
  return j.dump(2) + "\n";
}

CalibrationArtifact artifact_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("artifact is not valid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw DataError("unsupported artifact version");
  CalibrationArtifact a;
  a.method = j.at("method").get<std::string>();
  a.manifest_fingerprint = j.at("manifest_fingerprint").get<std::string>();
  const json& p = j.at("payload");
  if (a.method == "doc") {
    a.payload = DocArtifact{p.at("offset").get<double>()};
  } else if (a.method == "atc") {
    a.payload = AtcArtifact{p.at("threshold").get<double>()};
  } else if (a.method == "fid") {
    FidArtifact fid;
    fid.reference.mu = p.at("mu").get<std::vector<double>>();
    const json& rows = p.at("sigma");
    int n = static_cast<int>(rows.size());
    fid.reference.sigma = Mat(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        fid.reference.sigma.at(i, k) = rows[i][k].get<double>();
    fid.reference.n = p.at("n").get<int64_t>();
    fid.regression = {p.at("slope").get<double>(), p.at("intercept").get<double>()};
    a.payload = std::move(fid);
  } else if (a.method == "ebm") {
    EbmArtifact ebm;
    ebm.temperature = p.at("temperature").get<double>();
    if (ebm.temperature <= 0.0) throw DataError("EBM temperature must be > 0");
    ebm.regression = {p.at("slope").get<double>(), p.at("intercept").get<double>()};
    a.payload = ebm;
  } else {
    throw DataError("unknown artifact method '" + a.method + "'");
  }
  return a;
}

}  // namespace laneperf
