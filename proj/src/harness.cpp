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

#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "core.hpp"
#include "lane_eval.hpp"

namespace laneperf {

double mae(const std::vector<double>& actual, const std::vector<double>& estimated) {
  if (actual.empty() || actual.size() != estimated.size())
    throw DataError("mae: vectors must be nonempty and of equal length");
  double sum = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - estimated[i]);
  return sum / static_cast<double>(actual.size());
}

namespace {

// Average ranks (1-based); ties share the mean of their rank positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
  size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::string family_of(const std::string& dataset_id) {
  size_t slash = dataset_id.find('/');
  return slash == std::string::npos ? std::string("all") : dataset_id.substr(0, slash);
}

}  // namespace

RhoResult spearman_rho(const std::vector<double>& actual,
                       const std::vector<double>& estimated) {
  if (actual.size() != estimated.size())
    throw DataError("spearman_rho: length mismatch");
  if (actual.size() < 2) throw DataError("spearman_rho: need at least 2 points");
  RhoResult out;
  auto constant = [](const std::vector<double>& v) {
    for (double x : v)
      if (x != v[0]) return false;
    return true;
  };
  if (constant(actual) || constant(estimated)) {
    out.constant_input = true;
    out.rho = 0.0;
    return out;
  }
  auto ra = average_ranks(actual);
  auto rb = average_ranks(estimated);
  double n = static_cast<double>(ra.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  out.rho = num / std::sqrt(da * db);
  return out;
}

CalibrationBundle calibrate_all(
    const std::vector<MiniDataset>& val_sets,
    const std::vector<std::vector<double>>& reference_features,
    const ImageEmbedder& embedder, const TrainConfig& train_config,
    const Manifest& m, const std::vector<std::string>& methods) {
  CalibrationBundle bundle;
  bundle.train_config = train_config;

  std::vector<LabeledSet> labeled;
  labeled.reserve(val_sets.size());
  for (const auto& d : val_sets)
    labeled.push_back({&d, dataset_f1(d, m).f1});

  auto wants = [&](const std::string& name) {
    return std::find(methods.begin(), methods.end(), name) != methods.end();
  };
  auto attempt = [&](const std::string& name, auto&& fn) {
    if (!wants(name)) return;
    try {
      bundle.artifacts.emplace(name, fn());
    } catch (const std::exception& e) {
      bundle.failures.emplace(name, e.what());
    }
  };
  attempt("doc", [&] { return doc_calibrate(labeled, m); });
  attempt("atc", [&] { return atc_fit(labeled, m); });
  attempt("fid", [&] { return fid_calibrate(reference_features, labeled, m); });
  attempt("ebm", [&] { return ebm_calibrate(labeled, m); });
  if (wants("laneperf")) {
    try {
      bundle.weights = train(val_sets, embedder, train_config, m).weights;
    } catch (const std::exception& e) {
      bundle.failures.emplace("laneperf", e.what());
    }
  }
  return bundle;
}

double estimate_with_method(const std::string& method, const MiniDataset& d,
                            const CalibrationBundle& bundle,
                            const ImageEmbedder& embedder, const Manifest& m) {
  if (method == "ac") return ac_estimate(d);
  if (method == "laneperf") {
    if (!bundle.weights) throw DataError("no trained weights for laneperf");
    return laneperf_estimate(*bundle.weights, d, embedder);
  }
  auto it = bundle.artifacts.find(method);
  if (it == bundle.artifacts.end())
    throw DataError("no calibration artifact for method '" + method + "'");
  if (method == "doc") return doc_estimate(d, it->second, m);
  if (method == "atc") return atc_estimate(d, it->second, m);
  if (method == "fid") return fid_estimate(d, it->second, m);
  if (method == "ebm") return ebm_estimate(d, it->second, m);
  throw DataError("unknown method '" + method + "'");
}

EvalReport run_benchmark(const std::vector<MiniDataset>& target_sets,
                         const CalibrationBundle& bundle,
                         const ImageEmbedder& embedder, const Manifest& m,
                         const std::vector<std::string>& methods) {
  EvalReport report;
  report.manifest_fp = manifest_fingerprint(m);
  report.seed = bundle.train_config.seed;

  // Target order must not matter: process in sorted dataset_id order.
  std::vector<const MiniDataset*> targets;
  for (const auto& d : target_sets) targets.push_back(&d);
  std::sort(targets.begin(), targets.end(),
            [](const MiniDataset* a, const MiniDataset* b) {
              return a->dataset_id < b->dataset_id;
            });

  std::vector<double> actuals;
  std::vector<bool> degenerate;
  for (const auto* d : targets) {
    F1Stats f = dataset_f1(*d, m);
    actuals.push_back(f.f1);
    degenerate.push_back(f.degenerate_empty);
  }

  for (const auto& method : methods) {
    if (auto it = bundle.failures.find(method); it != bundle.failures.end()) {
      report.failures.emplace(method, it->second);
      continue;
    }
    std::vector<double> estimates;
    try {
      for (const auto* d : targets)
        estimates.push_back(estimate_with_method(method, *d, bundle, embedder, m));
    } catch (const std::exception& e) {
      report.failures.emplace(method, e.what());
      continue;
    }
    for (size_t i = 0; i < targets.size(); ++i) {
      report.rows.push_back({method, targets[i]->dataset_id, actuals[i],
                             estimates[i], std::abs(actuals[i] - estimates[i]),
                             degenerate[i]});
    }
    MethodAggregate agg;
    agg.mae = mae(actuals, estimates);
    RhoResult rho = spearman_rho(actuals, estimates);
    agg.rho = rho.rho;
    agg.rho_constant_flag = rho.constant_input;
    report.aggregates.emplace(method, agg);
  }

  // Self-consistency: aggregates must recompute exactly from the rows.
  for (const auto& [method, agg] : report.aggregates) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& row : report.rows)
      if (row.method == method) {
        sum += row.abs_error;
        ++n;
      }
    if (n == 0 || std::abs(sum / static_cast<double>(n) - agg.mae) > 1e-12)
      throw std::logic_error("report aggregate does not match its rows");
  }
  return report;
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  char buf[96];
  out << "method,dataset_id,actual_f1,estimated_f1,abs_error\n";
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", row.actual_f1,
                  row.estimated_f1, row.abs_error);
    out << row.method << "," << row.dataset_id << "," << buf << "\n";
  }
  out << "\nmethod,mae,rho,flags\n";
  for (const auto& [method, agg] : r.aggregates) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", agg.mae, agg.rho);
    out << method << "," << buf << ","
        << (agg.rho_constant_flag ? "rho_constant" : "") << "\n";
  }
  for (const auto& [method, reason] : r.failures)
    out << method << ",,,failed: " << reason << "\n";
  return out.str();
}

std::string report_to_table(const EvalReport& r) {
  // Methods present in the report, in canonical order.
  std::vector<std::string> methods;
  for (const auto& name : kAllMethods)
    if (r.aggregates.count(name)) methods.push_back(name);

  std::set<std::string> families;
  for (const auto& row : r.rows) families.insert(family_of(row.dataset_id));

  auto line = [&](const std::string& label, const std::vector<double>& maes,
                  const std::vector<double>& rhos) {
    std::ostringstream os;
    os << std::left;
    os.width(18);
    os << label;
    char buf[32];
    for (double v : maes) {
      std::snprintf(buf, sizeof(buf), " %8.4f", v);
      os << buf;
    }
    os << "  |";
    for (double v : rhos) {
      std::snprintf(buf, sizeof(buf), " %8.4f", v);
      os << buf;
    }
    return os.str();
  };

  std::ostringstream out;
  out << std::left;
  out.width(18);
  out << "target";
  for (const auto& m : methods) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %8s", m.c_str());
    out << buf;
  }
  out << "  |";
  for (const auto& m : methods) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %8s", m.c_str());
    out << buf;
  }
  out << "\n";
  out << std::string(20 + 18 * methods.size() + 3, '-') << "\n";
  out << "(left block: MAE, lower is better; right block: Spearman rho, "
         "higher is better)\n";

  std::vector<double> fam_mae_acc(methods.size(), 0.0);
  std::vector<double> fam_rho_acc(methods.size(), 0.0);
  for (const auto& family : families) {
    std::vector<double> maes, rhos;
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<double> a, e;
      for (const auto& row : r.rows)
        if (row.method == methods[mi] && family_of(row.dataset_id) == family) {
          a.push_back(row.actual_f1);
          e.push_back(row.estimated_f1);
        }
      maes.push_back(mae(a, e));
      double rho = a.size() >= 2 ? spearman_rho(a, e).rho : 0.0;
      rhos.push_back(rho);
      fam_mae_acc[mi] += maes.back();
      fam_rho_acc[mi] += rho;
    }
    out << line(family, maes, rhos) << "\n";
  }

  std::vector<double> all_mae, all_rho;
  for (const auto& m : methods) {
    all_mae.push_back(r.aggregates.at(m).mae);
    all_rho.push_back(r.aggregates.at(m).rho);
  }
  out << line("All Avg. (rows)", all_mae, all_rho) << "\n";
  if (!families.empty()) {
    std::vector<double> fm(methods.size()), fr(methods.size());
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      fm[mi] = fam_mae_acc[mi] / static_cast<double>(families.size());
      fr[mi] = fam_rho_acc[mi] / static_cast<double>(families.size());
    }
    out << line("All Avg. (fam.)", fm, fr) << "\n";
  }
  for (const auto& [method, reason] : r.failures)
    out << method << ": FAILED (" << reason << ")\n";
  return out.str();
}

}  // namespace laneperf
