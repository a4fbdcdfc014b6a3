// Copyright 2026 The IQSD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IQSD_METRICS_HPP_
#define IQSD_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "iqsd/error.hpp"
#include "iqsd/histogram.hpp"

namespace iqsd {

// Distances between a predicted and an empirical score histogram. RMSE,
// Chebyshev and cosine act on the density vectors; JSD (natural log) and the
// chi-square distance act on the per-bin mass vectors.
struct HistogramMetrics {
  double jsd = 0.0;
  double rmse = 0.0;
  double chebyshev = 0.0;
  double chi_square = 0.0;
  double cosine = 1.0;
};

// Root mean squared difference of the two density vectors.
inline double histogram_rmse(const ScoreHistogram& a, const ScoreHistogram& b) {
  if (!same_edges(a, b)) throw ShapeError("histograms have different edges");
  double s = 0.0;
  for (std::size_t k = 0; k < a.bins(); ++k) {
    const double d = a.densities[k] - b.densities[k];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.bins()));
}

inline HistogramMetrics histogram_metrics(const ScoreHistogram& predicted, const ScoreHistogram& empirical) {
  if (!same_edges(predicted, empirical)) throw ShapeError("histograms have different edges");
  HistogramMetrics m;
  m.rmse = histogram_rmse(predicted, empirical);

  const auto& p = predicted.densities;
  const auto& q = empirical.densities;
  double dot = 0.0, np = 0.0, nq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    m.chebyshev = std::max(m.chebyshev, std::abs(p[k] - q[k]));
    dot += p[k] * q[k];
    np += p[k] * p[k];
    nq += q[k] * q[k];
  }
  m.cosine = (np > 0.0 && nq > 0.0) ? dot / std::sqrt(np * nq) : 0.0;

  const auto pm = predicted.masses();
  const auto qm = empirical.masses();
  m.jsd = 0.0;
  m.chi_square = 0.0;
  for (std::size_t k = 0; k < pm.size(); ++k) {
    const double mid = 0.5 * (pm[k] + qm[k]);
    if (pm[k] > 0.0) m.jsd += 0.5 * pm[k] * std::log(pm[k] / mid);
    if (qm[k] > 0.0) m.jsd += 0.5 * qm[k] * std::log(qm[k] / mid);
    const double s = pm[k] + qm[k];
    if (s > 0.0) m.chi_square += (pm[k] - qm[k]) * (pm[k] - qm[k]) / s;
  }
  m.jsd = std::clamp(m.jsd, 0.0, std::log(2.0));
  return m;
}

// A correlation that may be undefined (constant input); `defined` is false
// and `value` is 0 in that case.
struct Correlation {
  double value = 0.0;
  bool defined = false;
};

inline Correlation pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("correlation inputs differ in length");
  if (a.size() < 2) throw InsufficientDataError("correlation needs at least two values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), true};
}

// 1-based ranks with ties replaced by their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation (Pearson correlation of average ranks).
inline Correlation srcc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("correlation inputs differ in length");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

struct ParamErrorMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  // Mean of |pred - truth| / |truth| as a fraction, over entries with
  // |truth| >= 1e-6.
  double mape = 0.0;
  std::size_t mape_excluded = 0;
  double correlation = 0.0;
  bool correlation_defined = false;
  double cosine = 0.0;
};

inline ParamErrorMetrics param_error_metrics(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw ShapeError("truth and prediction lengths differ");
  if (truth.size() < 2) throw InsufficientDataError("parameter metrics need at least two images");
  ParamErrorMetrics m;
  const double n = static_cast<double>(truth.size());
  double se = 0.0, ae = 0.0, ape = 0.0, dot = 0.0, nt = 0.0, np = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = pred[i] - truth[i];
    se += d * d;
    ae += std::abs(d);
    if (std::abs(truth[i]) < 1e-6) {
      ++m.mape_excluded;
    } else {
      ape += std::abs(d) / std::abs(truth[i]);
      ++counted;
    }
    dot += truth[i] * pred[i];
    nt += truth[i] * truth[i];
    np += pred[i] * pred[i];
  }
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  m.mape = counted > 0 ? ape / static_cast<double>(counted) : 0.0;
  const auto c = pearson(truth, pred);
  m.correlation = c.value;
  m.correlation_defined = c.defined;
  m.cosine = (nt > 0.0 && np > 0.0) ? std::clamp(dot / std::sqrt(nt * np), -1.0, 1.0) : 0.0;
  return m;
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); 0 for fewer than two values.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace iqsd

#endif  // IQSD_METRICS_HPP_
