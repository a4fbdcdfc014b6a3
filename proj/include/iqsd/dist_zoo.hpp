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

// Maximum-likelihood fits of eight classical distributions to opinion
// scores, their bin-integrated histograms, a chi-square goodness-of-fit test
// and a per-family comparison against the alpha-stable fit.

#ifndef IQSD_DIST_ZOO_HPP_
#define IQSD_DIST_ZOO_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/weibull.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "iqsd/error.hpp"
#include "iqsd/histogram.hpp"
#include "iqsd/metrics.hpp"
#include "iqsd/nelder_mead.hpp"
#include "iqsd/stable.hpp"

namespace iqsd {

enum class Family {
  kGaussian,
  kHalfNormal,
  kExponential,
  kLognormal,
  kGamma,
  kGeneralizedPareto,
  kBeta,
  kWeibull,
};

inline constexpr std::array<Family, 8> kAllFamilies = {
    Family::kGaussian, Family::kHalfNormal,         Family::kExponential, Family::kLognormal,
    Family::kGamma,    Family::kGeneralizedPareto, Family::kBeta,        Family::kWeibull,
};

inline std::string family_name(Family f) {
  switch (f) {
    case Family::kGaussian: return "gaussian";
    case Family::kHalfNormal: return "half-normal";
    case Family::kExponential: return "exponential";
    case Family::kLognormal: return "lognormal";
    case Family::kGamma: return "gamma";
    case Family::kGeneralizedPareto: return "generalized-pareto";
    case Family::kBeta: return "beta";
    case Family::kWeibull: return "weibull";
  }
  return "unknown";
}

inline Family parse_family(const std::string& name) {
  for (Family f : kAllFamilies)
    if (family_name(f) == name) return f;
  throw DomainError("unknown distribution family '" + name + "'");
}

// Number of parameters estimated from the data (the support shift is a
// fixed convention, not an estimate).
inline std::size_t family_param_count(Family f) {
  switch (f) {
    case Family::kHalfNormal:
    case Family::kExponential: return 1;
    default: return 2;
  }
}

// Parameter layout per family:
//   gaussian {mean, sd}; half-normal {sigma}; exponential {rate};
//   lognormal {meanlog, sdlog}; gamma {shape, scale};
//   generalized-pareto {shape xi, scale}; beta {a, b}; weibull {shape, scale}.
// The fitted variable is y = (x - support_offset) / support_scale.
struct ClassicalFit {
  Family family = Family::kGaussian;
  std::vector<double> params;
  double support_offset = 0.0;
  double support_scale = 1.0;
  bool converged = true;
};

namespace zoo_detail {

inline constexpr double kBetaClamp = 1e-6;

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline void check_samples(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientDataError("distribution fit needs at least two samples");
  for (double v : x)
    if (!std::isfinite(v)) throw SupportError("non-finite sample");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw DegenerateDataError("all samples are equal");
}

// Gamma shape from s = ln(mean) - mean(ln y) by Newton iteration on
// ln k - digamma(k) = s, started from Minka's approximation.
inline double gamma_shape(double s, bool& converged) {
  double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  converged = false;
  for (int it = 0; it < 100; ++it) {
    const double g = std::log(k) - boost::math::digamma(k) - s;
    const double dg = 1.0 / k - boost::math::trigamma(k);
    double next = k - g / dg;
    if (!(next > 0.0)) next = 0.5 * k;
    const bool done = std::abs(next - k) <= 1e-12 * k;
    k = next;
    if (done) {
      converged = true;
      break;
    }
  }
  return k;
}

// Weibull shape: root of sum(z^k ln z)/sum(z^k) - 1/k - mean(ln z), z = y/max(y).
inline double weibull_shape(std::span<const double> z, bool& converged) {
  double mean_log = 0.0;
  for (double v : z) mean_log += std::log(v);
  mean_log /= static_cast<double>(z.size());
  auto h = [&](double k) {
    double num = 0.0, den = 0.0;
    for (double v : z) {
      const double w = std::pow(v, k);
      num += w * std::log(v);
      den += w;
    }
    return num / den - 1.0 / k - mean_log;
  };
  double lo = 1e-3, hi = 1e3;
  if (h(lo) > 0.0 || h(hi) < 0.0) {
    converged = false;
    return h(lo) > 0.0 ? lo : hi;
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(h, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  converged = iters < 200;
  return 0.5 * (r.first + r.second);
}

// Beta MLE by damped Newton iteration on the digamma score equations,
// started from the method of moments.
inline std::array<double, 2> beta_shapes(std::span<const double> z, bool& converged) {
  const double m = mean(z);
  double v = 0.0, s1 = 0.0, s2 = 0.0;
  for (double x : z) {
    v += (x - m) * (x - m);
    s1 += std::log(x);
    s2 += std::log1p(-x);
  }
  v /= static_cast<double>(z.size());
  s1 /= static_cast<double>(z.size());
  s2 /= static_cast<double>(z.size());
  const double common = std::max(m * (1.0 - m) / v - 1.0, 1e-3);
  double a = m * common, b = (1.0 - m) * common;
  converged = false;
  for (int it = 0; it < 200; ++it) {
    const double dab = boost::math::digamma(a + b);
    const double g1 = boost::math::digamma(a) - dab - s1;
    const double g2 = boost::math::digamma(b) - dab - s2;
    const double tab = boost::math::trigamma(a + b);
    const double j11 = boost::math::trigamma(a) - tab, j22 = boost::math::trigamma(b) - tab, j12 = -tab;
    const double det = j11 * j22 - j12 * j12;
    double da = (j22 * g1 - j12 * g2) / det;
    double db = (j11 * g2 - j12 * g1) / det;
    double step = 1.0;
    while (!(a - step * da > 0.0 && b - step * db > 0.0) && step > 1e-12) step *= 0.5;
    const double na = a - step * da, nb = b - step * db;
    const bool done = std::abs(na - a) <= 1e-12 * a && std::abs(nb - b) <= 1e-12 * b;
    a = na;
    b = nb;
    if (done) {
      converged = true;
      break;
    }
  }
  return {a, b};
}

// Generalized Pareto (location 0) negative log-likelihood.
inline double gpd_nll(std::span<const double> y, double xi, double sigma) {
  if (!(sigma > 0.0) || !(xi > -1.0)) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(y.size());
  double s = n * std::log(sigma);
  if (std::abs(xi) < 1e-10) {
    for (double v : y) s += v / sigma;
    return s;
  }
  for (double v : y) {
    const double t = 1.0 + xi * v / sigma;
    if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
    s += (1.0 + 1.0 / xi) * std::log(t);
  }
  return s;
}

inline std::array<double, 2> gpd_fit(std::span<const double> y, bool& converged) {
  const double m = mean(y);
  double v = 0.0;
  for (double x : y) v += (x - m) * (x - m);
  v /= static_cast<double>(y.size() - 1);
  const double ratio = m * m / v;
  double xi0 = std::clamp(0.5 * (1.0 - ratio), -0.45, 0.9);
  double sigma0 = 0.5 * m * (ratio + 1.0);
  const double ymax = *std::max_element(y.begin(), y.end());
  if (xi0 < 0.0) sigma0 = std::max(sigma0, -xi0 * ymax * 1.01);
  auto objective = [&](const std::vector<double>& w) { return gpd_nll(y, w[0], std::exp(w[1])); };
  NelderMeadOptions opt;
  opt.rel_tol = 1e-12;
  auto r = nelder_mead(objective, {xi0, std::log(sigma0)}, {0.1, 0.1}, opt);
  auto r2 = nelder_mead(objective, r.x, {0.05, 0.05}, opt);
  if (r2.value <= r.value) r = r2;
  converged = r.converged;
  return {r.x[0], std::exp(r.x[1])};
}

}  // namespace zoo_detail

// Maximum-likelihood fit of one classical family. Positive-support
// families (half-normal, exponential, lognormal, gamma, generalized-Pareto,
// Weibull) are fit to y = x - min(x) + 0.5; beta is fit to x/100 clamped to
// [1e-6, 1 - 1e-6].
inline ClassicalFit fit_classical(Family family, std::span<const double> samples) {
  zoo_detail::check_samples(samples);
  ClassicalFit fit;
  fit.family = family;
  const double n = static_cast<double>(samples.size());

  if (family == Family::kGaussian) {
    const double m = zoo_detail::mean(samples);
    double v = 0.0;
    for (double x : samples) v += (x - m) * (x - m);
    fit.params = {m, std::sqrt(v / n)};
    return fit;
  }

  std::vector<double> y(samples.begin(), samples.end());
  if (family == Family::kBeta) {
    fit.support_scale = 100.0;
    for (double& v : y) {
      if (v < 0.0 || v > 100.0) throw SupportError("beta family needs scores inside [0, 100]");
      v = std::clamp(v / 100.0, zoo_detail::kBetaClamp, 1.0 - zoo_detail::kBetaClamp);
    }
    const auto [a, b] = zoo_detail::beta_shapes(y, fit.converged);
    fit.params = {a, b};
    return fit;
  }

  fit.support_offset = *std::min_element(y.begin(), y.end()) - 0.5;
  for (double& v : y) v -= fit.support_offset;

  switch (family) {
    case Family::kHalfNormal: {
      double s = 0.0;
      for (double v : y) s += v * v;
      fit.params = {std::sqrt(s / n)};
      break;
    }
    case Family::kExponential:
      fit.params = {1.0 / zoo_detail::mean(y)};
      break;
    case Family::kLognormal: {
      double m = 0.0, s = 0.0;
      for (double v : y) m += std::log(v);
      m /= n;
      for (double v : y) s += (std::log(v) - m) * (std::log(v) - m);
      fit.params = {m, std::sqrt(s / n)};
      break;
    }
    case Family::kGamma: {
      const double m = zoo_detail::mean(y);
      double ml = 0.0;
      for (double v : y) ml += std::log(v);
      const double s = std::log(m) - ml / n;
      const double k = zoo_detail::gamma_shape(s, fit.converged);
      fit.params = {k, m / k};
      break;
    }
    case Family::kGeneralizedPareto: {
      const auto [xi, sigma] = zoo_detail::gpd_fit(y, fit.converged);
      fit.params = {xi, sigma};
      break;
    }
    case Family::kWeibull: {
      const double ymax = *std::max_element(y.begin(), y.end());
      std::vector<double> z(y);
      for (double& v : z) v /= ymax;
      const double k = zoo_detail::weibull_shape(z, fit.converged);
      double s = 0.0;
      for (double v : z) s += std::pow(v, k);
      fit.params = {k, ymax * std::pow(s / n, 1.0 / k)};
      break;
    }
    default:
      break;
  }
  return fit;
}

// Cumulative distribution of the fitted law at score x.
inline double classical_cdf(const ClassicalFit& fit, double x) {
  namespace bm = boost::math;
  const auto& p = fit.params;
  if (fit.family == Family::kGaussian) {
    if (!(p[1] > 0.0)) return x < p[0] ? 0.0 : 1.0;
    return bm::cdf(bm::normal(p[0], p[1]), std::clamp(x, p[0] - 60.0 * p[1], p[0] + 60.0 * p[1]));
  }
  const double y = (x - fit.support_offset) / fit.support_scale;
  if (fit.family == Family::kBeta) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    return bm::cdf(bm::beta_distribution<>(p[0], p[1]), y);
  }
  if (y <= 0.0) return 0.0;
  if (!std::isfinite(y)) return 1.0;
  switch (fit.family) {
    case Family::kHalfNormal: return std::erf(y / (p[0] * std::sqrt(2.0)));
    case Family::kExponential: return -std::expm1(-p[0] * y);
    case Family::kLognormal: return bm::cdf(bm::lognormal(p[0], p[1]), y);
    case Family::kGamma: return bm::cdf(bm::gamma_distribution<>(p[0], p[1]), y);
    case Family::kGeneralizedPareto: {
      const double xi = p[0], sigma = p[1];
      if (std::abs(xi) < 1e-10) return -std::expm1(-y / sigma);
      const double t = 1.0 + xi * y / sigma;
      if (t <= 0.0) return 1.0;
      return -std::expm1(-std::log(t) / xi);
    }
    case Family::kWeibull: return bm::cdf(bm::weibull(p[0], p[1]), y);
    default: return 0.0;
  }
}

// Bin-integrated density histogram of the fitted law, renormalized to the
// mass inside [edges.front(), edges.back()].
inline ScoreHistogram classical_histogram(const ClassicalFit& fit, const std::vector<double>& edges) {
  validate_edges(edges);
  std::vector<double> masses(edges.size() - 1);
  double prev = classical_cdf(fit, edges.front());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double next = classical_cdf(fit, edges[k + 1]);
    masses[k] = next - prev;
    prev = next;
  }
  return histogram_from_masses(edges, masses);
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 1;
  double critical = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::size_t bins_after_merge = 0;
};

// Pearson chi-square goodness-of-fit of observed per-bin counts against a
// model histogram. Adjacent bins are merged left to right until every
// expected count reaches min_expected; a short trailing group joins its
// left neighbour. dof = bins - 1 - n_fitted_params, floored at 1.
inline ChiSquareResult chi_square_gof(const std::vector<double>& observed, const ScoreHistogram& model,
                                      std::size_t n_fitted_params, double significance = 0.05,
                                      double min_expected = 5.0) {
  if (observed.size() != model.bins()) throw ShapeError("observed counts and model bins differ in length");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  if (!(total >= 1.0)) throw InsufficientDataError("chi-square test needs at least one observation");
  const auto masses = model.masses();

  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    o += observed[k];
    e += total * masses[k];
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  if (exp.size() < 2) throw InsufficientDataError("fewer than 2 bins remain after merging");

  ChiSquareResult r;
  r.bins_after_merge = exp.size();
  for (std::size_t k = 0; k < exp.size(); ++k) r.statistic += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
  const long dof = static_cast<long>(exp.size()) - 1 - static_cast<long>(n_fitted_params);
  r.dof = static_cast<int>(std::max(1L, dof));
  const boost::math::chi_squared dist(r.dof);
  r.critical = boost::math::quantile(dist, 1.0 - significance);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  r.reject = r.statistic > r.critical;
  return r;
}

// One row of the family comparison: mean histogram RMSE over images and the
// fraction of images whose chi-square test is not rejected at 0.05.
struct FamilyComparison {
  std::string family;
  double mean_rmse = 0.0;
  double pass_rate = 0.0;
  std::size_t images = 0;
  std::size_t failures = 0;
};

inline const char* kStableFamilyName = "alpha-stable";

// Fits the alpha-stable law and every classical family to each image's
// scores and ranks the families by mean RMSE (ascending). Images on which a
// family cannot be fit are counted as failures for that family only.
inline std::vector<FamilyComparison> compare_distributions(const std::vector<std::vector<double>>& per_image_scores,
                                                           const std::vector<double>& edges,
                                                           const StableFitOptions& stable_options = {}) {
  validate_edges(edges);
  std::vector<FamilyComparison> rows(kAllFamilies.size() + 1);
  rows[0].family = kStableFamilyName;
  for (std::size_t f = 0; f < kAllFamilies.size(); ++f) rows[f + 1].family = family_name(kAllFamilies[f]);
  std::vector<double> rmse_sum(rows.size(), 0.0), pass(rows.size(), 0.0);

  for (const auto& scores : per_image_scores) {
    const auto counts = bin_counts(edges, scores);
    const auto empirical = histogram_from_masses(edges, counts);
    auto record = [&](std::size_t row, auto&& make_model, std::size_t n_params) {
      try {
        const ScoreHistogram model = make_model();
        rmse_sum[row] += histogram_rmse(model, empirical);
        if (!chi_square_gof(counts, model, n_params).reject) pass[row] += 1.0;
        ++rows[row].images;
      } catch (const Error&) {
        ++rows[row].failures;
      }
    };
    record(0, [&] { return histogramize(fit_mle(scores, stable_options).params, edges); }, 4);
    for (std::size_t f = 0; f < kAllFamilies.size(); ++f) {
      const Family fam = kAllFamilies[f];
      record(f + 1, [&] { return classical_histogram(fit_classical(fam, scores), edges); },
             family_param_count(fam));
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].images == 0) {
      rows[r].mean_rmse = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    rows[r].mean_rmse = rmse_sum[r] / static_cast<double>(rows[r].images);
    rows[r].pass_rate = pass[r] / static_cast<double>(rows[r].images);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FamilyComparison& a, const FamilyComparison& b) {
    const bool an = std::isnan(a.mean_rmse), bn = std::isnan(b.mean_rmse);
    if (an != bn) return bn;
    return !an && a.mean_rmse < b.mean_rmse;
  });
  return rows;
}

}  // namespace iqsd

#endif  // IQSD_DIST_ZOO_HPP_
