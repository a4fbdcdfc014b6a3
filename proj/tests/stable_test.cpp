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

#include "iqsd/stable.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_support.hpp"

namespace iqsd {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(CharFn, UnitAtZero) {
  for (StableParams p : {StableParams{0.7, 0.4, 3, -2}, StableParams{1, -1, 2, 5}}) {
    const auto v = char_fn(0.0, p);
    EXPECT_EQ(v.real(), 1.0);
    EXPECT_EQ(v.imag(), 0.0);
  }
}

TEST(CharFn, GaussianAndCauchyCases) {
  const auto g = char_fn(1.0, {2, 0, 1, 0});
  EXPECT_NEAR(g.real(), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(g.imag(), 0.0, 1e-15);
  const auto c = char_fn(2.0, {1, 0, 1, 0});
  EXPECT_NEAR(c.real(), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(c.imag(), 0.0, 1e-15);
}

TEST(CharFn, BoundedAndHermitian) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> ua(0.05, 2.0), ub(-1, 1), ug(0.1, 20), um(-50, 50),
      ut(-30, 30);
  for (int i = 0; i < 500; ++i) {
    StableParams p{ua(gen), ub(gen), ug(gen), um(gen)};
    if (i % 7 == 0) p.alpha = 1.0;
    const double t = ut(gen);
    const auto a = char_fn(t, p);
    const auto b = char_fn(-t, p);
    EXPECT_LE(std::abs(a), 1.0 + 1e-15);
    EXPECT_NEAR(a.real(), b.real(), 1e-14);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-14);
  }
}

TEST(CharFn, RejectsInvalidParameters) {
  EXPECT_THROW(char_fn(1.0, {2.1, 0, 1, 0}), DomainError);
  EXPECT_THROW(char_fn(1.0, {0.0, 0, 1, 0}), DomainError);
  EXPECT_THROW(char_fn(1.0, {1.5, 1.2, 1, 0}), DomainError);
  EXPECT_THROW(char_fn(1.0, {1.5, 0, 0, 0}), DomainError);
  EXPECT_THROW(pdf(0.0, {1.5, 0, -1, 0}), DomainError);
  EXPECT_THROW(cdf(0.0, {1.5, 0, 1, NAN}), DomainError);
}

TEST(Pdf, ClosedFormsAtZero) {
  EXPECT_NEAR(pdf(0.0, {2, 0, 1, 0}), 1.0 / (2.0 * std::sqrt(kPi)), 1e-9);
  EXPECT_NEAR(pdf(0.0, {1, 0, 1, 0}), 1.0 / kPi, 1e-9);
  // Gamma(1 + 1/1.5) / pi to 30 digits with mpmath.
  EXPECT_NEAR(pdf(0.0, {1.5, 0, 1, 0}), 0.287352751452164445, 1e-9);
}

TEST(Pdf, GaussianShapeAwayFromCenter) {
  // alpha = 2 is normal with variance 2 gamma^2.
  const StableParams p{2, 0, 3, 40};
  const double var = 2.0 * 9.0;
  for (double x : {40.0, 43.0, 50.0, 60.0, 25.0}) {
    const double expected = std::exp(-(x - 40) * (x - 40) / (2 * var)) / std::sqrt(2 * kPi * var);
    EXPECT_NEAR(pdf(x, p), expected, 1e-9 * std::max(1.0, expected)) << x;
    EXPECT_NEAR(pdf(x, p) / expected, 1.0, 1e-6) << x;
  }
}

TEST(Pdf, CauchyShape) {
  const StableParams p{1, 0, 2, 10};
  for (double x : {10.0, 11.0, 30.0, -500.0}) {
    const double expected = 1.0 / (kPi * 2.0 * (1.0 + std::pow((x - 10) / 2.0, 2)));
    EXPECT_NEAR(pdf(x, p) / expected, 1.0, 1e-6) << x;
  }
}

TEST(Pdf, FourierAndTailRoutesAgree) {
  // The two independent representations of the same density.
  for (double a : {0.6, 0.9, 1.0, 1.3, 1.7, 2.0}) {
    for (double b : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
      for (double z : {-4.0, -1.0, 0.0, 0.5, 2.5}) {
        const auto f = stable_detail::pdf_fourier_std(z, a, b);
        ASSERT_TRUE(f.converged);
        EXPECT_NEAR(f.value, stable_detail::pdf_zolotarev_std(z, a, b), 2e-9)
            << "alpha=" << a << " beta=" << b << " z=" << z;
        const auto c = stable_detail::cdf_fourier_std(z, a, b);
        EXPECT_NEAR(c.value, stable_detail::cdf_zolotarev_std(z, a, b)[0], 2e-9)
            << "alpha=" << a << " beta=" << b << " z=" << z;
      }
    }
  }
}

TEST(Pdf, NonNegativeEverywhere) {
  for (double a : {0.5, 1.0, 1.2, 1.9, 2.0})
    for (double b : {-1.0, 0.3, 1.0})
      for (double x = -300; x <= 300; x += 7.3) EXPECT_GE(pdf(x, {a, b, 2, 1}), 0.0);
}

TEST(Pdf, IntegratesToOneOverRealLine) {
  for (double a : {0.6, 1.0, 1.3, 1.7, 2.0}) {
    for (double b : {-1.0, 0.0, 0.7}) {
      const double mass = testing::stable_total_mass({a, b, 1.0, 0.0});
      EXPECT_NEAR(mass, 1.0, 1e-4) << "alpha=" << a << " beta=" << b;
    }
  }
}

TEST(Pdf, WindowOf200ScalesHoldsAlmostAllMassForLightTails) {
  // Only for alpha >= 1.7 does [mu - 200 gamma, mu + 200 gamma] hold all but
  // 1e-4 of the mass; heavier tails leave more outside (checked above over R).
  for (double a : {1.7, 2.0}) {
    for (double b : {-1.0, 0.0, 0.7}) {
      const StableParams p{a, b, 1.5, 20};
      std::vector<double> pts;
      for (int i = 0; i <= 80; ++i) pts.push_back(p.mu - 200 * p.gamma + 400 * p.gamma * i / 80.0);
      const double mass = integrate([&](double x) { return pdf(x, p); }, pts, 1e-12, 1e-11).value;
      EXPECT_GE(mass, 1 - 1e-4);
      EXPECT_LE(mass, 1 + 1e-4);
    }
  }
}

TEST(Pdf, SymmetryReflectionAndScaling) {
  for (double a : {0.8, 1.0, 1.4, 2.0}) {
    for (double x : {0.3, 1.7, 6.0}) {
      const StableParams sym{a, 0, 2.5, 30};
      EXPECT_NEAR(pdf(30 + x, sym), pdf(30 - x, sym), 1e-8);
      for (double b : {-0.8, 0.4}) {
        EXPECT_NEAR(pdf(x, {a, b, 1.3, 0}), pdf(-x, {a, -b, 1.3, 0}), 1e-8);
        if (a != 1.0) {
          const StableParams p{a, b, 4.0, 12.0};
          const double y = 12.0 + 4.0 * x;
          EXPECT_NEAR(pdf(y, p), pdf((y - 12.0) / 4.0, {a, b, 1, 0}) / 4.0, 1e-8);
        }
      }
    }
  }
}

TEST(Cdf, SpecialValues) {
  for (double a : {0.7, 1.0, 1.5, 2.0}) EXPECT_NEAR(cdf(17.0, {a, 0, 3, 17}), 0.5, 1e-9);
  EXPECT_NEAR(cdf(2.0, {2, 0, 1, 0}), 0.921350396474857435, 1e-9);
  EXPECT_NEAR(cdf(3.0, {1, 0, 1, 0}), 0.5 + std::atan(3.0) / kPi, 1e-9);
}

TEST(Cdf, FarLeftTailIsNegligible) {
  // At alpha around 0.6 the mass below -1e9 is itself about 1.5e-6, so the
  // bound is checked for alpha >= 0.8.
  for (double a : {0.8, 1.0, 1.3, 1.7, 2.0})
    for (double b : {-1.0, 0.0, 0.5, 1.0}) EXPECT_LE(cdf(-1e9, {a, b, 1, 0}), 1e-6) << a << " " << b;
  EXPECT_EQ(cdf(-INFINITY, {1.5, 0, 1, 0}), 0.0);
  EXPECT_EQ(cdf(INFINITY, {1.5, 0, 1, 0}), 1.0);
}

TEST(Cdf, MonotoneOnGrid) {
  for (StableParams p : {StableParams{0.6, 0.7, 5, 50}, StableParams{1, -0.5, 5, 50},
                         StableParams{1.6, -0.3, 8, 60}, StableParams{2, 0, 10, 50}}) {
    double prev = 0.0;
    for (double x = -400; x <= 500; x += 2.5) {
      const double f = cdf(x, p);
      EXPECT_GE(f, prev - 1e-10) << x;
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      prev = f;
    }
  }
}

TEST(Cdf, DerivativeMatchesPdf) {
  const StableParams p{1.3, 0.5, 4, 50};
  for (double x : {40.0, 50.0, 58.0}) {
    const double h = 1e-3;
    EXPECT_NEAR((cdf(x + h, p) - cdf(x - h, p)) / (2 * h), pdf(x, p), 1e-7);
  }
}

TEST(Histogramize, NearPointMass) {
  const auto h = histogramize({2, 0, 0.01, 55}, default_edges());
  ASSERT_EQ(h.bins(), 10u);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(h.densities[k], k == 5 ? 0.1 : 0.0, 1e-12);
}

TEST(Histogramize, SymmetricAboutCenter) {
  const auto h = histogramize({2, 0, 1, 50}, default_edges());
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(h.densities[k], h.densities[9 - k], 1e-12);
  const auto g = histogramize({1.3, 0, 12, 50}, default_edges());
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(g.densities[k], g.densities[9 - k], 1e-10);
}

TEST(Histogramize, NormalizedAndMatchesCdfDifferences) {
  const StableParams p{1.2, 0.6, 9, 35};
  const auto edges = default_edges();
  const auto h = histogramize(p, edges);
  double total = 0;
  for (double m : h.masses()) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const double inside = cdf(100, p) - cdf(0, p);
  for (std::size_t k = 0; k < h.bins(); ++k)
    EXPECT_NEAR(h.masses()[k], (cdf(edges[k + 1], p) - cdf(edges[k], p)) / inside, 1e-12);
}

TEST(Histogramize, AgreesWithMonteCarloDraws) {
  // Sampler oracle: 1e6 draws, per-bin agreement within 3 standard errors.
  const StableParams p{1.5, -0.3, 8, 60};
  const auto edges = default_edges();
  const auto h = histogramize(p, edges);
  double n_in = 0;
  const auto mc = testing::mc_masses(sample(p, 1000000, 424242), edges, n_in);
  const auto masses = h.masses();
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const double se = std::sqrt(std::max(masses[k] * (1 - masses[k]), 1e-12) / n_in);
    EXPECT_LE(std::abs(mc[k] - masses[k]), 3 * se) << "bin " << k;
  }
}

TEST(Histogramize, DegenerateSupport) {
  EXPECT_THROW(histogramize({2, 0, 0.5, 500}, default_edges()), DegenerateDataError);
  EXPECT_THROW(histogramize({2, 0, 1, 50}, {0, 10, 10, 20}), ShapeError);
}

TEST(Sample, GaussianMeanWithinClt) {
  const auto x = sample({2, 0, 1, 0}, 100000, 99);
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  EXPECT_LE(std::abs(m), 0.02);
}

TEST(Sample, DeterministicPerSeed) {
  const StableParams p{1.2, 0.4, 3, 7};
  EXPECT_EQ(sample(p, 1000, 5), sample(p, 1000, 5));
  EXPECT_NE(sample(p, 1000, 5), sample(p, 1000, 6));
  const StableParams q{1, 0.4, 3, 7};
  EXPECT_EQ(sample(q, 1000, 5), sample(q, 1000, 5));
}

TEST(Sample, GaussianCaseMatchesNormalSamplerByKs) {
  const std::size_t n = 20000;
  const auto x = sample({2, 0, 1, 0}, n, 2024);
  std::mt19937_64 gen(77);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  std::vector<double> y(n);
  for (double& v : y) v = normal(gen);
  // 1% critical value of the two-sample statistic.
  const double critical = 1.628 * std::sqrt(2.0 / static_cast<double>(n));
  EXPECT_LT(testing::ks_statistic(x, y), critical);
}

TEST(Sample, AlphaOneLocationCorrection) {
  // For alpha = 1 the scaled law carries a (2/pi) beta gamma log(gamma)
  // shift; sampler and density must agree on it.
  const StableParams p{1, 0.8, 5, 50};
  const auto edges = std::vector<double>{0, 20, 40, 45, 50, 55, 60, 80, 100};
  const auto h = histogramize(p, edges);
  double n_in = 0;
  const auto mc = testing::mc_masses(sample(p, 400000, 8), edges, n_in);
  const auto masses = h.masses();
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const double se = std::sqrt(masses[k] * (1 - masses[k]) / n_in);
    EXPECT_LE(std::abs(mc[k] - masses[k]), 4 * se) << k;
  }
}

TEST(QuantileInit, GaussianDrawsGiveAlphaNearTwo) {
  const auto x = sample({2, 0, 1, 0}, 10000, 3);
  const auto p = quantile_init(x);
  EXPECT_GE(p.alpha, 1.9);
  EXPECT_TRUE(is_valid(p));
}

TEST(QuantileInit, ScaleAndShiftEquivariance) {
  const auto x = sample({1.5, 0.3, 2, 10}, 4000, 17);
  const auto p = quantile_init(x);
  ASSERT_NE(p.alpha, 1.0);
  const double c = 3.5, d = -12.0;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i] + d;
  const auto q = quantile_init(y);
  EXPECT_NEAR(q.alpha, p.alpha, 1e-12);
  EXPECT_NEAR(q.beta, p.beta, 1e-12);
  EXPECT_NEAR(q.gamma, c * p.gamma, 1e-9);
  EXPECT_NEAR(q.mu, c * p.mu + d, 1e-9);
}

TEST(QuantileInit, Degenerate) {
  EXPECT_THROW(quantile_init(std::vector<double>(5, 42.0)), DegenerateDataError);
  EXPECT_THROW(quantile_init(std::vector<double>(50, 42.0)), DegenerateDataError);
  EXPECT_THROW(quantile_init(std::vector<double>{1, 2, 3}), InsufficientDataError);
}

TEST(FitMle, RecoversSkewedHeavyTailedLaw) {
  const StableParams truth{1.6, -0.3, 8, 60};
  const auto x = sample(truth, 5000, derive_seed(20240, 0));
  const auto fit = fit_mle(x);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.params.alpha, truth.alpha, 0.1);
  EXPECT_NEAR(fit.params.beta, truth.beta, 0.15);
  EXPECT_NEAR(fit.params.gamma, truth.gamma, 0.5);
  EXPECT_NEAR(fit.params.mu, truth.mu, 1.0);
  EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
}

TEST(FitMle, GaussianDataGivesAlphaNearTwo) {
  const auto x = sample({2, 0, 5, 50}, 5000, 31);
  const auto fit = fit_mle(x);
  EXPECT_GE(fit.params.alpha, 1.95);
  EXPECT_NEAR(fit.params.gamma, 5.0, 0.25);
  EXPECT_NEAR(fit.params.mu, 50.0, 0.3);
}

TEST(FitMle, GridLikelihoodTracksExactLikelihood) {
  const auto x = sample({1.4, 0.2, 6, 50}, 2000, 12);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  StableFitOptions grid;
  StableFitOptions exact;
  exact.exact_limit = sorted.size();
  for (StableParams p : {StableParams{1.4, 0.2, 6, 50}, StableParams{1.8, -0.5, 5, 52}}) {
    const double a = stable_detail::log_likelihood(sorted, p, grid);
    const double b = stable_detail::log_likelihood(sorted, p, exact);
    EXPECT_NEAR(a, b, 1e-6 * std::abs(b));
  }
}

TEST(FitMle, SmallSampleNeverWorseThanInitializer) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto x = sample({1.7, 0.0, 10, 55}, 60, seed);
    const auto fit = fit_mle(x);
    EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
    EXPECT_TRUE(is_valid(fit.params));
  }
}

TEST(FitMle, DegenerateSample) {
  EXPECT_THROW(fit_mle(std::vector<double>(30, 55.0)), DegenerateDataError);
  EXPECT_THROW(fit_mle(std::vector<double>(5, 55.0)), DegenerateDataError);
}

}  // namespace
}  // namespace iqsd
