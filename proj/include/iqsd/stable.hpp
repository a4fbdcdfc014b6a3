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

// Alpha-stable law S(alpha, beta, gamma, mu) with characteristic function
//
//   phi(t) = exp{ i mu t - (gamma |t|)^alpha [1 - i beta sgn(t) tan(pi alpha / 2)] }  alpha != 1
//   phi(t) = exp{ i mu t - gamma |t| [1 + i beta sgn(t) (2/pi) log|t|] }             alpha == 1
//
// gamma is a scale: for alpha == 2 the law is normal with variance 2 gamma^2.
// The alpha != 1 branch is discontinuous at alpha == 1 when beta != 0; both
// branches are evaluated exactly.
//
// Densities and distribution functions are computed on the standardized
// variable z (gamma = 1, mu = 0) by inverting phi with adaptive
// Gauss-Kronrod quadrature. Far tails, and regimes where the Fourier
// integrand oscillates too much to integrate cheaply, fall back to the
// Zolotarev integral representation, which is non-oscillatory.

#ifndef IQSD_STABLE_HPP_
#define IQSD_STABLE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "iqsd/error.hpp"
#include "iqsd/histogram.hpp"
#include "iqsd/nelder_mead.hpp"
#include "iqsd/quadrature.hpp"
#include "iqsd/rng.hpp"

namespace iqsd {

struct StableParams {
  double alpha = 2.0;  // tail exponent, (0, 2]
  double beta = 0.0;   // skewness, [-1, 1]
  double gamma = 1.0;  // scale, > 0
  double mu = 0.0;     // location

  bool operator==(const StableParams&) const = default;
};

inline bool is_valid(const StableParams& p) {
  return p.alpha > 0.0 && p.alpha <= 2.0 && p.beta >= -1.0 && p.beta <= 1.0 && p.gamma > 0.0 &&
         std::isfinite(p.gamma) && std::isfinite(p.mu);
}

inline void validate(const StableParams& p) {
  if (!is_valid(p)) {
    throw DomainError("invalid stable parameters (alpha=" + std::to_string(p.alpha) +
                      ", beta=" + std::to_string(p.beta) + ", gamma=" + std::to_string(p.gamma) +
                      ", mu=" + std::to_string(p.mu) + ")");
  }
}

inline std::complex<double> char_fn(double t, const StableParams& p) {
  validate(p);
  if (t == 0.0) return {1.0, 0.0};
  constexpr double pi = std::numbers::pi;
  const double sgn = t > 0 ? 1.0 : -1.0;
  const double at = std::abs(t);
  std::complex<double> exponent;
  if (p.alpha == 1.0) {
    const double scaled = p.gamma * at;
    exponent = {-scaled, p.mu * t - scaled * p.beta * sgn * (2.0 / pi) * std::log(at)};
  } else {
    const double scaled = std::pow(p.gamma * at, p.alpha);
    exponent = {-scaled, p.mu * t + scaled * p.beta * sgn * std::tan(pi * p.alpha / 2.0)};
  }
  return std::exp(exponent);
}

namespace stable_detail {

constexpr double kPi = std::numbers::pi;
// exp(-28) < 1e-12: the Fourier integrand envelope is negligible beyond t^alpha = 28.
constexpr double kEnvelopeExponent = 28.0;
constexpr double kFourierAbsTol = 1e-10;
// Rough phase range (radians) beyond which Fourier inversion is abandoned.
constexpr double kFourierPhaseBudget = 3000.0;
constexpr int kMaxPanels = 20000;
// Within this distance of alpha = 1 the Zolotarev representation of the
// continuous parameterization is evaluated at alpha = 1.
constexpr double kZolotarevNearOne = 0.005;

inline double skew_coefficient(double alpha, double beta) {
  return alpha == 1.0 ? 0.0 : beta * std::tan(kPi * alpha / 2.0);
}

// Maps x to the standardized variable z such that X = gamma Z + shift.
inline double standardize(double x, const StableParams& p) {
  double shift = p.mu;
  if (p.alpha == 1.0) shift += (2.0 / kPi) * p.beta * p.gamma * std::log(p.gamma);
  return (x - shift) / p.gamma;
}

inline double fourier_truncation(double alpha) {
  return std::pow(kEnvelopeExponent, 1.0 / alpha);
}

inline double fourier_phase_range(double z, double alpha, double beta) {
  const double T = fourier_truncation(alpha);
  const double k = alpha == 1.0 ? (2.0 / kPi) * std::abs(beta) * std::max(1.0, std::log(T))
                                : std::abs(skew_coefficient(alpha, beta));
  return T * (std::abs(z) + 1.0) + k * std::pow(T, alpha);
}

inline std::vector<double> fourier_panels(double z, double alpha, double beta) {
  const double T = fourier_truncation(alpha);
  const int n = std::clamp(static_cast<int>(std::ceil(fourier_phase_range(z, alpha, beta) / kPi)),
                           8, 4000);
  std::vector<double> pts(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) pts[static_cast<std::size_t>(i)] = T * i / n;
  return pts;
}

// (1/pi) int_0^T Re[phi(t) e^{-itz}] dt for the standardized law.
inline QuadResult pdf_fourier_std(double z, double alpha, double beta) {
  const auto pts = fourier_panels(z, alpha, beta);
  QuadResult r;
  if (alpha == 1.0) {
    const double c = (2.0 / kPi) * beta;
    r = integrate(
        [&](double t) {
          if (t <= 0.0) return std::cos(0.0);
          return std::exp(-t) * std::cos(t * z + c * t * std::log(t));
        },
        pts, kFourierAbsTol, 1e-12, kMaxPanels);
  } else {
    const double k = skew_coefficient(alpha, beta);
    r = integrate(
        [&](double t) {
          const double ta = std::pow(t, alpha);
          return std::exp(-ta) * std::cos(k * ta - t * z);
        },
        pts, kFourierAbsTol, 1e-12, kMaxPanels);
  }
  r.value /= kPi;
  r.error /= kPi;
  return r;
}

// Gil-Pelaez: 1/2 - (1/pi) int_0^T Im[e^{-itz} phi(t)] / t dt.
inline QuadResult cdf_fourier_std(double z, double alpha, double beta) {
  const auto pts = fourier_panels(z, alpha, beta);
  QuadResult r;
  if (alpha == 1.0) {
    const double c = (2.0 / kPi) * beta;
    r = integrate(
        [&](double t) { return std::exp(-t) * std::sin(-c * t * std::log(t) - t * z) / t; }, pts,
        kFourierAbsTol, 1e-12, kMaxPanels);
  } else {
    const double k = skew_coefficient(alpha, beta);
    r = integrate(
        [&](double t) {
          const double ta = std::pow(t, alpha);
          return std::exp(-ta) * std::sin(k * ta - t * z) / t;
        },
        pts, kFourierAbsTol, 1e-12, kMaxPanels);
  }
  r.value = 0.5 - r.value / kPi;
  r.error /= kPi;
  return r;
}

// Zolotarev representation in the parameterization that is continuous in
// alpha (location x0 = z + zeta for alpha != 1).
class Zolotarev {
 public:
  Zolotarev(double x0, double alpha, double beta) : alpha_(alpha), beta_(beta), x0_(x0) {
    if (alpha_ != 1.0 && std::abs(alpha_ - 1.0) < kZolotarevNearOne) alpha_ = 1.0;
    if (alpha_ != 1.0) {
      zeta_ = -beta_ * std::tan(kPi * alpha_ / 2.0);
      theta0_ = std::atan(beta_ * std::tan(kPi * alpha_ / 2.0)) / alpha_;
    }
  }

  double pdf() const {
    if (alpha_ == 1.0) {
      if (beta_ == 0.0) return 1.0 / (kPi * (1.0 + x0_ * x0_));
      if (beta_ < 0.0) return Zolotarev(-x0_, 1.0, -beta_).pdf();
    } else {
      if (at_zeta()) {
        return std::tgamma(1.0 + 1.0 / alpha_) * std::cos(theta0_) /
               (kPi * std::pow(1.0 + zeta_ * zeta_, 1.0 / (2.0 * alpha_)));
      }
      if (x0_ < zeta_) return Zolotarev(-x0_, alpha_, -beta_).pdf();
      if (std::abs(theta0_ + kPi / 2.0) < 1e-14) return 0.0;
    }
    const double integral = integrate_over_theta([](double g) { return g * std::exp(-g); });
    const double c2 = alpha_ == 1.0 ? 1.0 / (2.0 * std::abs(beta_))
                                    : alpha_ / (kPi * std::abs(alpha_ - 1.0) * (x0_ - zeta_));
    return std::max(0.0, c2 * integral);
  }

  // {F(x0), 1 - F(x0)}, each computed without cancellation.
  std::array<double, 2> cdf_pair() const {
    if (alpha_ == 1.0) {
      if (beta_ == 0.0) {
        const double lower = 0.5 + std::atan(x0_) / kPi;
        const double upper = 0.5 - std::atan(x0_) / kPi;
        return {x0_ < 0 ? std::atan2(1.0, -x0_) / kPi : lower,
                x0_ > 0 ? std::atan2(1.0, x0_) / kPi : upper};
      }
      if (beta_ < 0.0) {
        const auto r = Zolotarev(-x0_, 1.0, -beta_).cdf_pair();
        return {r[1], r[0]};
      }
      const double below = integrate_over_theta([](double g) { return std::exp(-g); }) / kPi;
      const double above = integrate_over_theta([](double g) { return -std::expm1(-g); }) / kPi;
      return {below, above};
    }
    if (at_zeta()) {
      const double f = (kPi / 2.0 - theta0_) / kPi;
      return {f, 1.0 - f};
    }
    if (x0_ < zeta_) {
      const auto r = Zolotarev(-x0_, alpha_, -beta_).cdf_pair();
      return {r[1], r[0]};
    }
    if (alpha_ > 1.0) {
      const double above = integrate_over_theta([](double g) { return std::exp(-g); }) / kPi;
      return {1.0 - above, above};
    }
    const double c1 = (kPi / 2.0 - theta0_) / kPi;
    if (std::abs(theta0_ + kPi / 2.0) < 1e-14) return {1.0, 0.0};
    const double below = c1 + integrate_over_theta([](double g) { return std::exp(-g); }) / kPi;
    const double above = integrate_over_theta([](double g) { return -std::expm1(-g); }) / kPi;
    return {below, above};
  }

 private:
  bool at_zeta() const {
    return std::abs(x0_ - zeta_) <= 1e-12 * std::max(1.0, std::abs(zeta_));
  }

  double lower_theta() const { return alpha_ == 1.0 ? -kPi / 2.0 : -theta0_; }

  // log g(theta); g is monotone on (lower_theta, pi/2).
  double log_g(double theta) const {
    if (alpha_ == 1.0) {
      const double a = kPi / 2.0 + beta_ * theta;
      return -kPi * x0_ / (2.0 * beta_) + std::log(2.0 / kPi) + std::log(a) - std::log(std::cos(theta)) +
             a * std::tan(theta) / beta_;
    }
    const double am1 = alpha_ - 1.0;
    const double at0 = alpha_ * theta0_;
    return (alpha_ / am1) * std::log(x0_ - zeta_) + std::log(std::cos(at0)) / am1 +
           (alpha_ / am1) * (std::log(std::cos(theta)) - std::log(std::sin(alpha_ * (theta0_ + theta)))) +
           std::log(std::cos(at0 + am1 * theta)) - std::log(std::cos(theta));
  }

  double g_at(double theta) const {
    const double lg = log_g(theta);
    if (std::isnan(lg)) return std::numeric_limits<double>::infinity();
    return std::exp(std::min(lg, 709.0));
  }

  // Finds theta with log g(theta) == level by bisection, if bracketed.
  bool solve_level(double level, double lo, double hi, double& out) const {
    double flo = log_g(lo) - level;
    double fhi = log_g(hi) - level;
    if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0) == (fhi > 0)) return false;
    for (int i = 0; i < 48 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++i) {
      const double mid = 0.5 * (lo + hi);
      const double fm = log_g(mid) - level;
      if (!std::isfinite(fm)) return false;
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    out = 0.5 * (lo + hi);
    return true;
  }

  template <class H>
  double integrate_over_theta(H h) const {
    const double a = lower_theta();
    const double b = kPi / 2.0;
    const double span = b - a;
    const double lo = a + 1e-12 * span;
    const double hi = b - 1e-12 * span;
    std::vector<double> pts = {a, b};
    for (double level : {-18.0, -7.0, -2.3, 0.0, 1.6, 3.4, 6.6}) {
      double t;
      if (solve_level(level, lo, hi, t)) pts.push_back(t);
    }
    std::sort(pts.begin(), pts.end());
    auto f = [&](double theta) {
      const double g = g_at(theta);
      const double v = h(g);
      return std::isfinite(v) ? v : 0.0;
    };
    const auto r = integrate(f, pts, 1e-300, 1e-10, 3000);
    // Round-off can stall the last digits of very small integrals.
    if (!r.converged && !(r.error <= 1e-7 * std::abs(r.value)))
      throw NumericalError("stable tail integral did not converge", r.error);
    return r.value;
  }

  double alpha_, beta_, x0_;
  double zeta_ = 0.0;
  double theta0_ = 0.0;
};

inline double pdf_zolotarev_std(double z, double alpha, double beta) {
  const double x0 = alpha == 1.0 ? z : z - beta * std::tan(kPi * alpha / 2.0);
  return Zolotarev(x0, alpha, beta).pdf();
}

inline std::array<double, 2> cdf_zolotarev_std(double z, double alpha, double beta) {
  const double x0 = alpha == 1.0 ? z : z - beta * std::tan(kPi * alpha / 2.0);
  return Zolotarev(x0, alpha, beta).cdf_pair();
}

// Below this density the Fourier route's absolute tolerance no longer
// guarantees relative accuracy, and the tail representation is used.
constexpr double kFourierFloor = 1e-6;

inline double pdf_std(double z, double alpha, double beta) {
  if (fourier_phase_range(z, alpha, beta) <= kFourierPhaseBudget) {
    const auto r = pdf_fourier_std(z, alpha, beta);
    if (!r.converged) throw NumericalError("stable density quadrature did not converge", r.error);
    if (r.value > kFourierFloor) return r.value;
  }
  return pdf_zolotarev_std(z, alpha, beta);
}

inline double cdf_std(double z, double alpha, double beta) {
  if (fourier_phase_range(z, alpha, beta) <= kFourierPhaseBudget) {
    const auto r = cdf_fourier_std(z, alpha, beta);
    if (!r.converged) throw NumericalError("stable cdf quadrature did not converge", r.error);
    if (r.value > kFourierFloor && r.value < 1.0 - kFourierFloor) return r.value;
  }
  return std::clamp(cdf_zolotarev_std(z, alpha, beta)[0], 0.0, 1.0);
}

}  // namespace stable_detail

// Density f(x); never negative.
inline double pdf(double x, const StableParams& p) {
  validate(p);
  if (!std::isfinite(x)) throw DomainError("stable pdf needs a finite argument");
  const double z = stable_detail::standardize(x, p);
  return std::max(0.0, stable_detail::pdf_std(z, p.alpha, p.beta)) / p.gamma;
}

inline double cdf(double x, const StableParams& p) {
  validate(p);
  if (std::isnan(x)) throw DomainError("stable cdf of NaN");
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  return stable_detail::cdf_std(stable_detail::standardize(x, p), p.alpha, p.beta);
}

// Bin-integrated density histogram, renormalized by the mass inside
// [edges.front(), edges.back()].
inline ScoreHistogram histogramize(const StableParams& p, const std::vector<double>& edges) {
  validate(p);
  validate_edges(edges);
  std::vector<double> cdfs(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) cdfs[i] = cdf(edges[i], p);
  std::vector<double> masses(edges.size() - 1);
  for (std::size_t k = 0; k < masses.size(); ++k) masses[k] = std::max(0.0, cdfs[k + 1] - cdfs[k]);
  return histogram_from_masses(edges, std::move(masses), 1e-6);
}

// Chambers-Mallows-Stuck draws, deterministic in `seed`.
inline std::vector<double> sample(const StableParams& p, std::size_t n, std::uint64_t seed) {
  validate(p);
  using stable_detail::kPi;
  Rng rng(seed);
  std::vector<double> out(n);
  if (p.alpha == 1.0) {
    const double shift = p.mu + (2.0 / kPi) * p.beta * p.gamma * std::log(p.gamma);
    for (auto& x : out) {
      const double v = kPi * (rng.uniform() - 0.5);
      const double w = rng.exponential();
      const double a = kPi / 2.0 + p.beta * v;
      const double z =
          (2.0 / kPi) * (a * std::tan(v) - p.beta * std::log((kPi / 2.0) * w * std::cos(v) / a));
      x = p.gamma * z + shift;
    }
    return out;
  }
  const double k = p.beta * std::tan(kPi * p.alpha / 2.0);
  const double b = std::atan(k) / p.alpha;
  const double s = std::pow(1.0 + k * k, 1.0 / (2.0 * p.alpha));
  for (auto& x : out) {
    const double v = kPi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    const double z = s * std::sin(p.alpha * (v + b)) / std::pow(std::cos(v), 1.0 / p.alpha) *
                     std::pow(std::cos(v - p.alpha * (v + b)) / w, (1.0 - p.alpha) / p.alpha);
    x = p.gamma * z + p.mu;
  }
  return out;
}

namespace stable_detail {

// McCulloch (1986) quantile tables.
inline constexpr std::array<double, 15> kNuAlpha = {2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5,
                                                    4.0,   5.0, 6.0, 8.0, 10., 15., 25.};
inline constexpr std::array<double, 7> kNuBeta = {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0};
// alpha = psi1(nu_alpha, nu_beta); rows follow kNuAlpha, columns kNuBeta.
inline constexpr double kAlphaTable[15][7] = {
    {2.000, 2.000, 2.000, 2.000, 2.000, 2.000, 2.000}, {1.916, 1.924, 1.924, 1.924, 1.924, 1.924, 1.924},
    {1.808, 1.813, 1.829, 1.829, 1.829, 1.829, 1.829}, {1.729, 1.730, 1.737, 1.745, 1.745, 1.745, 1.745},
    {1.664, 1.663, 1.663, 1.668, 1.676, 1.676, 1.676}, {1.563, 1.560, 1.553, 1.548, 1.547, 1.547, 1.547},
    {1.484, 1.480, 1.471, 1.460, 1.448, 1.438, 1.438}, {1.391, 1.386, 1.378, 1.364, 1.337, 1.318, 1.318},
    {1.279, 1.273, 1.266, 1.250, 1.210, 1.184, 1.150}, {1.128, 1.121, 1.114, 1.101, 1.067, 1.027, 0.973},
    {1.029, 1.021, 1.014, 1.004, 0.974, 0.935, 0.874}, {0.896, 0.892, 0.884, 0.883, 0.855, 0.823, 0.769},
    {0.818, 0.812, 0.806, 0.801, 0.780, 0.756, 0.691}, {0.698, 0.695, 0.692, 0.689, 0.676, 0.656, 0.597},
    {0.593, 0.590, 0.588, 0.586, 0.579, 0.563, 0.513}};
// beta = psi2(nu_alpha, nu_beta).
inline constexpr double kBetaTable[15][7] = {
    {0, 2.160, 1.000, 1.000, 1.000, 1.000, 1.000}, {0, 1.592, 3.390, 1.000, 1.000, 1.000, 1.000},
    {0, 0.759, 1.800, 1.000, 1.000, 1.000, 1.000}, {0, 0.482, 1.048, 1.694, 1.000, 1.000, 1.000},
    {0, 0.360, 0.760, 1.232, 2.229, 1.000, 1.000}, {0, 0.253, 0.518, 0.823, 1.575, 1.000, 1.000},
    {0, 0.203, 0.410, 0.632, 1.244, 1.906, 1.000}, {0, 0.165, 0.332, 0.499, 0.943, 1.560, 1.000},
    {0, 0.136, 0.271, 0.404, 0.689, 1.230, 2.195}, {0, 0.109, 0.216, 0.323, 0.539, 0.827, 1.917},
    {0, 0.096, 0.190, 0.284, 0.472, 0.693, 1.759}, {0, 0.082, 0.163, 0.243, 0.412, 0.601, 1.596},
    {0, 0.074, 0.147, 0.220, 0.377, 0.546, 1.482}, {0, 0.064, 0.128, 0.191, 0.330, 0.478, 1.362},
    {0, 0.056, 0.112, 0.167, 0.285, 0.428, 1.274}};
inline constexpr std::array<double, 16> kAlphaGrid = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2,
                                                      1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0};
inline constexpr std::array<double, 5> kBetaGrid = {0.0, 0.25, 0.5, 0.75, 1.0};
// nu_c = psi3(alpha, beta); rows follow kAlphaGrid.
inline constexpr double kNuCTable[16][5] = {
    {2.588, 3.073, 4.534, 6.636, 9.144}, {2.337, 2.634, 3.542, 4.808, 6.247},
    {2.189, 2.392, 3.004, 3.844, 4.775}, {2.098, 2.244, 2.676, 3.265, 3.912},
    {2.040, 2.149, 2.461, 2.886, 3.356}, {2.000, 2.085, 2.311, 2.624, 2.973},
    {1.980, 2.040, 2.205, 2.435, 2.696}, {1.965, 2.007, 2.125, 2.294, 2.491},
    {1.955, 1.984, 2.067, 2.188, 2.333}, {1.946, 1.967, 2.022, 2.106, 2.211},
    {1.939, 1.952, 1.988, 2.045, 2.116}, {1.933, 1.940, 1.962, 1.997, 2.043},
    {1.927, 1.930, 1.943, 1.961, 1.987}, {1.921, 1.922, 1.927, 1.936, 1.947},
    {1.914, 1.915, 1.916, 1.918, 1.921}, {1.908, 1.908, 1.908, 1.908, 1.908}};
// nu_zeta = psi5(alpha, beta).
inline constexpr double kNuZetaTable[16][5] = {
    {0, -0.061, -0.279, -0.659, -1.198}, {0, -0.078, -0.272, -0.581, -0.997},
    {0, -0.089, -0.262, -0.520, -0.853}, {0, -0.096, -0.250, -0.469, -0.742},
    {0, -0.099, -0.237, -0.424, -0.652}, {0, -0.098, -0.223, -0.380, -0.576},
    {0, -0.095, -0.208, -0.346, -0.508}, {0, -0.090, -0.192, -0.310, -0.447},
    {0, -0.084, -0.173, -0.276, -0.390}, {0, -0.075, -0.154, -0.241, -0.335},
    {0, -0.066, -0.134, -0.206, -0.283}, {0, -0.056, -0.111, -0.170, -0.232},
    {0, -0.043, -0.088, -0.132, -0.179}, {0, -0.030, -0.061, -0.092, -0.123},
    {0, -0.017, -0.032, -0.049, -0.064}, {0, 0.000, 0.000, 0.000, 0.000}};

// Bilinear interpolation on a rectangular grid; arguments are clamped to
// the grid.
template <std::size_t R, std::size_t C>
double bilinear(const std::array<double, R>& rows, const std::array<double, C>& cols,
                const double (&table)[R][C], double r, double c) {
  r = std::clamp(r, rows.front(), rows.back());
  c = std::clamp(c, cols.front(), cols.back());
  std::size_t i = static_cast<std::size_t>(std::upper_bound(rows.begin(), rows.end(), r) - rows.begin());
  std::size_t j = static_cast<std::size_t>(std::upper_bound(cols.begin(), cols.end(), c) - cols.begin());
  i = std::clamp<std::size_t>(i, 1, R - 1);
  j = std::clamp<std::size_t>(j, 1, C - 1);
  const double tr = (r - rows[i - 1]) / (rows[i] - rows[i - 1]);
  const double tc = (c - cols[j - 1]) / (cols[j] - cols[j - 1]);
  return (1 - tr) * (1 - tc) * table[i - 1][j - 1] + (1 - tr) * tc * table[i - 1][j] +
         tr * (1 - tc) * table[i][j - 1] + tr * tc * table[i][j];
}

// Linear-interpolated percentile of sorted data (q in [0, 100]).
inline double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline void check_fit_sample(std::span<const double> samples) {
  if (samples.empty()) throw InsufficientDataError("stable fit needs at least 10 samples");
  for (double x : samples)
    if (!std::isfinite(x)) throw DomainError("stable fit samples must be finite");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mn == *mx) throw DegenerateDataError("all samples are equal");
  if (samples.size() < 10) throw InsufficientDataError("stable fit needs at least 10 samples");
}

}  // namespace stable_detail

// McCulloch quantile estimator; used as the maximum-likelihood start point.
inline StableParams quantile_init(std::span<const double> samples) {
  using namespace stable_detail;
  check_fit_sample(samples);
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double p05 = percentile(s, 5), p25 = percentile(s, 25), p50 = percentile(s, 50);
  const double p75 = percentile(s, 75), p95 = percentile(s, 95);

  const double spread = p95 - p05;
  const double iqr = p75 - p25;
  const double nu_alpha = iqr > 0 ? spread / iqr : kNuAlpha.back();
  const double nu_beta = spread > 0 ? (p95 + p05 - 2 * p50) / spread : 0.0;

  double alpha, beta;
  if (nu_alpha >= kNuAlpha.front()) {
    const double sign = nu_beta < 0 ? -1.0 : 1.0;
    alpha = bilinear(kNuAlpha, kNuBeta, kAlphaTable, nu_alpha, std::abs(nu_beta));
    beta = sign * bilinear(kNuAlpha, kNuBeta, kBetaTable, nu_alpha, std::abs(nu_beta));
  } else {
    alpha = 2.0;
    beta = nu_beta < 0 ? -1.0 : (nu_beta > 0 ? 1.0 : 0.0);
  }
  alpha = std::clamp(alpha, 0.5, 2.0);
  beta = std::clamp(beta, -1.0, 1.0);

  const double sign = beta < 0 ? -1.0 : 1.0;
  const double nu_c = bilinear(kAlphaGrid, kBetaGrid, kNuCTable, alpha, std::abs(beta));
  const double nu_zeta = sign * bilinear(kAlphaGrid, kBetaGrid, kNuZetaTable, alpha, std::abs(beta));
  double scale = iqr / nu_c;
  if (!(scale > 0)) {
    // Quartiles coincide; fall back to the 5-95 spread.
    scale = spread / (2.0 * nu_c);
  }
  const double zeta = p50 + scale * nu_zeta;
  const double location = alpha == 1.0 ? zeta : zeta - beta * scale * std::tan(kPi * alpha / 2.0);
  return {alpha, beta, std::max(scale, 1e-3), location};
}

struct StableFit {
  StableParams params;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  StableParams initial;
  int iterations = 0;
  bool converged = false;
};

struct StableFitOptions {
  int max_iterations = 2000;
  double rel_tol = 1e-9;
  // Lower edge of the alpha search box.
  double alpha_min = 0.3;
  // Above this sample count the log-density is interpolated from a grid of
  // exact evaluations rather than evaluated at every sample.
  std::size_t exact_limit = 256;
  int grid_nodes = 200;
};

namespace stable_detail {

inline constexpr double kLogFloor = 1e-300;

// Natural cubic spline through (x_i, y_i) on a uniform grid.
class UniformSpline {
 public:
  UniformSpline(double x0, double h, std::vector<double> y) : x0_(x0), h_(h), y_(std::move(y)) {
    const std::size_t n = y_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Thomas algorithm for the second-derivative system.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double rhs = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
      const double denom = 4.0 - (i > 1 ? c[i - 1] : 0.0);
      c[i] = 1.0 / denom;
      d[i] = (rhs - (i > 1 ? d[i - 1] : 0.0)) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }

  double operator()(double x) const {
    const double pos = (x - x0_) / h_;
    const std::size_t last = y_.size() - 2;
    const std::size_t i = std::min(last, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
    const double t = pos - static_cast<double>(i);
    const double a = 1.0 - t;
    return a * y_[i] + t * y_[i + 1] +
           h_ * h_ / 6.0 * ((a * a * a - a) * m_[i] + (t * t * t - t) * m_[i + 1]);
  }

 private:
  double x0_, h_;
  std::vector<double> y_, m_;
};

inline double log_pdf_std(double z, double alpha, double beta) {
  return std::log(std::max(pdf_std(z, alpha, beta), kLogFloor));
}

// Sum of log densities of `sorted` samples under p.
inline double log_likelihood(const std::vector<double>& sorted, const StableParams& p,
                             const StableFitOptions& opt) {
  const double log_scale = std::log(p.gamma);
  const double n = static_cast<double>(sorted.size());
  double total = 0.0;
  if (sorted.size() <= opt.exact_limit) {
    for (double x : sorted) total += log_pdf_std(standardize(x, p), p.alpha, p.beta);
    return total - n * log_scale;
  }
  const double u0 = std::asinh(standardize(sorted.front(), p));
  const double u1 = std::asinh(standardize(sorted.back(), p));
  const int k = opt.grid_nodes;
  const double h = (u1 - u0) / (k - 1);
  std::vector<double> y(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    y[static_cast<std::size_t>(i)] = log_pdf_std(std::sinh(u0 + h * i), p.alpha, p.beta);
  const UniformSpline spline(u0, h, std::move(y));
  for (double x : sorted) total += spline(std::asinh(standardize(x, p)));
  return total - n * log_scale;
}

}  // namespace stable_detail

// Maximum-likelihood fit by simplex search over box-transformed parameters
//   alpha = alpha_min + (2 - alpha_min) sigmoid(a), beta = tanh(b),
//   gamma = gamma0 exp(c), mu = mu0 + gamma0 d,
// started from quantile_init. Non-convergence is reported, not thrown.
inline StableFit fit_mle(std::span<const double> samples, const StableFitOptions& opt = {}) {
  using namespace stable_detail;
  check_fit_sample(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  StableParams init = quantile_init(samples);
  const double a_lo = opt.alpha_min;
  const double a_span = 2.0 - a_lo;
  init.alpha = std::clamp(init.alpha, a_lo + 1e-3 * a_span, 2.0 - 1e-3 * a_span);
  init.beta = std::clamp(init.beta, -0.99, 0.99);
  const double gamma0 = init.gamma;
  const double mu0 = init.mu;

  auto decode = [&](const std::vector<double>& v) {
    StableParams p;
    p.alpha = a_lo + a_span / (1.0 + std::exp(-v[0]));
    if (p.alpha != 1.0 && std::abs(p.alpha - 1.0) < 1e-5) p.alpha = p.alpha < 1.0 ? 1.0 - 1e-5 : 1.0 + 1e-5;
    p.beta = std::tanh(v[1]);
    p.gamma = gamma0 * std::exp(v[2]);
    p.mu = mu0 + gamma0 * v[3];
    return p;
  };
  const double n = static_cast<double>(sorted.size());
  auto objective = [&](const std::vector<double>& v) {
    const StableParams p = decode(v);
    if (!is_valid(p)) return std::numeric_limits<double>::infinity();
    try {
      return -log_likelihood(sorted, p, opt) / n;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double ua = (init.alpha - a_lo) / a_span;
  std::vector<double> start = {std::log(ua / (1.0 - ua)), std::atanh(init.beta), 0.0,
                               (init.mu - mu0) / gamma0};
  StableFit fit;
  fit.initial = decode(start);
  fit.initial_log_likelihood = -objective(start) * n;

  NelderMeadOptions nm;
  nm.max_iterations = opt.max_iterations;
  nm.rel_tol = opt.rel_tol;
  auto first = nelder_mead(objective, start, {0.5, 0.3, 0.2, 0.2}, nm);
  fit.iterations = first.iterations;
  // One restart from the best vertex guards against a collapsed simplex.
  nm.max_iterations = std::max(0, opt.max_iterations - first.iterations);
  NelderMeadResult best = first;
  if (nm.max_iterations > 0) {
    auto second = nelder_mead(objective, first.x, {0.1, 0.1, 0.05, 0.05}, nm);
    fit.iterations += second.iterations;
    if (second.value <= first.value) {
      second.converged = second.converged && first.converged;
      best = second;
    }
  }
  fit.converged = best.converged;
  fit.params = decode(best.x);
  fit.log_likelihood = -best.value * n;
  if (!(fit.log_likelihood >= fit.initial_log_likelihood)) {
    fit.params = fit.initial;
    fit.log_likelihood = fit.initial_log_likelihood;
  }
  return fit;
}

}  // namespace iqsd

#endif  // IQSD_STABLE_HPP_
