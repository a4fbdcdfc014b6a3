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

#ifndef IQSD_QUADRATURE_HPP_
#define IQSD_QUADRATURE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace iqsd {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (positive half).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  double error = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) error = INFINITY;
  return {a, b, kronrod, error};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature over the partition given by
// `breakpoints` (at least two, increasing). The panel with the largest error
// estimate is bisected until the summed error is below
// max(abs_tol, rel_tol * |value|) or `max_panels` is exceeded, in which case
// the best estimate is returned with converged = false.
template <class F>
QuadResult integrate(F&& f, std::span<const double> breakpoints, double abs_tol, double rel_tol,
                     int max_panels = 4000) {
  std::priority_queue<detail::Panel> panels;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    auto p = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
    value += p.value;
    error += p.error;
    panels.push(p);
  }
  int count = static_cast<int>(panels.size());
  QuadResult result;
  while (!panels.empty() && error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (count >= max_panels) {
      result.converged = false;
      break;
    }
    const detail::Panel worst = panels.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel cannot be split further in floating point.
      result.converged = false;
      break;
    }
    panels.pop();
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  // Re-sum to shed the drift of the running totals.
  value = 0.0;
  error = 0.0;
  for (; !panels.empty(); panels.pop()) {
    value += panels.top().value;
    error += panels.top().error;
  }
  result.value = value;
  result.error = error;
  result.evaluations = 15 * (2 * count);
  if (!std::isfinite(value)) result.converged = false;
  return result;
}

template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, double rel_tol,
                     int max_panels = 4000) {
  const double pts[2] = {a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts, 2), abs_tol, rel_tol,
                   max_panels);
}

}  // namespace iqsd

#endif  // IQSD_QUADRATURE_HPP_
