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

#ifndef IQSD_NELDER_MEAD_HPP_
#define IQSD_NELDER_MEAD_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace iqsd {

struct NelderMeadOptions {
  int max_iterations = 2000;
  // Stop when (f_worst - f_best) <= rel_tol * |f_best| + abs_tol.
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization (standard reflection/expansion/
// contraction/shrink coefficients 1, 2, 1/2, 1/2). Non-finite objective
// values are treated as +inf, so the objective may signal infeasibility
// that way. The vertex order is kept stable so the search is deterministic.
template <class F>
NelderMeadResult nelder_mead(F&& objective, std::vector<double> start, std::vector<double> steps,
                             const NelderMeadOptions& options = {}) {
  const std::size_t n = start.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  std::vector<double> values(n + 1);
  NelderMeadResult result;
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);
  result.evaluations = static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];
    result.iterations = iter;
    if (std::isfinite(values[worst]) &&
        values[worst] - values[best] <= options.rel_tol * std::abs(values[best]) + options.abs_tol) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& v = simplex[order[k]];
      for (std::size_t i = 0; i < n; ++i) centroid[i] += v[i] / static_cast<double>(n);
    }
    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t i = 0; i < n; ++i)
        out[i] = centroid[i] + coef * (simplex[worst][i] - centroid[i]);
    };

    along(-1.0, trial);
    const double reflected = eval(trial);
    ++result.evaluations;
    if (reflected < values[best]) {
      along(-2.0, trial2);
      const double expanded = eval(trial2);
      ++result.evaluations;
      if (expanded < reflected) {
        simplex[worst] = trial2;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
      continue;
    }
    if (reflected < values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = reflected;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst point.
    const bool outside = reflected < values[worst];
    along(outside ? -0.5 : 0.5, trial2);
    const double contracted = eval(trial2);
    ++result.evaluations;
    if (contracted < (outside ? reflected : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = contracted;
      continue;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      auto& v = simplex[order[k]];
      for (std::size_t i = 0; i < n; ++i) v[i] = simplex[best][i] + 0.5 * (v[i] - simplex[best][i]);
      values[order[k]] = eval(v);
      ++result.evaluations;
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  result.value = *best_it;
  result.x = simplex[static_cast<std::size_t>(best_it - values.begin())];
  return result;
}

}  // namespace iqsd

#endif  // IQSD_NELDER_MEAD_HPP_
