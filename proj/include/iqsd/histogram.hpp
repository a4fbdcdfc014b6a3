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

#ifndef IQSD_HISTOGRAM_HPP_
#define IQSD_HISTOGRAM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "iqsd/error.hpp"

namespace iqsd {

// Binned probability density over the score axis. densities[k] applies to
// [edges[k], edges[k+1]) and sum(densities[k] * width_k) == 1.
struct ScoreHistogram {
  std::vector<double> edges;
  std::vector<double> densities;

  std::size_t bins() const { return densities.size(); }
  double width(std::size_t k) const { return edges[k + 1] - edges[k]; }

  // Probability mass per bin.
  std::vector<double> masses() const {
    std::vector<double> m(densities.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = densities[k] * width(k);
    return m;
  }
};

// {0, 10, ..., 100}: ten bins over the rating scale.
inline std::vector<double> default_edges() {
  std::vector<double> e;
  for (int i = 0; i <= 10; ++i) e.push_back(10.0 * i);
  return e;
}

inline void validate_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) throw ShapeError("histogram needs at least two edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || !std::isfinite(edges[i + 1]) || !(edges[i + 1] > edges[i]))
      throw ShapeError("histogram edges must be finite and strictly increasing");
  }
}

// Parses "0,10,20,...,100". A literal "..." continues the arithmetic
// progression set by the two preceding values up to the value after it.
inline std::vector<double> parse_edges(const std::string& text) {
  std::vector<std::string> tokens;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    tokens.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
  }
  std::vector<double> edges;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "...") {
      if (edges.size() < 2 || i + 1 >= tokens.size())
        throw ShapeError("'...' in edge list needs two values before and one after");
      const double step = edges[edges.size() - 1] - edges[edges.size() - 2];
      const double stop = std::stod(tokens[i + 1]);
      if (!(step > 0)) throw ShapeError("edge progression must be increasing");
      for (double v = edges.back() + step; v < stop - 1e-9 * step; v += step) edges.push_back(v);
      continue;
    }
    try {
      std::size_t used = 0;
      edges.push_back(std::stod(tokens[i], &used));
      if (used != tokens[i].size()) throw std::invalid_argument(tokens[i]);
    } catch (const std::exception&) {
      throw ShapeError("invalid histogram edge '" + tokens[i] + "'");
    }
  }
  validate_edges(edges);
  return edges;
}

// Builds a density histogram from per-bin masses, renormalizing by the
// total. Throws DegenerateDataError when the total is below min_total.
inline ScoreHistogram histogram_from_masses(const std::vector<double>& edges,
                                            std::vector<double> masses,
                                            double min_total = 1e-6) {
  double total = 0.0;
  for (double& m : masses) {
    if (m < 0.0) m = 0.0;
    total += m;
  }
  if (!(total >= min_total))
    throw DegenerateDataError("distribution has no appreciable mass inside the histogram range");
  ScoreHistogram h{edges, std::vector<double>(masses.size())};
  for (std::size_t k = 0; k < masses.size(); ++k) h.densities[k] = masses[k] / total / h.width(k);
  return h;
}

// Index of the bin holding x: [edges[k], edges[k+1]), with the final edge
// closed so a score equal to edges.back() lands in the last bin. Throws
// SupportError for values outside [edges.front(), edges.back()].
inline std::size_t bin_index(const std::vector<double>& edges, double x) {
  if (!(x >= edges.front() && x <= edges.back()))
    throw SupportError("score " + std::to_string(x) + " lies outside the histogram range");
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const auto k = static_cast<std::size_t>(it - edges.begin());
  return std::min(k, edges.size() - 1) - 1;
}

inline std::vector<double> bin_counts(const std::vector<double>& edges, const std::vector<double>& scores) {
  validate_edges(edges);
  std::vector<double> counts(edges.size() - 1, 0.0);
  for (double x : scores) counts[bin_index(edges, x)] += 1.0;
  return counts;
}

inline bool same_edges(const ScoreHistogram& a, const ScoreHistogram& b) {
  return a.edges == b.edges && a.densities.size() == b.densities.size();
}

}  // namespace iqsd

#endif  // IQSD_HISTOGRAM_HPP_
