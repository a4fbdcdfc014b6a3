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

// Subject x image opinion-score matrices: CSV ingestion, two-stage subject
// screening, empirical histograms and per-image summary statistics.

#ifndef IQSD_SCORE_DATA_HPP_
#define IQSD_SCORE_DATA_HPP_

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iqsd/error.hpp"
#include "iqsd/histogram.hpp"
#include "iqsd/metrics.hpp"

namespace iqsd {

inline constexpr double kMissingScore = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double score) { return std::isnan(score); }

// Opinion scores on the 0-100 scale. scores[i][j] is subject i's score for
// image j, NaN when the subject did not rate the image.
struct ScoreMatrix {
  std::vector<std::string> subjects;
  std::vector<std::string> images;
  std::vector<std::vector<double>> scores;

  std::size_t subject_count() const { return subjects.size(); }
  std::size_t image_count() const { return images.size(); }

  // Present scores for image j in subject order.
  std::vector<double> image_scores(std::size_t j) const {
    std::vector<double> out;
    for (const auto& row : scores)
      if (!is_missing(row[j])) out.push_back(row[j]);
    return out;
  }

  std::size_t image_index(const std::string& id) const {
    for (std::size_t j = 0; j < images.size(); ++j)
      if (images[j] == id) return j;
    throw ShapeError("image '" + id + "' is not in the score matrix");
  }

  ScoreMatrix with_subjects(const std::vector<std::size_t>& keep) const {
    ScoreMatrix m;
    m.images = images;
    for (std::size_t i : keep) {
      m.subjects.push_back(subjects[i]);
      m.scores.push_back(scores[i]);
    }
    return m;
  }
};

namespace score_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace score_detail

// Parses the score CSV: header `subject_id,<image_1>,...,<image_M>`, then one
// row per subject. Empty cells are missing scores. Rows and columns in
// ParseError are 1-based file coordinates.
inline ScoreMatrix parse_scores(std::istream& in) {
  using score_detail::split_csv_line;
  ScoreMatrix m;
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  std::set<std::string> seen_subjects;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (score_detail::trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (cells.size() < 2) throw ParseError("header needs subject_id and at least one image", row, 0);
      std::set<std::string> seen;
      for (std::size_t c = 1; c < cells.size(); ++c) {
        if (cells[c].empty()) throw ParseError("empty image identifier", row, c + 1);
        if (!seen.insert(cells[c]).second) throw ParseError("duplicate image '" + cells[c] + "'", row, c + 1);
        m.images.push_back(cells[c]);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != m.images.size() + 1)
      throw ParseError("expected " + std::to_string(m.images.size() + 1) + " cells, found " +
                           std::to_string(cells.size()),
                       row, 0);
    if (cells[0].empty()) throw ParseError("empty subject identifier", row, 1);
    if (!seen_subjects.insert(cells[0]).second) throw ParseError("duplicate subject '" + cells[0] + "'", row, 1);
    std::vector<double> scores(m.images.size(), kMissingScore);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string& text = cells[c];
      if (text.empty()) continue;
      double v = 0.0;
      const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
      if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v))
        throw ParseError("malformed score '" + text + "'", row, c + 1);
      if (v < 0.0 || v > 100.0) throw ParseError("score " + text + " outside [0, 100]", row, c + 1);
      scores[c - 1] = v;
    }
    m.subjects.push_back(cells[0]);
    m.scores.push_back(std::move(scores));
  }
  if (!have_header) throw ParseError("empty score file", 0, 0);
  if (m.subjects.empty()) throw ParseError("score file has no subject rows", row, 0);
  return m;
}

inline ScoreMatrix load_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open score file '" + path.string() + "'");
  return parse_scores(in);
}

inline void write_scores(std::ostream& out, const ScoreMatrix& m) {
  out << "subject_id";
  for (const auto& id : m.images) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.subjects.size(); ++i) {
    out << m.subjects[i];
    for (double v : m.scores[i]) {
      out << ',';
      if (!is_missing(v)) out << score_detail::format_double(v);
    }
    out << '\n';
  }
}

struct ScreeningOptions {
  bool outlier_stage = true;
  bool consistency_stage = true;
  // Stage 1: reject when (P + Q) / rated > max_outlier_fraction and
  // |P - Q| / (P + Q) < max_outlier_asymmetry.
  double max_outlier_fraction = 0.05;
  double max_outlier_asymmetry = 0.3;
  // Stage 2: reject when the correlation with the leave-one-out MOS is below
  // this floor.
  double min_correlation = 0.7;
};

struct Rejection {
  std::string subject;
  int stage = 0;
  // Stage 1: outlier fraction (P + Q) / rated; stage 2: the correlation.
  double statistic = 0.0;
  std::size_t above = 0;
  std::size_t below = 0;
};

struct ScreeningResult {
  ScoreMatrix retained;
  std::vector<Rejection> rejected;
};

// Two-stage subject screening. Stage 1 is the ITU-R BT.500 outlier rule:
// per image, scores further than 2 sigma (kurtosis in [2, 4]) or sqrt(20)
// sigma (otherwise) from the image mean count as outliers above (P) or
// below (Q). Stage 2 runs on the stage-1 survivors and rejects subjects
// whose Pearson correlation with the leave-one-out MOS is below the floor.
inline ScreeningResult screen_subjects(const ScoreMatrix& m, const ScreeningOptions& opt = {}) {
  if (m.subject_count() < 3) throw InsufficientDataError("screening needs at least 3 subjects");
  ScreeningResult result;
  std::vector<std::size_t> keep;

  if (opt.outlier_stage) {
    const std::size_t n_img = m.image_count();
    std::vector<double> mean(n_img, 0.0), thr(n_img, 0.0);
    for (std::size_t j = 0; j < n_img; ++j) {
      const auto s = m.image_scores(j);
      if (s.size() < 2) {
        thr[j] = std::numeric_limits<double>::infinity();
        continue;
      }
      const double n = static_cast<double>(s.size());
      mean[j] = mean_of(s);
      double m2 = 0.0, m4 = 0.0;
      for (double v : s) {
        const double d = v - mean[j];
        m2 += d * d;
        m4 += d * d * d * d;
      }
      m2 /= n;
      m4 /= n;
      const double sd = sample_sd(s);
      const double kurt = m2 > 0.0 ? m4 / (m2 * m2) : 3.0;
      thr[j] = (kurt >= 2.0 && kurt <= 4.0 ? 2.0 : std::sqrt(20.0)) * sd;
    }
    for (std::size_t i = 0; i < m.subject_count(); ++i) {
      std::size_t p = 0, q = 0, rated = 0;
      for (std::size_t j = 0; j < n_img; ++j) {
        const double v = m.scores[i][j];
        if (is_missing(v)) continue;
        ++rated;
        if (v - mean[j] > thr[j]) ++p;
        if (mean[j] - v > thr[j]) ++q;
      }
      const double frac = rated > 0 ? static_cast<double>(p + q) / static_cast<double>(rated) : 0.0;
      const bool reject = p + q > 0 && frac > opt.max_outlier_fraction &&
                          std::abs(static_cast<double>(p) - static_cast<double>(q)) / static_cast<double>(p + q) <
                              opt.max_outlier_asymmetry;
      if (reject)
        result.rejected.push_back({m.subjects[i], 1, frac, p, q});
      else
        keep.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < m.subject_count(); ++i) keep.push_back(i);
  }

  if (opt.consistency_stage && keep.size() >= 2) {
    const ScoreMatrix stage1 = m.with_subjects(keep);
    std::vector<std::size_t> keep2;
    std::vector<double> sum(stage1.image_count(), 0.0);
    std::vector<double> count(stage1.image_count(), 0.0);
    for (const auto& row : stage1.scores)
      for (std::size_t j = 0; j < row.size(); ++j)
        if (!is_missing(row[j])) {
          sum[j] += row[j];
          count[j] += 1.0;
        }
    for (std::size_t k = 0; k < stage1.subject_count(); ++k) {
      const auto& row = stage1.scores[k];
      std::vector<double> own, others;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (is_missing(row[j]) || count[j] < 2.0) continue;
        own.push_back(row[j]);
        others.push_back((sum[j] - row[j]) / (count[j] - 1.0));
      }
      bool reject = false;
      double corr = 1.0;
      if (own.size() >= 2) {
        const auto c = pearson(own, others);
        // A subject who does not vary while the others do carries no ranking
        // information; if the others do not vary either, nothing is assessed.
        const bool others_vary = sample_sd(others) > 0.0;
        corr = c.defined ? c.value : (others_vary ? 0.0 : 1.0);
        reject = corr < opt.min_correlation;
      }
      if (reject)
        result.rejected.push_back({stage1.subjects[k], 2, corr, 0, 0});
      else
        keep2.push_back(keep[k]);
    }
    keep = std::move(keep2);
  }
  result.retained = m.with_subjects(keep);
  return result;
}

// Empirical density histogram: density_k = count_k / (N width_k), with a
// score equal to the final edge counted in the last bin.
inline ScoreHistogram build_histogram(const std::vector<double>& scores, const std::vector<double>& edges) {
  if (scores.empty()) throw InsufficientDataError("cannot build a histogram from an empty score list");
  return histogram_from_masses(edges, bin_counts(edges, scores), 0.5);
}

struct ImageStats {
  double mos = 0.0;
  double sos = 0.0;
  double skewness = 0.0;
};

// MOS, SOS (n - 1 standard deviation) and the adjusted Fisher-Pearson
// skewness G1 = sqrt(n (n - 1)) / (n - 2) * m3 / m2^1.5. Skewness is 0 for
// fewer than three scores or zero variance.
inline ImageStats summary_stats(const std::vector<double>& scores) {
  if (scores.size() < 2) throw InsufficientDataError("summary statistics need at least two scores");
  ImageStats st;
  const double n = static_cast<double>(scores.size());
  st.mos = mean_of(scores);
  st.sos = sample_sd(scores);
  double m2 = 0.0, m3 = 0.0;
  for (double v : scores) {
    const double d = v - st.mos;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (scores.size() >= 3 && m2 > 0.0)
    st.skewness = std::sqrt(n * (n - 1.0)) / (n - 2.0) * m3 / std::pow(m2, 1.5);
  return st;
}

}  // namespace iqsd

#endif  // IQSD_SCORE_DATA_HPP_
