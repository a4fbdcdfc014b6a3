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

// End-to-end IQSD prediction: ground-truth stable fits, four RBF SVRs
// mapping image features to (alpha, beta, gamma, mu), and the repeated
// random-split evaluation protocol.

#ifndef IQSD_PIPELINE_HPP_
#define IQSD_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "iqsd/error.hpp"
#include "iqsd/features.hpp"
#include "iqsd/histogram.hpp"
#include "iqsd/log.hpp"
#include "iqsd/metrics.hpp"
#include "iqsd/rng.hpp"
#include "iqsd/score_data.hpp"
#include "iqsd/stable.hpp"
#include "iqsd/svr.hpp"

namespace iqsd {

inline constexpr std::array<const char*, 4> kParamNames = {"alpha", "beta", "gamma", "mu"};
inline constexpr std::array<const char*, 5> kHistogramMetricNames = {"jsd", "rmse", "chebyshev", "chi_square",
                                                                     "cosine"};
inline constexpr std::array<const char*, 5> kParamMetricNames = {"rmse", "mae", "mape", "correlation", "cosine"};

inline std::array<double, 4> param_array(const StableParams& p) { return {p.alpha, p.beta, p.gamma, p.mu}; }

// Feature-extraction seed for one image: the master seed mixed with an
// FNV-1a hash of the image identifier, so that results do not depend on
// the order in which images are processed.
inline std::uint64_t image_feature_seed(std::uint64_t master_seed, const std::string& image_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(master_seed, h);
}

// ---------------------------------------------------------------------------
// Ground truth

struct GroundTruth {
  StableParams params;
  bool ok = false;
  bool converged = false;
  double log_likelihood = 0.0;
  std::string error;  // empty when ok
};

// Fits the stable law to every image's raw scores. A failure on one image
// (degenerate scores, too few scores) is recorded for that image only.
inline std::vector<GroundTruth> fit_ground_truth(const std::vector<std::vector<double>>& per_image_scores,
                                                 const StableFitOptions& opt = {}) {
  std::vector<GroundTruth> out(per_image_scores.size());
  for (std::size_t j = 0; j < per_image_scores.size(); ++j) {
    try {
      const auto fit = fit_mle(per_image_scores[j], opt);
      out[j].params = fit.params;
      out[j].converged = fit.converged;
      out[j].log_likelihood = fit.log_likelihood;
      out[j].ok = true;
    } catch (const Error& e) {
      out[j].error = e.what();
    }
  }
  return out;
}

inline std::vector<GroundTruth> fit_ground_truth(const ScoreMatrix& m, const StableFitOptions& opt = {}) {
  std::vector<std::vector<double>> per_image;
  for (std::size_t j = 0; j < m.image_count(); ++j) per_image.push_back(m.image_scores(j));
  return fit_ground_truth(per_image, opt);
}

// ---------------------------------------------------------------------------
// Predictor

struct TrainOptions {
  SvrHyper hyper;
  bool grid_search = false;
  std::uint64_t seed = 0;  // cross-validation folds
};

struct IqsdPredictor {
  std::array<SvrModel, 4> models;  // alpha, beta, gamma, mu
  FeatureOptions feature_config;

  const std::string& row_hash() const { return models[0].row_hash; }
};

inline std::vector<std::vector<double>> feature_rows(const std::vector<FeatureVector>& features) {
  std::vector<std::vector<double>> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.emplace_back(f.begin(), f.end());
  return rows;
}

inline IqsdPredictor train_iqsd(const std::vector<std::vector<double>>& rows, const std::vector<StableParams>& targets,
                                const TrainOptions& opt = {}, const FeatureOptions& feature_config = {}) {
  if (rows.size() != targets.size()) throw ShapeError("feature rows and target parameters differ in count");
  if (rows.size() < 2) throw InsufficientDataError("training needs at least two rows");
  IqsdPredictor p;
  p.feature_config = feature_config;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> y(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) y[i] = param_array(targets[i])[k];
    SvrHyper h = opt.hyper;
    if (opt.grid_search && rows.size() >= 5) h = svr_grid_search(rows, y, opt.hyper, opt.seed).best;
    p.models[k] = svr_train(rows, y, h);
  }
  return p;
}

inline IqsdPredictor train_iqsd(const std::vector<FeatureVector>& features, const std::vector<StableParams>& targets,
                                const TrainOptions& opt = {}, const FeatureOptions& feature_config = {}) {
  return train_iqsd(feature_rows(features), targets, opt, feature_config);
}

struct PredictedParams {
  StableParams params;  // clamped into the valid box
  StableParams raw;     // regressor outputs
  std::array<bool, 4> clamped{};

  bool any_clamped() const { return clamped[0] || clamped[1] || clamped[2] || clamped[3]; }
};

// Clamps raw regressor outputs: alpha into [0.3, 2], beta into [-1, 1],
// gamma to at least 1e-3. Every clamping event is logged.
inline PredictedParams clamp_prediction(const std::array<double, 4>& raw, const std::string& context = "") {
  PredictedParams out;
  out.raw = {raw[0], raw[1], raw[2], raw[3]};
  for (double v : raw)
    if (!std::isfinite(v)) throw NumericalError("regressor produced a non-finite parameter", 0.0);
  const std::array<double, 4> clamped = {std::clamp(raw[0], 0.3, 2.0), std::clamp(raw[1], -1.0, 1.0),
                                         std::max(raw[2], 1e-3), raw[3]};
  for (std::size_t k = 0; k < 4; ++k) {
    out.clamped[k] = clamped[k] != raw[k];
    if (out.clamped[k])
      Log::warn("clamped predicted " + std::string(kParamNames[k]) + " from " + score_detail::format_double(raw[k]) +
                " to " + score_detail::format_double(clamped[k]) + (context.empty() ? "" : " for " + context));
  }
  out.params = {clamped[0], clamped[1], clamped[2], clamped[3]};
  return out;
}

inline PredictedParams predict_from_features(const IqsdPredictor& p, std::span<const double> features,
                                             const std::string& context = "") {
  std::array<double, 4> raw{};
  for (std::size_t k = 0; k < 4; ++k) raw[k] = svr_predict(p.models[k], features);
  return clamp_prediction(raw, context);
}

inline PredictedParams predict_iqsd(const IqsdPredictor& p, const GrayImage& img, std::uint64_t seed,
                                    const std::string& context = "") {
  const FeatureVector f = extract_features(img, seed, p.feature_config);
  return predict_from_features(p, f, context);
}

inline nlohmann::json predictor_to_json(const IqsdPredictor& p) {
  nlohmann::json j;
  j["format"] = "iqsd-predictor";
  j["version"] = 1;
  j["feature_config"] = {{"jpeg_codec", p.feature_config.codecs.jpeg_command.empty()
                                            ? std::string("libjpeg")
                                            : p.feature_config.codecs.jpeg_command},
                         {"jp2k_codec", p.feature_config.codecs.jp2k_is_surrogate()
                                            ? std::string("surrogate")
                                            : p.feature_config.codecs.jp2k_command}};
  j["feature_names"] = feature_names();
  j["row_hash"] = p.row_hash();
  for (std::size_t k = 0; k < 4; ++k) j["models"][kParamNames[k]] = svr_to_json(p.models[k]);
  return j;
}

inline IqsdPredictor predictor_from_json(const nlohmann::json& j) {
  IqsdPredictor p;
  try {
    if (j.value("format", std::string()) != "iqsd-predictor") throw DomainError("not an IQSD predictor document");
    const auto& fc = j.at("feature_config");
    const std::string jpeg = fc.value("jpeg_codec", std::string("libjpeg"));
    p.feature_config.codecs.jpeg_command = jpeg == "libjpeg" ? "" : jpeg;
    p.feature_config.codecs.jp2k_command = fc.value("jp2k_codec", std::string("surrogate"));
    for (std::size_t k = 0; k < 4; ++k) p.models[k] = svr_from_json(j.at("models").at(kParamNames[k]));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed predictor: ") + e.what(), 0, 0);
  }
  for (std::size_t k = 1; k < 4; ++k)
    if (p.models[k].row_hash != p.models[0].row_hash)
      throw DomainError("predictor models were trained on different feature matrices");
  for (const auto& m : p.models)
    if (m.scaler.dim() != kFeatureCount) throw ShapeError("predictor models must take 24 features");
  return p;
}

// ---------------------------------------------------------------------------
// Evaluation

// Everything the evaluation needs per image. Images whose ground-truth fit
// failed are excluded by the caller or by repeated_split_eval.
struct EvalDataset {
  std::vector<std::string> image_ids;
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> scores;
  std::vector<GroundTruth> truth;
  std::vector<std::string> groups;  // optional content groups for grouped splits
};

struct EvalOptions {
  std::size_t trials = 1;
  double split = 0.8;
  std::uint64_t master_seed = 0;
  std::vector<double> edges = default_edges();
  TrainOptions train;
  bool grouped = false;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t clamped_predictions = 0;
  HistogramMetrics histogram;  // mean over test images
  bool params_defined = false;
  std::array<ParamErrorMetrics, 4> params{};
};

struct EvalReport {
  std::size_t trial_count = 0;
  double split_fraction = 0.0;
  std::uint64_t master_seed = 0;
  bool grouped = false;
  std::size_t images = 0;
  std::vector<std::string> excluded_images;
  std::size_t failed_trials = 0;
  std::vector<TrialResult> trials;
  std::array<MetricSummary, 5> histogram{};               // kHistogramMetricNames order
  std::array<std::array<MetricSummary, 5>, 4> params{};  // [param][kParamMetricNames]
  std::size_t param_trials = 0;
  SvrHyper hyper;
  bool grid_search = false;
  std::vector<double> edges;
};

namespace pipeline_detail {

inline std::array<double, 5> histogram_values(const HistogramMetrics& m) {
  return {m.jsd, m.rmse, m.chebyshev, m.chi_square, m.cosine};
}

inline std::array<double, 5> param_values(const ParamErrorMetrics& m) {
  return {m.rmse, m.mae, m.mape, m.correlation, m.cosine};
}

inline MetricSummary summarize(const std::vector<double>& v) { return {mean_of(v), sample_sd(v)}; }

// Training indices for one trial.
inline std::vector<std::size_t> split_indices(const EvalDataset& d, const std::vector<std::size_t>& usable,
                                              const EvalOptions& opt, Rng& rng) {
  std::vector<std::size_t> train;
  if (opt.grouped) {
    std::vector<std::string> groups;
    std::set<std::string> seen;
    for (std::size_t i : usable)
      if (seen.insert(d.groups[i]).second) groups.push_back(d.groups[i]);
    if (groups.size() < 2) throw InsufficientDataError("grouped split needs at least two content groups");
    rng.shuffle(groups);
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(opt.split * static_cast<double>(groups.size()))), 1, groups.size() - 1);
    const std::set<std::string> chosen(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n_train));
    for (std::size_t i : usable)
      if (chosen.count(d.groups[i])) train.push_back(i);
    return train;
  }
  std::vector<std::size_t> order = usable;
  rng.shuffle(order);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(opt.split * static_cast<double>(order.size()))), 2, order.size() - 1);
  train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(train.begin(), train.end());
  return train;
}

inline TrialResult run_trial(const EvalDataset& d, const std::vector<std::size_t>& usable, const EvalOptions& opt,
                             std::size_t t) {
  TrialResult r;
  r.trial = t;
  r.seed = opt.master_seed + t;
  try {
    Rng rng(r.seed);
    const auto train = split_indices(d, usable, opt, rng);
    std::vector<std::size_t> test;
    std::set_difference(usable.begin(), usable.end(), train.begin(), train.end(), std::back_inserter(test));
    r.train_count = train.size();
    r.test_count = test.size();
    if (train.size() < 2 || test.empty()) throw InsufficientDataError("split leaves no training or test images");

    std::vector<std::vector<double>> rows;
    std::vector<StableParams> targets;
    for (std::size_t i : train) {
      rows.emplace_back(d.features[i].begin(), d.features[i].end());
      targets.push_back(d.truth[i].params);
    }
    TrainOptions to = opt.train;
    to.seed = derive_seed(r.seed, 0x637676ULL);
    const IqsdPredictor pred = train_iqsd(rows, targets, to);

    std::array<std::vector<double>, 5> hist_vals;
    std::array<std::vector<double>, 4> truth_cols, pred_cols;
    for (std::size_t i : test) {
      const auto p = predict_from_features(pred, d.features[i], d.image_ids[i]);
      if (p.any_clamped()) ++r.clamped_predictions;
      const auto h = histogram_metrics(histogramize(p.params, opt.edges), build_histogram(d.scores[i], opt.edges));
      const auto hv = histogram_values(h);
      for (std::size_t k = 0; k < 5; ++k) hist_vals[k].push_back(hv[k]);
      const auto tv = param_array(d.truth[i].params);
      const auto pv = param_array(p.params);
      for (std::size_t k = 0; k < 4; ++k) {
        truth_cols[k].push_back(tv[k]);
        pred_cols[k].push_back(pv[k]);
      }
    }
    r.histogram = {mean_of(hist_vals[0]), mean_of(hist_vals[1]), mean_of(hist_vals[2]), mean_of(hist_vals[3]),
                   mean_of(hist_vals[4])};
    if (test.size() >= 2) {
      r.params_defined = true;
      for (std::size_t k = 0; k < 4; ++k) r.params[k] = param_error_metrics(truth_cols[k], pred_cols[k]);
    }
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace pipeline_detail

// Repeated random train/test splits. Trial t shuffles with seed
// master_seed + t; a failed trial is recorded and excluded from the
// aggregates, which are means and sample standard deviations over the
// successful trials in trial order.
inline EvalReport repeated_split_eval(const EvalDataset& d, const EvalOptions& opt) {
  const std::size_t n = d.image_ids.size();
  if (d.features.size() != n || d.scores.size() != n || d.truth.size() != n)
    throw ShapeError("evaluation dataset columns differ in length");
  if (opt.grouped && d.groups.size() != n) throw ShapeError("grouped split needs one group per image");
  if (!(opt.split > 0.0 && opt.split < 1.0)) throw DomainError("split fraction must lie in (0, 1)");
  if (opt.trials == 0) throw DomainError("trial count must be positive");
  validate_edges(opt.edges);

  EvalReport rep;
  rep.trial_count = opt.trials;
  rep.split_fraction = opt.split;
  rep.master_seed = opt.master_seed;
  rep.grouped = opt.grouped;
  rep.hyper = opt.train.hyper;
  rep.grid_search = opt.train.grid_search;
  rep.edges = opt.edges;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.truth[i].ok && !d.scores[i].empty())
      usable.push_back(i);
    else
      rep.excluded_images.push_back(d.image_ids[i]);
  }
  rep.images = usable.size();
  if (usable.size() < 5) throw InsufficientDataError("evaluation needs at least 5 images with ground truth");

  for (std::size_t t = 0; t < opt.trials; ++t) rep.trials.push_back(pipeline_detail::run_trial(d, usable, opt, t));

  std::array<std::vector<double>, 5> hist;
  std::array<std::array<std::vector<double>, 5>, 4> params;
  for (const auto& tr : rep.trials) {
    if (!tr.ok) {
      ++rep.failed_trials;
      continue;
    }
    const auto hv = pipeline_detail::histogram_values(tr.histogram);
    for (std::size_t k = 0; k < 5; ++k) hist[k].push_back(hv[k]);
    if (!tr.params_defined) continue;
    ++rep.param_trials;
    for (std::size_t p = 0; p < 4; ++p) {
      const auto pv = pipeline_detail::param_values(tr.params[p]);
      for (std::size_t k = 0; k < 5; ++k) params[p][k].push_back(pv[k]);
    }
  }
  for (std::size_t k = 0; k < 5; ++k) rep.histogram[k] = pipeline_detail::summarize(hist[k]);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t k = 0; k < 5; ++k) rep.params[p][k] = pipeline_detail::summarize(params[p][k]);
  return rep;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["trial_count"] = r.trial_count;
  j["split_fraction"] = r.split_fraction;
  j["master_seed"] = r.master_seed;
  j["grouped_split"] = r.grouped;
  j["images"] = r.images;
  j["excluded_images"] = r.excluded_images;
  j["failed_trials"] = r.failed_trials;
  j["param_metric_trials"] = r.param_trials;
  j["metric_domains"] = {{"jsd", "mass"}, {"rmse", "density"}, {"chebyshev", "density"}, {"chi_square", "mass"},
                         {"cosine", "density"}};
  j["edges"] = r.edges;
  j["svr"] = {{"c", r.hyper.c},
              {"epsilon", r.hyper.epsilon},
              {"gamma", r.hyper.gamma > 0.0 ? r.hyper.gamma : 1.0 / static_cast<double>(kFeatureCount)},
              {"grid_search", r.grid_search}};
  for (std::size_t k = 0; k < 5; ++k)
    j["histogram_metrics"][kHistogramMetricNames[k]] = {{"mean", r.histogram[k].mean}, {"sd", r.histogram[k].sd}};
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t k = 0; k < 5; ++k)
      j["param_metrics"][kParamNames[p]][kParamMetricNames[k]] = {{"mean", r.params[p][k].mean},
                                                                   {"sd", r.params[p][k].sd}};
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json tj = {{"trial", t.trial}, {"seed", t.seed}, {"ok", t.ok}, {"train", t.train_count},
                         {"test", t.test_count}};
    if (!t.ok) {
      tj["error"] = t.error;
    } else {
      tj["clamped_predictions"] = t.clamped_predictions;
      const auto hv = pipeline_detail::histogram_values(t.histogram);
      for (std::size_t k = 0; k < 5; ++k) tj["histogram_metrics"][kHistogramMetricNames[k]] = hv[k];
    }
    trials.push_back(tj);
  }
  j["trials"] = trials;
  return j;
}

// Flat per-trial CSV: one row per trial, empty metric cells for failed
// trials or undefined parameter metrics.
inline void write_trials_csv(std::ostream& out, const EvalReport& r) {
  using score_detail::format_double;
  out << "trial,seed,status,train,test";
  for (const char* m : kHistogramMetricNames) out << ',' << m;
  for (const char* p : kParamNames)
    for (const char* m : kParamMetricNames) out << ',' << p << '_' << m;
  out << '\n';
  for (const auto& t : r.trials) {
    out << t.trial << ',' << t.seed << ',' << (t.ok ? "ok" : "failed") << ',' << t.train_count << ','
        << t.test_count;
    const auto hv = pipeline_detail::histogram_values(t.histogram);
    for (std::size_t k = 0; k < 5; ++k) out << ',' << (t.ok ? format_double(hv[k]) : "");
    for (std::size_t p = 0; p < 4; ++p) {
      const auto pv = pipeline_detail::param_values(t.params[p]);
      for (std::size_t k = 0; k < 5; ++k) out << ',' << (t.ok && t.params_defined ? format_double(pv[k]) : "");
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scatter export

struct ScatterRow {
  std::string image_id;
  std::string distortion;
  ImageStats stats;
  StableParams params;
  bool fitted = false;
};

inline std::vector<ScatterRow> export_scatter(const std::vector<std::string>& image_ids,
                                              const std::vector<std::string>& labels,
                                              const std::vector<std::vector<double>>& scores,
                                              const std::vector<GroundTruth>& truth) {
  const std::size_t n = image_ids.size();
  if (scores.size() != n || truth.size() != n || (!labels.empty() && labels.size() != n))
    throw ShapeError("scatter inputs differ in length");
  std::vector<ScatterRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].image_id = image_ids[i];
    rows[i].distortion = labels.empty() ? "" : labels[i];
    rows[i].stats = summary_stats(scores[i]);
    rows[i].params = truth[i].params;
    rows[i].fitted = truth[i].ok;
  }
  return rows;
}

inline constexpr const char* kScatterHeader = "image_id,distortion,mos,sos,skewness,alpha,beta,gamma,mu";

inline void write_scatter_csv(std::ostream& out, const std::vector<ScatterRow>& rows) {
  using score_detail::format_double;
  out << kScatterHeader << '\n';
  for (const auto& r : rows) {
    out << r.image_id << ',' << r.distortion << ',' << format_double(r.stats.mos) << ','
        << format_double(r.stats.sos) << ',' << format_double(r.stats.skewness);
    if (r.fitted)
      for (double v : param_array(r.params)) out << ',' << format_double(v);
    else
      out << ",,,,";
    out << '\n';
  }
}

struct ScatterCorrelations {
  Correlation mu_mos;
  Correlation gamma_sos;
  Correlation beta_skewness;
};

// Rank correlations over the fitted rows: mu vs MOS, gamma vs SOS and
// beta vs skewness.
inline ScatterCorrelations scatter_correlations(const std::vector<ScatterRow>& rows) {
  std::vector<double> mos, sos, skew, mu, gamma, beta;
  for (const auto& r : rows) {
    if (!r.fitted) continue;
    mos.push_back(r.stats.mos);
    sos.push_back(r.stats.sos);
    skew.push_back(r.stats.skewness);
    mu.push_back(r.params.mu);
    gamma.push_back(r.params.gamma);
    beta.push_back(r.params.beta);
  }
  if (mos.size() < 2) throw InsufficientDataError("rank correlations need at least two fitted images");
  return {srcc(mu, mos), srcc(gamma, sos), srcc(beta, skew)};
}

}  // namespace iqsd

#endif  // IQSD_PIPELINE_HPP_
