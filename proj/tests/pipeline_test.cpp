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

#include "iqsd/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "iqsd/corpus.hpp"
#include "iqsd/dist_zoo.hpp"

namespace iqsd {
namespace {

const std::string kData = IQSD_DATA_DIR;

class QuietLog : public ::testing::Environment {
 public:
  void SetUp() override {
    Log::set_sink([](const std::string&) {});
  }
};
const auto* const kQuiet = ::testing::AddGlobalTestEnvironment(new QuietLog);

// The screened mini-corpus with features (seed 7) and ground truth, built
// once for the whole binary.
const EvalDataset& mini_corpus() {
  static const EvalDataset d = [] {
    const auto raw = load_scores(kData + "/minicorpus/scores.csv");
    const auto m = screen_subjects(raw).retained;
    EvalDataset out;
    out.image_ids = m.images;
    out.features = compute_features(match_images(list_images(kData + "/minicorpus/images"), m.images), 7);
    for (std::size_t j = 0; j < m.image_count(); ++j) out.scores.push_back(m.image_scores(j));
    out.truth = fit_ground_truth(out.scores);
    const auto labels = load_labels(kData + "/minicorpus/labels.csv");
    for (const auto& id : out.image_ids) out.groups.push_back(labels.at(id).content);
    return out;
  }();
  return d;
}

// Frozen from the first verified run on the mini-corpus (seed 7).
constexpr double kFixtureAlpha = 1.909408409767039;
constexpr double kFixtureBeta = 0.89957603497264893;
constexpr double kFixtureGamma = 8.3474273437830213;
constexpr double kFixtureMu = 25.750207986383224;
constexpr double kFixtureJsd = 0.21658341063693182;
constexpr double kFixtureRmse = 0.012438712146823641;
constexpr double kFixtureCosine = 0.61435014649765873;

std::vector<StableParams> truth_params(const EvalDataset& d) {
  std::vector<StableParams> out;
  for (const auto& t : d.truth) out.push_back(t.params);
  return out;
}

ScoreHistogram from_masses(const std::vector<double>& masses) {
  return histogram_from_masses(default_edges(), masses);
}

// Histogram metrics -----------------------------------------------------------

TEST(HistogramMetrics, IdenticalHistograms) {
  const auto h = from_masses({0.1, 0.2, 0.3, 0.2, 0.1, 0.05, 0.05, 0.0, 0.0, 0.0});
  const auto m = histogram_metrics(h, h);
  EXPECT_EQ(m.jsd, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.chebyshev, 0.0);
  EXPECT_EQ(m.chi_square, 0.0);
  EXPECT_NEAR(m.cosine, 1.0, 1e-15);
}

TEST(HistogramMetrics, DisjointOneHot) {
  std::vector<double> a(10, 0.0), b(10, 0.0);
  a[0] = 1.0;
  b[9] = 1.0;
  const auto m = histogram_metrics(from_masses(a), from_masses(b));
  EXPECT_NEAR(m.jsd, std::numbers::ln2, 1e-15);
  EXPECT_EQ(m.cosine, 0.0);
}

TEST(HistogramMetrics, HandEvaluatedPair) {
  std::vector<double> a(10, 0.0), b(10, 0.0);
  a[0] = 0.6;
  a[1] = 0.4;
  b[0] = 0.4;
  b[1] = 0.6;
  const auto m = histogram_metrics(from_masses(a), from_masses(b));
  EXPECT_NEAR(m.rmse, std::sqrt((0.02 * 0.02 + 0.02 * 0.02) / 10.0), 1e-15);
  EXPECT_NEAR(m.rmse, 0.008944, 1e-6);
  EXPECT_NEAR(m.chebyshev, 0.02, 1e-15);
  EXPECT_NEAR(m.chi_square, 0.08, 1e-15);
}

TEST(HistogramMetrics, SymmetricAndBounded) {
  const auto a = from_masses({0.05, 0.1, 0.2, 0.3, 0.2, 0.1, 0.05, 0.0, 0.0, 0.0});
  const auto b = from_masses({0.0, 0.0, 0.1, 0.1, 0.3, 0.3, 0.1, 0.05, 0.05, 0.0});
  const auto ab = histogram_metrics(a, b), ba = histogram_metrics(b, a);
  EXPECT_DOUBLE_EQ(ab.jsd, ba.jsd);
  EXPECT_DOUBLE_EQ(ab.rmse, ba.rmse);
  EXPECT_DOUBLE_EQ(ab.chebyshev, ba.chebyshev);
  EXPECT_DOUBLE_EQ(ab.chi_square, ba.chi_square);
  EXPECT_DOUBLE_EQ(ab.cosine, ba.cosine);
  EXPECT_GT(ab.jsd, 0.0);
  EXPECT_LE(ab.jsd, std::numbers::ln2);
  EXPECT_GT(ab.cosine, 0.0);
  EXPECT_LT(ab.cosine, 1.0);
}

TEST(HistogramMetrics, EdgeMismatchIsShapeError) {
  const auto a = from_masses(std::vector<double>(10, 0.1));
  const auto b = histogram_from_masses({0, 50, 100}, {0.5, 0.5});
  EXPECT_THROW(histogram_metrics(a, b), ShapeError);
}

// Parameter metrics and SRCC ---------------------------------------------------

TEST(ParamMetrics, PerfectPrediction) {
  const std::vector<double> t = {1.0, 2.0, 3.0};
  const auto m = param_error_metrics(t, t);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.mape, 0.0);
  EXPECT_NEAR(m.correlation, 1.0, 1e-15);
  EXPECT_NEAR(m.cosine, 1.0, 1e-15);
}

TEST(ParamMetrics, ConstantOffset) {
  const auto m = param_error_metrics(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4});
  EXPECT_NEAR(m.mae, 1.0, 1e-15);
  EXPECT_NEAR(m.rmse, 1.0, 1e-15);
  EXPECT_NEAR(m.correlation, 1.0, 1e-15);
}

TEST(ParamMetrics, CollinearPrediction) {
  const auto m = param_error_metrics(std::vector<double>{1, 2}, std::vector<double>{2, 4});
  EXPECT_NEAR(m.mape, 1.0, 1e-15);
  EXPECT_NEAR(m.cosine, 1.0, 1e-15);
}

TEST(ParamMetrics, NearZeroTruthExcludedFromMape) {
  const auto m = param_error_metrics(std::vector<double>{0.0, 2.0, 4.0}, std::vector<double>{1.0, 3.0, 4.0});
  EXPECT_EQ(m.mape_excluded, 1u);
  EXPECT_NEAR(m.mape, 0.25, 1e-15);
}

TEST(ParamMetrics, ConstantVectorFlagsCorrelation) {
  const auto m = param_error_metrics(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
  EXPECT_FALSE(m.correlation_defined);
  EXPECT_EQ(m.correlation, 0.0);
}

TEST(ParamMetrics, LengthMismatchIsShapeError) {
  EXPECT_THROW(param_error_metrics(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Srcc, MonotoneAndReversed) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> r = {5, 4, 3, 2, 1};
  EXPECT_NEAR(srcc(a, std::vector<double>{2, 4, 8, 16, 32}).value, 1.0, 1e-15);
  EXPECT_NEAR(srcc(a, r).value, -1.0, 1e-15);
}

TEST(Srcc, TiedAverageRanksAlign) {
  EXPECT_NEAR(srcc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{10, 20, 20, 40}).value, 1.0, 1e-15);
}

TEST(Srcc, ConstantInputIsFlagged) {
  const auto c = srcc(std::vector<double>{3, 3, 3}, std::vector<double>{1, 2, 3});
  EXPECT_FALSE(c.defined);
  EXPECT_EQ(c.value, 0.0);
}

// Ground truth ----------------------------------------------------------------

TEST(FitGroundTruth, RecoversSamplerParameters) {
  const std::vector<StableParams> truth = {{1.8, 0.0, 8.0, 50.0}, {1.5, -0.5, 6.0, 70.0}, {1.9, 0.3, 10.0, 35.0}};
  std::vector<std::vector<double>> scores;
  for (std::size_t i = 0; i < truth.size(); ++i) scores.push_back(sample(truth[i], 2000, 100 + i));
  const auto fits = fit_ground_truth(scores);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ASSERT_TRUE(fits[i].ok) << fits[i].error;
    EXPECT_NEAR(fits[i].params.alpha, truth[i].alpha, 0.15);
    EXPECT_NEAR(fits[i].params.beta, truth[i].beta, 0.35);
    EXPECT_NEAR(fits[i].params.gamma, truth[i].gamma, 0.6);
    EXPECT_NEAR(fits[i].params.mu, truth[i].mu, 1.0);
  }
}

TEST(FitGroundTruth, DegenerateImageIsIsolated) {
  std::vector<std::vector<double>> scores = {sample({1.8, 0.0, 8.0, 50.0}, 60, 1), std::vector<double>(60, 55.0),
                                             sample({1.8, 0.0, 8.0, 60.0}, 60, 2)};
  const auto fits = fit_ground_truth(scores);
  EXPECT_TRUE(fits[0].ok);
  EXPECT_FALSE(fits[1].ok);
  EXPECT_NE(fits[1].error.find("equal"), std::string::npos);
  EXPECT_TRUE(fits[2].ok);
}

TEST(FitGroundTruth, Deterministic) {
  const std::vector<std::vector<double>> scores = {sample({1.7, 0.2, 7.0, 40.0}, 80, 3)};
  const auto a = fit_ground_truth(scores), b = fit_ground_truth(scores);
  EXPECT_EQ(param_array(a[0].params), param_array(b[0].params));
}

// Predictor -------------------------------------------------------------------

TEST(TrainIqsd, ConstantTargetsGiveConstantPredictor) {
  const auto& d = mini_corpus();
  const std::vector<StableParams> targets(d.features.size(), StableParams{1.7, -0.2, 6.5, 55.0});
  const auto p = train_iqsd(d.features, targets);
  const auto out = predict_from_features(p, d.features[3]);
  EXPECT_NEAR(out.params.alpha, 1.7, 1e-9);
  EXPECT_NEAR(out.params.beta, -0.2, 1e-9);
  EXPECT_NEAR(out.params.gamma, 6.5, 1e-9);
  EXPECT_NEAR(out.params.mu, 55.0, 1e-9);
  EXPECT_FALSE(out.any_clamped());
}

TEST(TrainIqsd, RowHashSharedByAllModels) {
  const auto& d = mini_corpus();
  const auto p = train_iqsd(d.features, truth_params(d));
  for (const auto& m : p.models) EXPECT_EQ(m.row_hash, p.row_hash());
  EXPECT_EQ(p.row_hash(), feature_row_hash(feature_rows(d.features)));
}

TEST(TrainIqsd, NeedsTwoRows) {
  const auto& d = mini_corpus();
  EXPECT_THROW(train_iqsd(std::vector<FeatureVector>{d.features[0]}, std::vector<StableParams>{d.truth[0].params}),
               InsufficientDataError);
}

TEST(PredictIqsd, ClampsOutOfBoxBeta) {
  std::vector<std::string> logged;
  Log::set_sink([&](const std::string& m) { logged.push_back(m); });
  const auto out = clamp_prediction({1.9, 1.4, 5.0, 60.0}, "img");
  Log::set_sink([](const std::string&) {});
  EXPECT_EQ(out.params.beta, 1.0);
  EXPECT_TRUE(out.clamped[1]);
  EXPECT_FALSE(out.clamped[0]);
  EXPECT_EQ(out.raw.beta, 1.4);
  ASSERT_EQ(logged.size(), 1u);
  EXPECT_NE(logged[0].find("beta"), std::string::npos);
}

TEST(PredictIqsd, ClampsAlphaAndGamma) {
  const auto out = clamp_prediction({2.3, -0.5, -4.0, 60.0});
  EXPECT_EQ(out.params.alpha, 2.0);
  EXPECT_EQ(out.params.gamma, 1e-3);
  EXPECT_TRUE(out.clamped[0]);
  EXPECT_TRUE(out.clamped[2]);
  EXPECT_FALSE(out.clamped[3]);
  const auto low = clamp_prediction({0.1, 0.0, 1.0, 0.0});
  EXPECT_EQ(low.params.alpha, 0.3);
}

TEST(PredictIqsd, ImageMatchesFeaturePath) {
  const auto& d = mini_corpus();
  const auto p = train_iqsd(d.features, truth_params(d));
  const auto images = match_images(list_images(kData + "/minicorpus/images"), d.image_ids);
  const auto from_image =
      predict_iqsd(p, read_image(images[0].path), image_feature_seed(7, images[0].id), images[0].id);
  const auto from_features = predict_from_features(p, d.features[0]);
  EXPECT_EQ(param_array(from_image.params), param_array(from_features.params));
}

TEST(PredictIqsd, MiniCorpusFixture) {
  const auto& d = mini_corpus();
  const auto p = train_iqsd(d.features, truth_params(d));
  const auto out = predict_from_features(p, d.features[d.image_ids.size() - 1]);
  EXPECT_EQ(d.image_ids.back(), "rocket_jpeg");
  EXPECT_NEAR(out.raw.alpha, kFixtureAlpha, 1e-6);
  EXPECT_NEAR(out.raw.beta, kFixtureBeta, 1e-6);
  EXPECT_NEAR(out.raw.gamma, kFixtureGamma, 1e-6);
  EXPECT_NEAR(out.raw.mu, kFixtureMu, 1e-6);
}

TEST(PredictorJson, RoundTripIsBitIdentical) {
  const auto& d = mini_corpus();
  const auto p = train_iqsd(d.features, truth_params(d));
  const auto back = predictor_from_json(nlohmann::json::parse(predictor_to_json(p).dump()));
  for (const auto& f : d.features) EXPECT_EQ(param_array(predict_from_features(back, f).raw),
                                             param_array(predict_from_features(p, f).raw));
}

TEST(PredictorJson, MixedRowHashesRejected) {
  const auto& d = mini_corpus();
  auto j = predictor_to_json(train_iqsd(d.features, truth_params(d)));
  j["models"]["mu"]["row_hash"] = "0000000000000000";
  EXPECT_THROW(predictor_from_json(j), DomainError);
}

// Evaluation ------------------------------------------------------------------

TEST(RepeatedSplitEval, SingleTrialBounds) {
  EvalOptions o;
  o.trials = 1;
  o.master_seed = 7;
  const auto r = repeated_split_eval(mini_corpus(), o);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_TRUE(r.trials[0].ok) << r.trials[0].error;
  EXPECT_EQ(r.trials[0].train_count, 16u);
  EXPECT_EQ(r.trials[0].test_count, 4u);
  EXPECT_GE(r.histogram[0].mean, 0.0);
  EXPECT_LE(r.histogram[0].mean, std::numbers::ln2);
  for (const auto& s : r.histogram) EXPECT_TRUE(std::isfinite(s.mean));
  EXPECT_EQ(r.histogram[0].sd, 0.0);
}

TEST(RepeatedSplitEval, DeterministicReports) {
  EvalOptions o;
  o.trials = 3;
  o.master_seed = 11;
  const auto a = report_to_json(repeated_split_eval(mini_corpus(), o)).dump();
  const auto b = report_to_json(repeated_split_eval(mini_corpus(), o)).dump();
  EXPECT_EQ(a, b);
}

TEST(RepeatedSplitEval, TrialSeedsAreMasterPlusIndex) {
  EvalOptions o;
  o.trials = 4;
  o.master_seed = 100;
  const auto r = repeated_split_eval(mini_corpus(), o);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(r.trials[t].seed, 100 + t);
  // Trial t is reproduced in isolation by master seed 100 + t.
  EvalOptions single = o;
  single.trials = 1;
  single.master_seed = 102;
  const auto s = repeated_split_eval(mini_corpus(), single);
  EXPECT_EQ(s.trials[0].histogram.jsd, r.trials[2].histogram.jsd);
}

TEST(RepeatedSplitEval, TwentyTrialFixture) {
  EvalOptions o;
  o.trials = 20;
  o.master_seed = 7;
  const auto r = repeated_split_eval(mini_corpus(), o);
  EXPECT_EQ(r.failed_trials, 0u);
  EXPECT_EQ(r.param_trials, 20u);
  EXPECT_NEAR(r.histogram[0].mean, kFixtureJsd, 1e-8);
  EXPECT_NEAR(r.histogram[1].mean, kFixtureRmse, 1e-8);
  EXPECT_NEAR(r.histogram[4].mean, kFixtureCosine, 1e-8);
  EXPECT_GE(r.histogram[4].mean, 0.5);
}

TEST(RepeatedSplitEval, GroupedSplitKeepsContentsApart) {
  EvalOptions o;
  o.trials = 3;
  o.grouped = true;
  o.master_seed = 5;
  const auto r = repeated_split_eval(mini_corpus(), o);
  for (const auto& t : r.trials) {
    EXPECT_TRUE(t.ok) << t.error;
    EXPECT_EQ(t.train_count, 16u);  // 4 of 5 contents, 4 images each
    EXPECT_EQ(t.test_count, 4u);
  }
}

TEST(RepeatedSplitEval, ExcludesImagesWithoutGroundTruthAndValidates) {
  EvalDataset d = mini_corpus();
  d.truth[0].ok = false;
  EvalOptions o;
  o.trials = 2;
  const auto r = repeated_split_eval(d, o);
  ASSERT_EQ(r.excluded_images.size(), 1u);
  EXPECT_EQ(r.images, 19u);
  o.split = 1.0;
  EXPECT_THROW(repeated_split_eval(d, o), DomainError);
  EvalDataset tiny = mini_corpus();
  tiny.image_ids.resize(4);
  tiny.features.resize(4);
  tiny.scores.resize(4);
  tiny.truth.resize(4);
  tiny.groups.resize(4);
  o.split = 0.8;
  EXPECT_THROW(repeated_split_eval(tiny, o), InsufficientDataError);
}

TEST(RepeatedSplitEval, CsvHasOneRowPerTrial) {
  EvalOptions o;
  o.trials = 3;
  std::ostringstream csv;
  write_trials_csv(csv, repeated_split_eval(mini_corpus(), o));
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("trial,seed,status,train,test,jsd,rmse,chebyshev,chi_square,cosine,alpha_rmse", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

// Scatter export --------------------------------------------------------------

TEST(ExportScatter, RowsAndHeader) {
  const auto& d = mini_corpus();
  const auto labels = load_labels(kData + "/minicorpus/labels.csv");
  std::vector<std::string> dist;
  for (const auto& id : d.image_ids) dist.push_back(labels.at(id).distortion);
  const auto rows = export_scatter(d.image_ids, dist, d.scores, d.truth);
  ASSERT_EQ(rows.size(), d.image_ids.size());
  std::ostringstream out;
  write_scatter_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "image_id,distortion,mos,sos,skewness,alpha,beta,gamma,mu");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto st = summary_stats(d.scores[i]);
    EXPECT_EQ(rows[i].stats.mos, st.mos);
    EXPECT_EQ(rows[i].stats.sos, st.sos);
    EXPECT_EQ(rows[i].stats.skewness, st.skewness);
    EXPECT_EQ(param_array(rows[i].params), param_array(d.truth[i].params));
  }
  EXPECT_EQ(rows[0].distortion, "pristine");
  const auto c = scatter_correlations(rows);
  EXPECT_GT(c.mu_mos.value, 0.9);
}

// Synthetic corpus property ---------------------------------------------------

TEST(SyntheticCorpus, StableRmseNoWorseThanBestClassical) {
  const auto m = load_scores(kData + "/synthetic_scores.csv");
  std::vector<std::vector<double>> per_image;
  for (std::size_t j = 0; j < 10; ++j) per_image.push_back(m.image_scores(j));
  const auto table = compare_distributions(per_image, default_edges());
  ASSERT_FALSE(table.empty());
  EXPECT_EQ(table.front().family, kStableFamilyName);
}

}  // namespace
}  // namespace iqsd
