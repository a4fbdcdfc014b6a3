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

// iqsd: command-line front end.
//
// Exit status: 0 on success, 1 on a domain error, 2 on a usage error.
// Failures print exactly one line to stderr:
//   iqsd: error: <category>: <message>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "iqsd/corpus.hpp"
#include "iqsd/dist_zoo.hpp"
#include "iqsd/error.hpp"
#include "iqsd/histogram.hpp"
#include "iqsd/log.hpp"
#include "iqsd/pipeline.hpp"
#include "iqsd/score_data.hpp"
#include "iqsd/stable.hpp"

namespace {

namespace fs = std::filesystem;
using iqsd::score_detail::format_double;

constexpr std::uint64_t kDefaultSeed = 2026;

struct RunConfig {
  std::string images;
  std::string scores;
  std::string out;
  std::string labels;
  std::string features;
  std::string params;
  std::string model;
  std::uint64_t seed = kDefaultSeed;
  std::size_t trials = 1000;
  double split = 0.8;
  std::string bins = "0,10,...,100";
  std::string jpeg_codec;
  std::string jp2k_codec = "surrogate";
  double svr_c = 128.0;
  double svr_eps = 0.1;
  double svr_gamma = 1.0 / 24.0;
  bool grid_search = false;
  bool grouped = false;
  bool no_screen = false;
  bool no_outlier_stage = false;
  bool no_consistency_stage = false;
  double max_outlier_fraction = 0.05;
  double max_outlier_asymmetry = 0.3;
  double min_correlation = 0.7;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

const char* category(const iqsd::Error& e) {
  if (dynamic_cast<const iqsd::ParseError*>(&e)) return "parse";
  if (dynamic_cast<const iqsd::IoError*>(&e)) return "io";
  if (dynamic_cast<const iqsd::CodecError*>(&e)) return "codec";
  if (dynamic_cast<const iqsd::ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const iqsd::SupportError*>(&e)) return "support";
  if (dynamic_cast<const iqsd::DegenerateDataError*>(&e)) return "degenerate-data";
  if (dynamic_cast<const iqsd::InsufficientDataError*>(&e)) return "insufficient-data";
  if (dynamic_cast<const iqsd::NumericalError*>(&e)) return "numerical";
  return "domain";
}

// ---------------------------------------------------------------------------
// Shared helpers

fs::path output_dir(const RunConfig& c) {
  const fs::path dir = c.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw iqsd::IoError("cannot create output directory '" + c.out + "'");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw iqsd::IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw iqsd::IoError("cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw iqsd::IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw iqsd::ParseError("'" + path.string() + "' is not valid JSON: " + e.what(), 0, 0);
  }
}

iqsd::ScreeningOptions screening_options(const RunConfig& c) {
  iqsd::ScreeningOptions o;
  o.outlier_stage = !c.no_outlier_stage;
  o.consistency_stage = !c.no_consistency_stage;
  o.max_outlier_fraction = c.max_outlier_fraction;
  o.max_outlier_asymmetry = c.max_outlier_asymmetry;
  o.min_correlation = c.min_correlation;
  return o;
}

iqsd::ScoreMatrix load_scores_screened(const RunConfig& c) {
  auto m = iqsd::load_scores(c.scores);
  if (c.no_screen) return m;
  return iqsd::screen_subjects(m, screening_options(c)).retained;
}

iqsd::FeatureOptions feature_options(const RunConfig& c) {
  iqsd::FeatureOptions o;
  o.codecs.jpeg_command = c.jpeg_codec == "libjpeg" ? "" : c.jpeg_codec;
  o.codecs.jp2k_command = c.jp2k_codec;
  return o;
}

iqsd::TrainOptions train_options(const RunConfig& c) {
  iqsd::TrainOptions o;
  o.hyper.c = c.svr_c;
  o.hyper.epsilon = c.svr_eps;
  o.hyper.gamma = c.svr_gamma;
  o.grid_search = c.grid_search;
  o.seed = iqsd::derive_seed(c.seed, 0x637676ULL);
  return o;
}

std::vector<std::vector<double>> per_image_scores(const iqsd::ScoreMatrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < m.image_count(); ++j) out.push_back(m.image_scores(j));
  return out;
}

nlohmann::json params_json(const iqsd::StableParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"mu", p.mu}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_screen(const RunConfig& c) {
  const auto m = iqsd::load_scores(c.scores);
  const auto r = iqsd::screen_subjects(m, screening_options(c));
  const auto dir = output_dir(c);
  std::ostringstream retained;
  iqsd::write_scores(retained, r.retained);
  write_text(dir / "retained_scores.csv", retained.str());
  std::ostringstream rej;
  rej << "subject_id,stage,statistic,above,below\n";
  for (const auto& x : r.rejected)
    rej << x.subject << ',' << x.stage << ',' << format_double(x.statistic) << ',' << x.above << ',' << x.below
        << '\n';
  write_text(dir / "rejections.csv", rej.str());
  std::cout << "retained " << r.retained.subject_count() << " of " << m.subject_count() << " subjects\n";
  return 0;
}

int cmd_fit_stable(const RunConfig& c) {
  const auto m = load_scores_screened(c);
  const auto truth = iqsd::fit_ground_truth(per_image_scores(m));
  nlohmann::json images = nlohmann::json::array();
  std::size_t failed = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    nlohmann::json e = {{"image_id", m.images[j]}, {"ok", truth[j].ok}};
    if (truth[j].ok) {
      e["params"] = params_json(truth[j].params);
      e["converged"] = truth[j].converged;
      e["log_likelihood"] = truth[j].log_likelihood;
    } else {
      e["error"] = truth[j].error;
      ++failed;
    }
    images.push_back(e);
  }
  write_json(output_dir(c) / "stable_params.json",
             {{"subjects", m.subject_count()}, {"screened", !c.no_screen}, {"images", images}});
  std::cout << "fitted " << truth.size() - failed << " of " << truth.size() << " images\n";
  return 0;
}

int cmd_compare_dists(const RunConfig& c) {
  const auto m = load_scores_screened(c);
  const auto edges = iqsd::parse_edges(c.bins);
  const auto table = iqsd::compare_distributions(per_image_scores(m), edges);
  std::ostringstream out;
  out << "rank,family,mean_rmse,chi_square_pass_rate,images,failures\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    out << i + 1 << ',' << table[i].family << ',' << format_double(table[i].mean_rmse) << ','
        << format_double(table[i].pass_rate) << ',' << table[i].images << ',' << table[i].failures << '\n';
  write_text(output_dir(c) / "compare_dists.csv", out.str());
  if (!table.empty()) std::cout << "best family: " << table.front().family << '\n';
  return 0;
}

int cmd_features(const RunConfig& c) {
  const auto images = iqsd::list_images(c.images);
  const auto features = iqsd::compute_features(images, c.seed, feature_options(c));
  std::vector<std::string> ids;
  for (const auto& i : images) ids.push_back(i.id);
  std::ostringstream out;
  iqsd::write_feature_csv(out, ids, features);
  write_text(output_dir(c) / "features.csv", out.str());
  std::cout << "extracted features for " << ids.size() << " images\n";
  return 0;
}

int cmd_train(const RunConfig& c) {
  const auto table = iqsd::load_feature_csv(c.features);
  const auto doc = read_json(c.params);
  std::map<std::string, iqsd::StableParams> fitted;
  try {
    for (const auto& e : doc.at("images")) {
      if (!e.at("ok").get<bool>()) continue;
      const auto& p = e.at("params");
      fitted[e.at("image_id").get<std::string>()] = {p.at("alpha").get<double>(), p.at("beta").get<double>(),
                                                      p.at("gamma").get<double>(), p.at("mu").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw iqsd::ParseError(std::string("malformed parameter file: ") + e.what(), 0, 0);
  }
  std::vector<iqsd::FeatureVector> rows;
  std::vector<iqsd::StableParams> targets;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto it = fitted.find(table.ids[i]);
    if (it == fitted.end()) {
      iqsd::Log::warn("no fitted parameters for '" + table.ids[i] + "'; row skipped");
      continue;
    }
    rows.push_back(table.features[i]);
    targets.push_back(it->second);
  }
  const auto predictor = iqsd::train_iqsd(rows, targets, train_options(c), feature_options(c));
  write_json(output_dir(c) / "predictor.json", iqsd::predictor_to_json(predictor));
  std::cout << "trained on " << rows.size() << " images\n";
  return 0;
}

int cmd_predict(const RunConfig& c, bool codecs_given) {
  auto predictor = iqsd::predictor_from_json(read_json(c.model));
  if (codecs_given) predictor.feature_config = feature_options(c);
  const auto edges = iqsd::parse_edges(c.bins);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& img : iqsd::list_images(c.images)) {
    iqsd::PredictedParams p;
    try {
      p = iqsd::predict_iqsd(predictor, iqsd::read_image(img.path), iqsd::image_feature_seed(c.seed, img.id), img.id);
    } catch (const iqsd::Error& e) {
      throw iqsd::DomainError("image '" + img.id + "': " + e.what());
    }
    const auto h = iqsd::histogramize(p.params, edges);
    nlohmann::json clamped = nlohmann::json::array();
    for (std::size_t k = 0; k < 4; ++k)
      if (p.clamped[k]) clamped.push_back(iqsd::kParamNames[k]);
    out.push_back({{"image_id", img.id},
                   {"params", params_json(p.params)},
                   {"raw", params_json(p.raw)},
                   {"clamped", clamped},
                   {"histogram", {{"edges", h.edges}, {"densities", h.densities}}}});
  }
  write_json(output_dir(c) / "predictions.json", {{"seed", c.seed}, {"images", out}});
  std::cout << "predicted " << out.size() << " images\n";
  return 0;
}

int cmd_eval(const RunConfig& c) {
  const auto m = load_scores_screened(c);
  iqsd::EvalDataset d;
  d.image_ids = m.images;
  d.scores = per_image_scores(m);
  d.features = iqsd::compute_features(iqsd::match_images(iqsd::list_images(c.images), m.images), c.seed,
                                      feature_options(c));
  d.truth = iqsd::fit_ground_truth(d.scores);
  if (c.grouped) {
    if (c.labels.empty()) throw iqsd::DomainError("grouped split needs --labels with a content column");
    const auto labels = iqsd::load_labels(c.labels);
    for (const auto& id : d.image_ids) {
      const auto it = labels.find(id);
      if (it == labels.end() || it->second.content.empty())
        throw iqsd::DomainError("no content group for image '" + id + "'");
      d.groups.push_back(it->second.content);
    }
  }
  iqsd::EvalOptions o;
  o.trials = c.trials;
  o.split = c.split;
  o.master_seed = c.seed;
  o.edges = iqsd::parse_edges(c.bins);
  o.train = train_options(c);
  o.grouped = c.grouped;
  const auto report = iqsd::repeated_split_eval(d, o);
  const auto dir = output_dir(c);
  auto j = iqsd::report_to_json(report);
  j["subjects"] = m.subject_count();
  j["screened"] = !c.no_screen;
  j["feature_config"] = {{"jpeg_codec", c.jpeg_codec.empty() ? "libjpeg" : c.jpeg_codec},
                         {"jp2k_codec", c.jp2k_codec}};
  write_json(dir / "eval_report.json", j);
  std::ostringstream csv;
  iqsd::write_trials_csv(csv, report);
  write_text(dir / "eval_trials.csv", csv.str());
  std::cout << "trials " << report.trial_count << " failed " << report.failed_trials << " jsd "
            << format_double(report.histogram[0].mean) << " cosine " << format_double(report.histogram[4].mean)
            << '\n';
  return 0;
}

int cmd_scatter(const RunConfig& c) {
  const auto m = load_scores_screened(c);
  const auto scores = per_image_scores(m);
  const auto truth = iqsd::fit_ground_truth(scores);
  std::vector<std::string> labels;
  if (!c.labels.empty()) {
    const auto table = iqsd::load_labels(c.labels);
    for (const auto& id : m.images) {
      const auto it = table.find(id);
      labels.push_back(it == table.end() ? "" : it->second.distortion);
    }
  }
  const auto rows = iqsd::export_scatter(m.images, labels, scores, truth);
  const auto dir = output_dir(c);
  std::ostringstream csv;
  iqsd::write_scatter_csv(csv, rows);
  write_text(dir / "scatter.csv", csv.str());
  const auto corr = iqsd::scatter_correlations(rows);
  auto cj = [](const iqsd::Correlation& x) { return nlohmann::json{{"value", x.value}, {"defined", x.defined}}; };
  write_json(dir / "scatter_summary.json",
             {{"srcc_mu_mos", cj(corr.mu_mos)},
              {"srcc_gamma_sos", cj(corr.gamma_sos)},
              {"srcc_beta_skewness", cj(corr.beta_skewness)}});
  std::cout << "srcc(mu, mos) " << format_double(corr.mu_mos.value) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// Argument wiring

void add_out(CLI::App* s, RunConfig& c) {
  s->add_option("--out", c.out, "Output directory (created if missing)")->required();
}
void add_scores(CLI::App* s, RunConfig& c) {
  s->add_option("--scores", c.scores, "Score CSV: subject_id,<image ids...>")->required()->check(CLI::ExistingFile);
}
void add_images(CLI::App* s, RunConfig& c) {
  s->add_option("--images", c.images, "Directory of PNG/BMP/PGM images")->required()->check(CLI::ExistingDirectory);
}
void add_seed(CLI::App* s, RunConfig& c) {
  s->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
}
void add_bins(CLI::App* s, RunConfig& c) {
  s->add_option("--bins", c.bins, "Histogram edges, e.g. \"0,10,...,100\"")->capture_default_str();
}
void add_screening(CLI::App* s, RunConfig& c, bool optional) {
  if (optional) s->add_flag("--no-screen", c.no_screen, "Skip subject screening");
  s->add_flag("--no-outlier-stage", c.no_outlier_stage, "Disable the BT.500 outlier stage");
  s->add_flag("--no-consistency-stage", c.no_consistency_stage, "Disable the correlation stage");
  s->add_option("--max-outlier-fraction", c.max_outlier_fraction, "Outlier-stage rejection fraction")
      ->capture_default_str();
  s->add_option("--max-outlier-asymmetry", c.max_outlier_asymmetry, "Outlier-stage asymmetry bound")
      ->capture_default_str();
  s->add_option("--min-correlation", c.min_correlation, "Correlation-stage floor")->capture_default_str();
}
std::vector<CLI::Option*> add_codecs(CLI::App* s, RunConfig& c) {
  return {s->add_option("--jpeg-codec", c.jpeg_codec,
                        "JPEG command template with {in} {out} {level}, or libjpeg (default)"),
          s->add_option("--jp2k-codec", c.jp2k_codec,
                        "JP2K command template with {in} {out} {level}, or surrogate")
              ->capture_default_str()};
}
void add_svr(CLI::App* s, RunConfig& c) {
  s->add_option("--svr-c", c.svr_c, "SVR regularization C")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--svr-eps", c.svr_eps, "SVR tube width epsilon")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--svr-gamma", c.svr_gamma, "RBF kernel width g")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_flag("--grid-search", c.grid_search, "5-fold grid search over C and g per parameter");
}

int run(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Image quality score distributions: alpha-stable modelling, features, SVR prediction"};
  app.name("iqsd");
  app.set_config("--config", "", "TOML-style config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);

  auto* screen = app.add_subcommand("screen", "Screen subjects; write retained scores and rejections");
  add_scores(screen, c);
  add_out(screen, c);
  add_screening(screen, c, false);

  auto* fit = app.add_subcommand("fit-stable", "Fit the alpha-stable law to each image's scores");
  add_scores(fit, c);
  add_out(fit, c);
  add_screening(fit, c, true);

  auto* compare = app.add_subcommand("compare-dists", "Rank distribution families by mean histogram RMSE");
  add_scores(compare, c);
  add_out(compare, c);
  add_bins(compare, c);
  add_screening(compare, c, true);

  auto* features = app.add_subcommand("features", "Extract the 24 image features");
  add_images(features, c);
  add_out(features, c);
  add_seed(features, c);
  add_codecs(features, c);

  auto* train = app.add_subcommand("train", "Train the four parameter regressors");
  train->add_option("--features", c.features, "Feature CSV from `features`")->required()->check(CLI::ExistingFile);
  train->add_option("--params", c.params, "stable_params.json from `fit-stable`")->required()->check(CLI::ExistingFile);
  add_out(train, c);
  add_seed(train, c);
  add_svr(train, c);
  add_codecs(train, c);

  auto* predict = app.add_subcommand("predict", "Predict score distributions for images");
  predict->add_option("--model", c.model, "predictor.json from `train`")->required()->check(CLI::ExistingFile);
  add_images(predict, c);
  add_out(predict, c);
  add_seed(predict, c);
  add_bins(predict, c);
  const auto predict_codecs = add_codecs(predict, c);

  auto* eval = app.add_subcommand("eval", "Repeated random-split evaluation");
  add_images(eval, c);
  add_scores(eval, c);
  add_out(eval, c);
  add_seed(eval, c);
  eval->add_option("--trials", c.trials, "Number of random splits")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--split", c.split, "Training fraction in (0, 1)")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  add_bins(eval, c);
  add_svr(eval, c);
  add_codecs(eval, c);
  eval->add_flag("--grouped", c.grouped, "Split by content group (needs --labels)");
  eval->add_option("--labels", c.labels, "Label CSV: image_id,distortion[,content]")->check(CLI::ExistingFile);
  add_screening(eval, c, true);

  auto* scatter = app.add_subcommand("scatter", "Export per-image MOS/SOS/skewness vs fitted parameters");
  add_scores(scatter, c);
  add_out(scatter, c);
  scatter->add_option("--labels", c.labels, "Label CSV: image_id,distortion[,content]")->check(CLI::ExistingFile);
  add_screening(scatter, c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "iqsd: error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  if (c.split <= 0.0 || c.split >= 1.0) {
    std::cerr << "iqsd: error: usage: --split must lie strictly between 0 and 1\n";
    return 2;
  }
  try {
    if (screen->parsed()) return cmd_screen(c);
    if (fit->parsed()) return cmd_fit_stable(c);
    if (compare->parsed()) return cmd_compare_dists(c);
    if (features->parsed()) return cmd_features(c);
    if (train->parsed()) return cmd_train(c);
    if (predict->parsed())
      return cmd_predict(c, predict_codecs[0]->count() > 0 || predict_codecs[1]->count() > 0);
    if (eval->parsed()) return cmd_eval(c);
    if (scatter->parsed()) return cmd_scatter(c);
  } catch (const iqsd::Error& e) {
    std::cerr << "iqsd: error: " << category(e) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "iqsd: error: domain: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "iqsd: error: io: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
