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

// Image directories, label tables and feature CSV files.

#ifndef IQSD_CORPUS_HPP_
#define IQSD_CORPUS_HPP_

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "iqsd/error.hpp"
#include "iqsd/features.hpp"
#include "iqsd/image.hpp"
#include "iqsd/pipeline.hpp"
#include "iqsd/score_data.hpp"

namespace iqsd {

struct CorpusImage {
  std::string id;  // file name without extension
  std::filesystem::path path;
};

// Supported images directly inside `dir`, sorted by identifier.
inline std::vector<CorpusImage> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("image directory '" + dir.string() + "' does not exist");
  std::vector<CorpusImage> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_supported_image(entry.path())) continue;
    out.push_back({entry.path().stem().string(), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const CorpusImage& a, const CorpusImage& b) {
    return a.id != b.id ? a.id < b.id : a.path < b.path;
  });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].id == out[i - 1].id) throw DomainError("duplicate image identifier '" + out[i].id + "'");
  if (out.empty()) throw DomainError("no images found in '" + dir.string() + "'");
  return out;
}

// The image file for every score-matrix column, in column order.
inline std::vector<CorpusImage> match_images(const std::vector<CorpusImage>& available,
                                             const std::vector<std::string>& ids) {
  std::map<std::string, const CorpusImage*> by_id;
  for (const auto& c : available) by_id[c.id] = &c;
  std::vector<CorpusImage> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DomainError("no image file for scored image '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

struct ImageLabel {
  std::string distortion;
  std::string content;
};

// Label CSV with header `image_id,distortion[,content]`.
inline std::map<std::string, ImageLabel> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file '" + path.string() + "'");
  std::map<std::string, ImageLabel> out;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (score_detail::trim(line).empty()) continue;
    const auto cells = score_detail::split_csv_line(line);
    if (!header) {
      if (cells.size() < 2 || cells[0] != "image_id" || cells[1] != "distortion")
        throw ParseError("label header must start with image_id,distortion", row, 0);
      header = true;
      continue;
    }
    if (cells.size() < 2 || cells[0].empty()) throw ParseError("malformed label row", row, 0);
    ImageLabel l{cells[1], cells.size() > 2 ? cells[2] : ""};
    if (!out.emplace(cells[0], l).second) throw ParseError("duplicate label for '" + cells[0] + "'", row, 1);
  }
  if (!header) throw ParseError("empty label file", 0, 0);
  return out;
}

inline std::vector<FeatureVector> compute_features(const std::vector<CorpusImage>& images, std::uint64_t master_seed,
                                                   const FeatureOptions& opt = {}) {
  std::vector<FeatureVector> out;
  out.reserve(images.size());
  for (const auto& c : images) {
    try {
      out.push_back(extract_features(read_image(c.path), image_feature_seed(master_seed, c.id), opt));
    } catch (const Error& e) {
      throw DomainError("image '" + c.id + "': " + e.what());
    }
  }
  return out;
}

inline std::string feature_csv_header() {
  std::string h = "image_id";
  for (const auto& n : feature_names()) h += "," + n;
  return h;
}

inline void write_feature_csv(std::ostream& out, const std::vector<std::string>& ids,
                              const std::vector<FeatureVector>& features) {
  out << feature_csv_header() << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double v : features[i]) out << ',' << score_detail::format_double(v);
    out << '\n';
  }
}

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<FeatureVector> features;
};

inline FeatureTable parse_feature_csv(std::istream& in) {
  FeatureTable t;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (score_detail::trim(line).empty()) continue;
    const auto cells = score_detail::split_csv_line(line);
    if (!header) {
      if (score_detail::trim(line) != feature_csv_header())
        throw ParseError("feature header must be " + feature_csv_header(), row, 0);
      header = true;
      continue;
    }
    if (cells.size() != kFeatureCount + 1) throw ParseError("expected 25 cells", row, 0);
    FeatureVector f{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const std::string& s = cells[k + 1];
      const auto r = std::from_chars(s.data(), s.data() + s.size(), f[k]);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(f[k]))
        throw ParseError("malformed feature value '" + s + "'", row, k + 2);
    }
    t.ids.push_back(cells[0]);
    t.features.push_back(f);
  }
  if (!header) throw ParseError("empty feature file", 0, 0);
  return t;
}

inline FeatureTable load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file '" + path.string() + "'");
  return parse_feature_csv(in);
}

}  // namespace iqsd

#endif  // IQSD_CORPUS_HPP_
