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

// The 24-dimensional quality feature vector: 20 structural similarities
// between the LBP histogram of an image and those of its pseudo reference
// images (JPEG, JP2K, blur, noise at five levels each), followed by the
// generalized-Gaussian shape and variance of the MSCN coefficients at full
// and half resolution.

#ifndef IQSD_FEATURES_HPP_
#define IQSD_FEATURES_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "iqsd/codec.hpp"
#include "iqsd/error.hpp"
#include "iqsd/image.hpp"
#include "iqsd/rng.hpp"

namespace iqsd {

inline constexpr std::size_t kFeatureCount = 24;

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "S_c1", "S_c2", "S_c3", "S_c4", "S_c5", "S_k1", "S_k2", "S_k3", "S_k4", "S_k5", "S_b1", "S_b2",
      "S_b3", "S_b4", "S_b5", "S_n1", "S_n2", "S_n3", "S_n4", "S_n5", "nu",   "sigma2", "nu_s", "sigma2_s"};
  return names;
}

using FeatureVector = std::array<double, kFeatureCount>;

// Distortion schedules for level i = 1..5.
inline int jpeg_quality_level(int i) { return 2 * i - 2; }
inline double jp2k_ratio_level(int i) { return 25.0 * i; }
inline double blur_sigma_level(int i) { return 0.5 * i; }
inline double noise_variance_level(int i) { return 0.1 * i; }

// Half-sample symmetric reflection of index i into [0, n).
inline int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Separable convolution with a symmetric odd-length kernel, mirror borders.
inline GrayImage convolve_separable(const GrayImage& img, const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  GrayImage tmp(img.width, img.height), out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += kernel[k + r] * img.at(mirror_index(x + k, img.width), y);
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += kernel[k + r] * tmp.at(x, mirror_index(y + k, img.height));
      out.at(x, y) = s;
    }
  return out;
}

// Unit-sum sampled Gaussian of the given radius.
inline std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

// Gaussian blur with radius ceil(3 sigma) and mirror borders.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("blur sigma must be positive");
  return convolve_separable(img, gaussian_kernel(sigma, static_cast<int>(std::ceil(3.0 * sigma))));
}

// Standard-normal field shared by the five noise levels of one image.
struct NoiseField {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  static NoiseField generate(int w, int h, std::uint64_t seed) {
    NoiseField f{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    Rng rng(seed);
    for (double& v : f.values) v = rng.normal();
    return f;
  }

  NoiseField flipped_horizontal() const {
    NoiseField f{width, height, values};
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        f.values[static_cast<std::size_t>(y) * width + x] = values[static_cast<std::size_t>(y) * width + width - 1 - x];
    return f;
  }
};

// Additive white Gaussian noise of the given variance on the [0, 1] scale,
// clipped to [0, 1].
inline GrayImage add_noise(const GrayImage& img, double variance, const NoiseField& field) {
  if (field.width != img.width || field.height != img.height) throw ShapeError("noise field size mismatch");
  GrayImage out(img.width, img.height);
  const double sd = std::sqrt(variance);
  for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = std::clamp(img.pixels[i] + sd * field.values[i], 0.0, 1.0);
  return out;
}

struct LabeledImage {
  std::string label;
  GrayImage image;
};

// The 20 pseudo reference images in feature order: c1..c5 (JPEG quality
// 0, 2, 4, 6, 8), k1..k5 (JP2K ratio 25..125), b1..b5 (blur sigma
// 0.5..2.5), n1..n5 (noise variance 0.1..0.5). All are stored at 8 bits.
inline std::vector<LabeledImage> generate_mpris(const GrayImage& img, const NoiseField& field,
                                                const CodecSettings& codecs = {}) {
  std::vector<LabeledImage> out;
  out.reserve(20);
  for (int i = 1; i <= 5; ++i) {
    try {
      out.push_back({"c" + std::to_string(i), quantize8(apply_jpeg(img, jpeg_quality_level(i), codecs))});
    } catch (const CodecError& e) {
      throw CodecError("jpeg level c" + std::to_string(i) + ": " + e.what());
    }
  }
  for (int i = 1; i <= 5; ++i) {
    try {
      out.push_back({"k" + std::to_string(i), quantize8(apply_jp2k(img, jp2k_ratio_level(i), codecs))});
    } catch (const CodecError& e) {
      throw CodecError(codecs.jp2k_label() + " level k" + std::to_string(i) + ": " + e.what());
    }
  }
  for (int i = 1; i <= 5; ++i)
    out.push_back({"b" + std::to_string(i), quantize8(gaussian_blur(img, blur_sigma_level(i)))});
  for (int i = 1; i <= 5; ++i)
    out.push_back({"n" + std::to_string(i), quantize8(add_noise(img, noise_variance_level(i), field))});
  return out;
}

inline std::vector<LabeledImage> generate_mpris(const GrayImage& img, std::uint64_t seed,
                                                const CodecSettings& codecs = {}) {
  return generate_mpris(img, NoiseField::generate(img.width, img.height, derive_seed(seed, 0x6e6f697365ULL)), codecs);
}

using LbpHistogram = std::array<double, 5>;

// Four-neighbour LBP (up, right, down, left; radius 1) with u(0) = 1,
// histogrammed over interior pixels.
inline LbpHistogram lbp_histogram(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) throw ShapeError("LBP needs an image of at least 3 x 3 pixels");
  LbpHistogram h{};
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      const double c = img.at(x, y);
      const int code = (img.at(x, y - 1) >= c) + (img.at(x + 1, y) >= c) + (img.at(x, y + 1) >= c) +
                       (img.at(x - 1, y) >= c);
      h[code] += 1.0;
    }
  const double n = static_cast<double>(img.width - 2) * (img.height - 2);
  for (double& v : h) v /= n;
  return h;
}

// Chi-square-type distance between LBP histograms; 0/0 terms contribute 0.
inline double structural_similarity(const LbpHistogram& a, const LbpHistogram& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] + b[k];
    if (t > 0.0) s += (a[k] - b[k]) * (a[k] - b[k]) / t;
  }
  return s;
}

// Row-major coefficient field with the dimensions of its source image.
struct CoefficientField {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

// MSCN coefficients (I - mu) / (sigma + 1) on the 0-255 scale, with mu and
// sigma the local mean and deviation under a 7 x 7 unit-sum Gaussian window
// (sigma_w = 7/6) and mirror-padded borders.
inline CoefficientField mscn(const GrayImage& img) {
  const auto k = gaussian_kernel(7.0 / 6.0, 3);
  GrayImage scaled(img.width, img.height), sq(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    scaled.pixels[i] = 255.0 * img.pixels[i];
    sq.pixels[i] = scaled.pixels[i] * scaled.pixels[i];
  }
  const GrayImage mu = convolve_separable(scaled, k);
  const GrayImage mu2 = convolve_separable(sq, k);
  CoefficientField f{img.width, img.height, std::vector<double>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double var = std::max(mu2.pixels[i] - mu.pixels[i] * mu.pixels[i], 0.0);
    f.values[i] = (scaled.pixels[i] - mu.pixels[i]) / (std::sqrt(var) + 1.0);
  }
  return f;
}

struct GgdFit {
  double shape = 2.0;
  double variance = 0.0;
  // True when rho fell outside the invertible range and was clamped.
  bool clamped = false;
};

// r(nu) = Gamma(2/nu)^2 / (Gamma(1/nu) Gamma(3/nu)), increasing in nu.
inline double ggd_ratio(double nu) {
  return std::exp(2.0 * std::lgamma(2.0 / nu) - std::lgamma(1.0 / nu) - std::lgamma(3.0 / nu));
}

// Moment-matching zero-mean GGD fit: solve r(nu) = (mean |x|)^2 / mean(x^2)
// by bisection on [0.2, 10]; variance = mean(x^2).
inline GgdFit ggd_fit(const std::vector<double>& x, std::size_t min_count = 100) {
  if (x.size() < min_count)
    throw InsufficientDataError("GGD fit needs at least " + std::to_string(min_count) + " coefficients");
  double abs_mean = 0.0, sq_mean = 0.0;
  for (double v : x) {
    abs_mean += std::abs(v);
    sq_mean += v * v;
  }
  abs_mean /= static_cast<double>(x.size());
  sq_mean /= static_cast<double>(x.size());
  if (!(sq_mean > 0.0)) throw DegenerateDataError("GGD fit on an all-zero coefficient field");
  const double rho = abs_mean * abs_mean / sq_mean;
  GgdFit fit;
  fit.variance = sq_mean;
  double lo = 0.2, hi = 10.0;
  if (rho <= ggd_ratio(lo)) {
    fit.shape = lo;
    fit.clamped = true;
    return fit;
  }
  if (rho >= ggd_ratio(hi)) {
    fit.shape = hi;
    fit.clamped = true;
    return fit;
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ggd_ratio(mid) < rho ? lo : hi) = mid;
  }
  fit.shape = 0.5 * (lo + hi);
  return fit;
}

// 2 x 2 box low-pass followed by decimation by 2.
inline GrayImage downsample2(const GrayImage& img) {
  GrayImage out(img.width / 2, img.height / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = 0.25 * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) + img.at(2 * x, 2 * y + 1) +
                             img.at(2 * x + 1, 2 * y + 1));
  return out;
}

struct FeatureOptions {
  CodecSettings codecs;
};

// Feature vector from explicit pseudo reference images (feature order).
inline FeatureVector features_from_mpris(const GrayImage& img, const std::vector<LabeledImage>& mpris) {
  if (mpris.size() != 20) throw ShapeError("expected 20 pseudo reference images");
  FeatureVector v{};
  const auto h = lbp_histogram(img);
  for (std::size_t i = 0; i < 20; ++i) v[i] = structural_similarity(h, lbp_histogram(mpris[i].image));
  const auto full = ggd_fit(mscn(img).values);
  // The half-resolution field of the smallest admissible 16 x 16 image has
  // 64 coefficients.
  const auto half = ggd_fit(mscn(downsample2(img)).values, 64);
  v[20] = full.shape;
  v[21] = full.variance;
  v[22] = half.shape;
  v[23] = half.variance;
  return v;
}

inline FeatureVector extract_features(const GrayImage& img, const NoiseField& field, const FeatureOptions& opt = {}) {
  validate_image(img);
  return features_from_mpris(img, generate_mpris(img, field, opt.codecs));
}

inline FeatureVector extract_features(const GrayImage& img, std::uint64_t seed, const FeatureOptions& opt = {}) {
  validate_image(img);
  return features_from_mpris(img, generate_mpris(img, seed, opt.codecs));
}

}  // namespace iqsd

#endif  // IQSD_FEATURES_HPP_
