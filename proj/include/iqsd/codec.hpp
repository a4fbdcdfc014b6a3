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

// Lossy round-trip codecs used to build pseudo reference images: baseline
// JPEG through libjpeg, a JPEG2000-like wavelet surrogate, and arbitrary
// external encoders driven by a command template.

#ifndef IQSD_CODEC_HPP_
#define IQSD_CODEC_HPP_

#include <jpeglib.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iqsd/error.hpp"
#include "iqsd/image.hpp"
#include "iqsd/log.hpp"

namespace iqsd {

namespace codec_detail {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_silent(j_common_ptr) {}

// Encodes 8-bit grayscale rows; returns false and fills `message` on error.
// Only trivially destructible locals live in this frame because of longjmp.
inline bool jpeg_encode_raw(const std::uint8_t* pixels, int w, int h, int quality, unsigned char** out,
                            unsigned long* out_size, char* message) {
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_silent;
  if (setjmp(err.jump)) {
    std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, out, out_size);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(pixels + static_cast<std::size_t>(cinfo.next_scanline) * w);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

inline bool jpeg_decode_raw(const unsigned char* data, unsigned long size, std::uint8_t* pixels, int w, int h,
                            char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_silent;
  if (setjmp(err.jump)) {
    std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_GRAYSCALE;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  if (static_cast<int>(cinfo.output_width) != w || static_cast<int>(cinfo.output_height) != h ||
      cinfo.output_components != 1) {
    std::snprintf(message, JMSG_LENGTH_MAX, "decoded JPEG has unexpected geometry");
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels + static_cast<std::size_t>(cinfo.output_scanline) * w;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace codec_detail

// Baseline JPEG round trip through libjpeg (islow DCT, standard tables).
// Quality 0 is not a legal libjpeg setting and is raised to 1 with a log
// message.
inline GrayImage jpeg_round_trip(const GrayImage& img, int quality, std::size_t* encoded_bytes = nullptr) {
  if (quality < 0 || quality > 100) throw CodecError("JPEG quality must lie in [0, 100]");
  if (quality == 0) {
    Log::warn_once("jpeg-quality-0", "JPEG quality 0 is not accepted by libjpeg; using quality 1");
    quality = 1;
  }
  std::vector<std::uint8_t> raw(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) raw[i] = to_byte(img.pixels[i]);
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  char message[JMSG_LENGTH_MAX] = {0};
  if (!codec_detail::jpeg_encode_raw(raw.data(), img.width, img.height, quality, &buf, &size, message)) {
    std::free(buf);
    throw CodecError(std::string("JPEG encode failed at quality ") + std::to_string(quality) + ": " + message);
  }
  if (encoded_bytes) *encoded_bytes = size;
  std::vector<std::uint8_t> decoded(img.size());
  const bool ok = codec_detail::jpeg_decode_raw(buf, size, decoded.data(), img.width, img.height, message);
  std::free(buf);
  if (!ok) throw CodecError(std::string("JPEG decode failed at quality ") + std::to_string(quality) + ": " + message);
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = decoded[i] / 255.0;
  return out;
}

namespace codec_detail {

// In-place orthonormal Haar analysis of the top-left w x h block (w, h even).
inline void haar_forward(std::vector<double>& c, int stride, int w, int h) {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<double> tmp(std::max(w, h));
  for (int y = 0; y < h; ++y) {
    double* row = &c[static_cast<std::size_t>(y) * stride];
    for (int i = 0; i < w / 2; ++i) {
      tmp[i] = (row[2 * i] + row[2 * i + 1]) * s;
      tmp[w / 2 + i] = (row[2 * i] - row[2 * i + 1]) * s;
    }
    std::copy(tmp.begin(), tmp.begin() + w, row);
  }
  for (int x = 0; x < w; ++x) {
    for (int i = 0; i < h / 2; ++i) {
      const double a = c[static_cast<std::size_t>(2 * i) * stride + x];
      const double b = c[static_cast<std::size_t>(2 * i + 1) * stride + x];
      tmp[i] = (a + b) * s;
      tmp[h / 2 + i] = (a - b) * s;
    }
    for (int y = 0; y < h; ++y) c[static_cast<std::size_t>(y) * stride + x] = tmp[y];
  }
}

inline void haar_inverse(std::vector<double>& c, int stride, int w, int h) {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<double> tmp(std::max(w, h));
  for (int x = 0; x < w; ++x) {
    for (int i = 0; i < h / 2; ++i) {
      const double a = c[static_cast<std::size_t>(i) * stride + x];
      const double d = c[static_cast<std::size_t>(h / 2 + i) * stride + x];
      tmp[2 * i] = (a + d) * s;
      tmp[2 * i + 1] = (a - d) * s;
    }
    for (int y = 0; y < h; ++y) c[static_cast<std::size_t>(y) * stride + x] = tmp[y];
  }
  for (int y = 0; y < h; ++y) {
    double* row = &c[static_cast<std::size_t>(y) * stride];
    for (int i = 0; i < w / 2; ++i) {
      tmp[2 * i] = (row[i] + row[w / 2 + i]) * s;
      tmp[2 * i + 1] = (row[i] - row[w / 2 + i]) * s;
    }
    std::copy(tmp.begin(), tmp.begin() + w, row);
  }
}

struct Subband {
  int x0, y0, w, h;
};

// Subbands of a two-level decomposition of a W x H (multiple of 4) plane.
inline std::vector<Subband> two_level_subbands(int W, int H) {
  const int w1 = W / 2, h1 = H / 2, w2 = W / 4, h2 = H / 4;
  return {{0, 0, w2, h2},  {w2, 0, w2, h2}, {0, h2, w2, h2}, {w2, h2, w2, h2},
          {w1, 0, w1, h1}, {0, h1, w1, h1}, {w1, h1, w1, h1}};
}

// Zeroth-order entropy estimate of the quantized coefficients, in bytes.
inline double quantized_bytes(const std::vector<double>& c, int stride, const std::vector<Subband>& bands,
                              double step) {
  double bits = 0.0;
  std::map<long long, std::size_t> hist;
  for (const auto& b : bands) {
    hist.clear();
    for (int y = b.y0; y < b.y0 + b.h; ++y)
      for (int x = b.x0; x < b.x0 + b.w; ++x)
        ++hist[std::llround(c[static_cast<std::size_t>(y) * stride + x] / step)];
    const double n = static_cast<double>(b.w) * b.h;
    for (const auto& [sym, count] : hist) {
      const double p = static_cast<double>(count) / n;
      bits -= static_cast<double>(count) * std::log2(p);
    }
  }
  return bits / 8.0;
}

}  // namespace codec_detail

// JPEG2000-like surrogate: two-level orthonormal Haar transform of the
// image on the 0-255 scale (edge-replicated to a multiple of 4), uniform
// mid-tread quantization with one step for all subbands, inverse transform.
// The step is found by bisection so that the zeroth-order entropy estimate
// of the quantized coefficients reaches (width * height) / ratio bytes.
inline GrayImage jp2k_surrogate(const GrayImage& img, double ratio, double* estimated_bytes = nullptr) {
  if (!(ratio >= 1.0)) throw CodecError("JP2K surrogate compression ratio must be at least 1");
  const int W = (img.width + 3) / 4 * 4, H = (img.height + 3) / 4 * 4;
  std::vector<double> c(static_cast<std::size_t>(W) * H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      c[static_cast<std::size_t>(y) * W + x] =
          255.0 * img.at(std::min(x, img.width - 1), std::min(y, img.height - 1));
  codec_detail::haar_forward(c, W, W, H);
  codec_detail::haar_forward(c, W, W / 2, H / 2);

  const auto bands = codec_detail::two_level_subbands(W, H);
  const double target = static_cast<double>(img.width) * img.height / ratio;
  double lo = std::log(1e-3), hi = std::log(1e5);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (codec_detail::quantized_bytes(c, W, bands, std::exp(mid)) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double step = std::exp(hi);
  if (estimated_bytes) *estimated_bytes = codec_detail::quantized_bytes(c, W, bands, step);
  for (double& v : c) v = static_cast<double>(std::llround(v / step)) * step;
  codec_detail::haar_inverse(c, W, W / 2, H / 2);
  codec_detail::haar_inverse(c, W, W, H);
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = std::clamp(c[static_cast<std::size_t>(y) * W + x] / 255.0, 0.0, 1.0);
  return quantize8(out);
}

// Runs an external encoder/decoder pair described by a command template.
// {in} is replaced by an 8-bit PGM of the input, {out} by the path where the
// command must leave the decoded image (PNG, BMP or PGM), and {level} by the
// quality or compression ratio.
inline GrayImage run_command_codec(const std::string& command_template, const GrayImage& img, double level,
                                   const std::string& label) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("iqsd-codec-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::create_directories(dir);
  const fs::path in = dir / "in.pgm", out = dir / "out.png";
  auto cleanup = [&] {
    std::error_code ec;
    fs::remove_all(dir, ec);
  };
  std::string level_text = std::to_string(level);
  if (std::floor(level) == level) level_text = std::to_string(static_cast<long long>(level));
  std::string cmd = command_template;
  auto replace_all = [&](const std::string& key, const std::string& value) {
    for (std::size_t p = cmd.find(key); p != std::string::npos; p = cmd.find(key, p + value.size()))
      cmd.replace(p, key.size(), value);
  };
  replace_all("{in}", "'" + in.string() + "'");
  replace_all("{out}", "'" + out.string() + "'");
  replace_all("{level}", level_text);
  try {
    write_pgm(in, img);
    const int status = std::system(cmd.c_str());
    if (status != 0)
      throw CodecError(label + " codec command failed at level " + level_text + " (status " +
                       std::to_string(status) + ")");
    if (!fs::exists(out)) throw CodecError(label + " codec produced no output at level " + level_text);
    GrayImage decoded = read_image(out);
    if (decoded.width != img.width || decoded.height != img.height)
      throw CodecError(label + " codec changed the image size at level " + level_text);
    cleanup();
    return decoded;
  } catch (const CodecError&) {
    cleanup();
    throw;
  } catch (const Error& e) {
    cleanup();
    throw CodecError(label + " codec failed at level " + level_text + ": " + e.what());
  }
}

// Codec selection for the pseudo reference images. An empty JPEG command
// uses libjpeg; an empty or "surrogate" JP2K command uses the surrogate.
struct CodecSettings {
  std::string jpeg_command;
  std::string jp2k_command;

  bool jp2k_is_surrogate() const { return jp2k_command.empty() || jp2k_command == "surrogate"; }
  std::string jp2k_label() const { return jp2k_is_surrogate() ? "jp2k-surrogate" : "jp2k-command"; }
};

inline GrayImage apply_jpeg(const GrayImage& img, int quality, const CodecSettings& s) {
  if (s.jpeg_command.empty()) return jpeg_round_trip(img, quality);
  return run_command_codec(s.jpeg_command, img, quality, "JPEG");
}

inline GrayImage apply_jp2k(const GrayImage& img, double ratio, const CodecSettings& s) {
  if (s.jp2k_is_surrogate()) return jp2k_surrogate(img, ratio);
  return run_command_codec(s.jp2k_command, img, ratio, "JP2K");
}

}  // namespace iqsd

#endif  // IQSD_CODEC_HPP_
