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

// Grayscale images in [0, 1] and their PNG / BMP / PGM readers and writers.
// Colour inputs are reduced to luminance 0.299 R + 0.587 G + 0.114 B.

#ifndef IQSD_IMAGE_HPP_
#define IQSD_IMAGE_HPP_

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "iqsd/error.hpp"

namespace iqsd {

struct GrayImage {
  int width = 0;
  int height = 0;
  // Row-major intensities in [0, 1].
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw ShapeError("image dimensions must be positive");
  }

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

inline constexpr int kMinFeatureSide = 16;

// Invariants required by the feature pipeline: at least 16 x 16 pixels and
// every intensity in [0, 1].
inline void validate_image(const GrayImage& img) {
  if (img.width < kMinFeatureSide || img.height < kMinFeatureSide)
    throw ShapeError("image must be at least 16 x 16 pixels, got " + std::to_string(img.width) + " x " +
                     std::to_string(img.height));
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw ShapeError("pixel buffer does not match image dimensions");
  for (double v : img.pixels)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image intensities must lie in [0, 1]");
}

inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Rounds every intensity to the nearest of the 256 eight-bit levels.
inline GrayImage quantize8(GrayImage img) {
  for (double& v : img.pixels) v = to_byte(v) / 255.0;
  return img;
}

inline GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
  return out;
}

namespace image_detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw IoError("cannot decode PNG '" + name + "': " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const int channels = color ? 4 : 2;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + name + "': " + image.message);
  }
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint8_t* p = &buf[i * channels];
    img.pixels[i] = color ? luminance(p[0], p[1], p[2]) / 255.0 : p[0] / 255.0;
    img.pixels[i] = std::clamp(img.pixels[i], 0.0, 1.0);
  }
  return img;
}

inline std::uint32_t le32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

// Uncompressed 8-bit palettized, 24-bit and 32-bit BMP.
inline GrayImage decode_bmp(const std::vector<std::uint8_t>& b, const std::string& name) {
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') throw IoError("not a BMP file: '" + name + "'");
  const std::uint32_t offset = le32(&b[10]);
  const std::uint32_t header = le32(&b[14]);
  const std::int32_t w = static_cast<std::int32_t>(le32(&b[18]));
  const std::int32_t h_raw = static_cast<std::int32_t>(le32(&b[22]));
  const int bpp = le16(&b[28]);
  const std::uint32_t compression = le32(&b[30]);
  if (compression != 0 && !(compression == 3 && bpp == 32))
    throw IoError("compressed BMP is not supported: '" + name + "'");
  if (bpp != 8 && bpp != 24 && bpp != 32) throw IoError("unsupported BMP bit depth in '" + name + "'");
  const bool top_down = h_raw < 0;
  const int h = top_down ? -h_raw : h_raw;
  if (w <= 0 || h <= 0) throw IoError("invalid BMP dimensions in '" + name + "'");
  std::vector<double> palette;
  if (bpp == 8) {
    std::uint32_t colors = le32(&b[46]);
    if (colors == 0) colors = 256;
    const std::size_t pal = 14 + header;
    if (pal + 4 * colors > b.size()) throw IoError("truncated BMP palette in '" + name + "'");
    for (std::uint32_t i = 0; i < colors; ++i)
      palette.push_back(luminance(b[pal + 4 * i + 2], b[pal + 4 * i + 1], b[pal + 4 * i]) / 255.0);
  }
  const std::size_t stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;
  if (offset + stride * h > b.size()) throw IoError("truncated BMP pixel data in '" + name + "'");
  GrayImage img(w, h);
  for (int row = 0; row < h; ++row) {
    const std::uint8_t* src = &b[offset + stride * row];
    const int y = top_down ? row : h - 1 - row;
    for (int x = 0; x < w; ++x) {
      double v;
      if (bpp == 8) {
        if (src[x] >= palette.size()) throw IoError("BMP palette index out of range in '" + name + "'");
        v = palette[src[x]];
      } else {
        const std::uint8_t* p = src + x * (bpp / 8);
        v = luminance(p[2], p[1], p[0]) / 255.0;
      }
      img.at(x, y) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

// Binary PGM (P5), maxval up to 65535.
inline GrayImage decode_pgm(const std::vector<std::uint8_t>& b, const std::string& name) {
  std::size_t pos = 0;
  auto token = [&]() {
    std::string t;
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < b.size() && !std::isspace(b[pos])) t.push_back(static_cast<char>(b[pos++]));
    return t;
  };
  if (token() != "P5") throw IoError("not a binary PGM file: '" + name + "'");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError("malformed PGM header in '" + name + "'");
  }
  ++pos;
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError("invalid PGM header in '" + name + "'");
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  if (pos + bytes_per * w * h > b.size()) throw IoError("truncated PGM data in '" + name + "'");
  GrayImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned v = bytes_per == 1 ? b[pos + i] : (b[pos + 2 * i] << 8) | b[pos + 2 * i + 1];
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace image_detail

inline bool is_supported_image(const std::filesystem::path& p) {
  const auto ext = image_detail::lower_extension(p);
  return ext == ".png" || ext == ".bmp" || ext == ".pgm";
}

// Reads a PNG, BMP or PGM image, dispatching on the file signature.
inline GrayImage read_image(const std::filesystem::path& path) {
  const auto bytes = image_detail::read_bytes(path);
  const std::string name = path.string();
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return image_detail::decode_png(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return image_detail::decode_bmp(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return image_detail::decode_pgm(bytes, name);
  throw IoError("unrecognized image format: '" + name + "'");
}

// Writes an 8-bit grayscale PNG.
inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<std::uint8_t> buf(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) buf[i] = to_byte(img.pixels[i]);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
}

// Writes an 8-bit binary PGM.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.pixels) out.put(static_cast<char>(to_byte(v)));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

}  // namespace iqsd

#endif  // IQSD_IMAGE_HPP_
