// Copyright 2026 The shapefit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPEFIT_IMAGE_HPP
#define SHAPEFIT_IMAGE_HPP

#include <png.h>

#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "shapefit/error.hpp"

namespace shapefit {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w < 1 || h < 1) throw DataError("image dimensions must be positive");
  }

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< interleaved RGB

  RgbImage() = default;
  explicit RgbImage(const GrayImage& g) : width(g.width), height(g.height) {
    pixels.reserve(g.pixels.size() * 3);
    for (auto v : g.pixels) pixels.insert(pixels.end(), {v, v, v});
  }

  void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(x));
    pixels[i] = rgb[0];
    pixels[i + 1] = rgb[1];
    pixels[i + 2] = rgb[2];
  }
};

/// Row-major float grid, e.g. a probability map.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& header,
                       const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw DataError("write failed for " + path.string());
}

/// Netpbm header tokenizer: whitespace separated, '#' comments to end of line.
class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& buf, std::string name)
      : buf_(buf), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < buf_.size() && !std::isspace(buf_[pos_])) t += static_cast<char>(buf_[pos_++]);
    if (t.empty()) throw DataError(name_ + ": truncated header");
    return t;
  }

  long number() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw DataError(name_ + ": bad header field '" + t + "'");
    }
  }

  /// Consumes the single whitespace byte that ends the header.
  std::size_t data_offset() {
    if (pos_ >= buf_.size() || !std::isspace(buf_[pos_])) throw DataError(name_ + ": truncated header");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& buf_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// ---- PGM (P5, 8-bit) ----

inline GrayImage read_pgm(const std::filesystem::path& path) {
  const auto buf = detail::read_file(path);
  detail::HeaderReader header(buf, path.string());
  if (header.token() != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
  const long w = header.number(), h = header.number(), maxval = header.number();
  if (w < 1 || h < 1 || w > 1 << 16 || h > 1 << 16) throw DataError(path.string() + ": bad dimensions");
  if (maxval < 1 || maxval > 255) throw DataError(path.string() + ": only 8-bit PGM is supported");
  const std::size_t offset = header.data_offset();
  const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (buf.size() < offset + count) throw DataError(path.string() + ": truncated pixel data");
  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.pixels.data(), buf.data() + offset, count);
  if (maxval != 255)
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  detail::write_file(path, header, img.pixels.data(), img.pixels.size());
}

// ---- PNG (libpng simplified API) ----

/// Reads any PNG, converting to 8-bit gray.
inline GrayImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw DataError(path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  if (image.width < 1 || image.height < 1 || image.width > 1 << 16 || image.height > 1 << 16) {
    png_image_free(&image);
    throw DataError(path.string() + ": bad dimensions");
  }
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr))
    throw DataError(path.string() + ": " + image.message);
  return img;
}

namespace detail {

inline void write_png_buffer(const std::filesystem::path& path, int w, int h, png_uint_32 format,
                             const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr))
    throw DataError("cannot write " + path.string() + ": " + image.message);
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  detail::write_png_buffer(path, img.width, img.height, PNG_FORMAT_GRAY, img.pixels.data());
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  detail::write_png_buffer(path, img.width, img.height, PNG_FORMAT_RGB, img.pixels.data());
}

/// Dispatches on the file signature: P5 PGM or PNG.
inline GrayImage read_gray_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  in.close();
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  static constexpr std::array<unsigned char, 8> kPng{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (std::memcmp(magic.data(), kPng.data(), kPng.size()) == 0) return read_png(path);
  throw DataError(path.string() + ": unsupported image format (need P5 PGM or PNG)");
}

// ---- PFM (grayscale "Pf", little-endian, scale -1.0, rows bottom-to-top) ----

inline void write_pfm(const std::filesystem::path& path, const FloatImage& img) {
  std::string header =
      "Pf\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
  std::vector<std::uint8_t> data;
  data.reserve(img.values.size() * 4);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      const float v = img.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) +
                                 static_cast<std::size_t>(x)];
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) data.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  detail::write_file(path, header, data.data(), data.size());
}

inline FloatImage read_pfm(const std::filesystem::path& path) {
  const auto buf = detail::read_file(path);
  detail::HeaderReader header(buf, path.string());
  if (header.token() != "Pf") throw DataError(path.string() + ": not a grayscale PFM (Pf)");
  const long w = header.number(), h = header.number();
  const std::string scale_tok = header.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw DataError(path.string() + ": bad PFM scale");
  }
  if (w < 1 || h < 1) throw DataError(path.string() + ": bad dimensions");
  const bool little = scale < 0.0;
  const std::size_t offset = header.data_offset();
  const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (buf.size() < offset + 4 * count) throw DataError(path.string() + ": truncated PFM data");
  FloatImage img{static_cast<int>(w), static_cast<int>(h), std::vector<float>(count)};
  std::size_t pos = offset;
  for (long y = h - 1; y >= 0; --y) {
    for (long x = 0; x < w; ++x, pos += 4) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(buf[pos + static_cast<std::size_t>(b)]) << shift;
      }
      img.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(x)] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

}  // namespace shapefit

#endif  // SHAPEFIT_IMAGE_HPP
