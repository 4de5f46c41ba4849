// Copyright 2026 The xaiseg Authors. All Rights Reserved.
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

#include "xaiseg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include "xaiseg/error.hpp"

namespace xaiseg {
namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) {
    throw ShapeError("raster dimensions must be positive, got " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

std::uint8_t quantize_byte(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Cursor over a PNM header: whitespace and '#' comments between tokens.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  // Offset of the next token.
  std::size_t next_token() {
    skip_separators();
    return pos_;
  }

  int read_uint(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    long long value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) {
        throw FormatError(std::string("header field ") + field + " too large",
                          start);
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(std::string("malformed header: expected ") + field,
                        pos_);
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the payload.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw FormatError("malformed header: missing whitespace before payload",
                        pos_);
    }
    ++pos_;
  }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;  // past the magic number
};

std::vector<std::uint8_t> encode_header(char kind, int width, int height) {
  const std::string header = std::string("P") + kind + "\n" +
                             std::to_string(width) + " " +
                             std::to_string(height) + "\n255\n";
  return {header.begin(), header.end()};
}

template <typename Src>
std::vector<double> bilinear(const Src& sample, int src_h, int src_w,
                             int channels, int dst_h, int dst_w) {
  std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w * channels);
  const double sy = static_cast<double>(src_h) / dst_h;
  const double sx = static_cast<double>(src_w) / dst_w;
  for (int y = 0; y < dst_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src_h - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src_w - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top =
            (1 - wx) * sample(y0, x0, c) + wx * sample(y0, x1, c);
        const double bottom =
            (1 - wx) * sample(y1, x0, c) + wx * sample(y1, x1, c);
        out[(static_cast<std::size_t>(y) * dst_w + x) * channels + c] =
            (1 - wy) * top + wy * bottom;
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(Shape shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width);
}

// --- ImageTensor ------------------------------------------------------------

ImageTensor::ImageTensor(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width);
  if (channels < 1) throw ShapeError("channel count must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
}

ImageTensor::ImageTensor(int height, int width, int channels,
                         std::vector<double> data)
    : height_(height), width_(width), channels_(channels),
      data_(std::move(data)) {
  check_dims(height, width);
  if (channels < 1) throw ShapeError("channel count must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
  }
  if (!all_finite()) throw DataError("image contains non-finite values");
}

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

// --- RelevanceMap -----------------------------------------------------------

RelevanceMap::RelevanceMap(int height, int width)
    : height_(height), width_(width) {
  check_dims(height, width);
  values_.assign(static_cast<std::size_t>(height) * width, 0.0);
}

RelevanceMap::RelevanceMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("relevance map length mismatch");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("relevance value outside [0,1]: " + std::to_string(v));
    }
  }
}

RelevanceMap RelevanceMap::from_unnormalized(int height, int width,
                                             std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("relevance map length mismatch");
  }
  if (values.empty()) return RelevanceMap(height, width);
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("non-finite relevance value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (!(range > 0.0)) return RelevanceMap(height, width);
  for (double& v : values) v = std::clamp((v - min) / range, 0.0, 1.0);
  return RelevanceMap(height, width, std::move(values));
}

// --- BinaryMask -------------------------------------------------------------

BinaryMask::BinaryMask(int height, int width, bool fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  values_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("mask length mismatch");
  }
  for (auto v : values_) {
    if (v > 1) throw DataError("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  if (shape() != other.shape()) throw ShapeError("mask shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] && !other.values_[i]) return false;
  }
  return true;
}

// --- NormalizationStats -----------------------------------------------------

void NormalizationStats::validate() const {
  if (mean.empty() || mean.size() != stddev.size()) {
    throw ConfigError("normalization stats need one mean and std per channel");
  }
  for (double s : stddev) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("normalization std must be positive");
    }
  }
  for (double m : mean) {
    if (!std::isfinite(m)) throw ConfigError("normalization mean not finite");
  }
}

NormalizationStats compute_stats(std::span<const ImageTensor> images) {
  if (images.empty()) throw DataError("cannot compute stats of no images");
  const int channels = images.front().channels();
  std::vector<double> sum(channels, 0.0);
  std::vector<double> sum_sq(channels, 0.0);
  std::size_t count = 0;
  for (const auto& img : images) {
    if (img.channels() != channels) {
      throw ShapeError("images disagree on channel count");
    }
    const auto data = img.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      sum[i % channels] += data[i];
    }
    count += img.shape().pixels();
  }
  NormalizationStats stats;
  stats.mean.resize(channels);
  stats.stddev.resize(channels);
  for (int c = 0; c < channels; ++c) stats.mean[c] = sum[c] / count;
  // Two-pass variance for accuracy.
  for (const auto& img : images) {
    const auto data = img.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double d = data[i] - stats.mean[i % channels];
      sum_sq[i % channels] += d * d;
    }
  }
  for (int c = 0; c < channels; ++c) {
    const double s = std::sqrt(sum_sq[c] / count);
    stats.stddev[c] = s > 1e-12 ? s : 1.0;
  }
  return stats;
}

// --- I/O --------------------------------------------------------------------

ImageTensor decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw FormatError("not a PNM file", 0);
  }
  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw FormatError(std::string("unsupported PNM format P") +
                          static_cast<char>(bytes[1]) +
                          " (only binary P5/P6 are supported)",
                      0);
  }
  HeaderReader header(bytes);
  const std::size_t width_at = header.pos();
  const int width = header.read_uint("width");
  const int height = header.read_uint("height");
  if (width < 1 || height < 1) {
    throw FormatError("image dimensions must be positive", width_at);
  }
  const std::size_t maxval_at = header.next_token();
  const int maxval = header.read_uint("maxval");
  if (maxval != 255) {
    throw FormatError("unsupported maxval " + std::to_string(maxval) +
                          " (only 255 is supported)",
                      maxval_at);
  }
  header.end_of_header();
  const std::size_t payload_at = header.pos();
  const std::size_t expected =
      static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - payload_at < expected) {
    throw FormatError("truncated payload: expected " +
                          std::to_string(expected) + " bytes, found " +
                          std::to_string(bytes.size() - payload_at),
                      bytes.size());
  }
  std::vector<double> data(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    data[i] = bytes[payload_at + i] / 255.0;
  }
  return ImageTensor(height, width, channels, std::move(data));
}

ImageTensor load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_pnm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pnm(const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("PNM output needs 1 or 3 channels");
  }
  auto bytes = encode_header(image.channels() == 1 ? '5' : '6', image.width(),
                             image.height());
  bytes.reserve(bytes.size() + image.size());
  for (double v : image.data()) bytes.push_back(quantize_byte(v));
  return bytes;
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
  write_file(path, encode_pnm(image));
}

std::vector<std::uint8_t> encode_mask(const BinaryMask& mask) {
  auto bytes = encode_header('5', mask.width(), mask.height());
  bytes.reserve(bytes.size() + mask.size());
  for (auto v : mask.values()) bytes.push_back(v ? 255 : 0);
  return bytes;
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  write_file(path, encode_mask(mask));
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const ImageTensor img = to_grayscale(load_image(path));
  std::vector<std::uint8_t> values(img.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = img.data()[i] > 0.5 ? 1 : 0;
  }
  return BinaryMask(img.height(), img.width(), std::move(values));
}

void save_relevance(const RelevanceMap& map, const std::filesystem::path& path) {
  save_image(to_image(map), path);
}

// --- Transforms -------------------------------------------------------------

ImageTensor to_grayscale(const ImageTensor& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) {
    throw ShapeError("grayscale conversion needs 1 or 3 channels, got " +
                     std::to_string(image.channels()));
  }
  std::vector<double> out(image.shape().pixels());
  const auto in = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.299 * in[3 * i] + 0.587 * in[3 * i + 1] + 0.114 * in[3 * i + 2];
  }
  return ImageTensor(image.height(), image.width(), 1, std::move(out));
}

ImageTensor equalize_histogram(const ImageTensor& image) {
  if (image.channels() != 1) {
    throw ShapeError("histogram equalization needs a single channel");
  }
  const auto in = image.data();
  std::vector<int> bins(in.size());
  std::array<std::size_t, 256> hist{};
  for (std::size_t i = 0; i < in.size(); ++i) {
    bins[i] = quantize_byte(in[i]);
    ++hist[bins[i]];
  }
  std::array<std::size_t, 256> cdf{};
  std::size_t running = 0;
  for (int b = 0; b < 256; ++b) {
    running += hist[b];
    cdf[b] = running;
  }
  const std::size_t total = in.size();
  const auto first = std::find_if(hist.begin(), hist.end(),
                                  [](std::size_t n) { return n > 0; });
  const std::size_t cdf_min = cdf[first - hist.begin()];
  if (cdf_min == total) return image;  // constant image

  std::array<double, 256> level{};
  for (int b = 0; b < 256; ++b) {
    const double scaled = 255.0 * static_cast<double>(cdf[b] - std::min(cdf[b], cdf_min)) /
                          static_cast<double>(total - cdf_min);
    level[b] = std::round(scaled) / 255.0;
  }
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = level[bins[i]];
  return ImageTensor(image.height(), image.width(), 1, std::move(out));
}

ImageTensor normalize(const ImageTensor& image,
                      const NormalizationStats& stats) {
  stats.validate();
  if (static_cast<int>(stats.channels()) != image.channels()) {
    throw ShapeError("normalization stats have " +
                     std::to_string(stats.channels()) +
                     " channels, image has " +
                     std::to_string(image.channels()));
  }
  std::vector<double> out(image.data().begin(), image.data().end());
  const std::size_t c = stats.channels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (out[i] - stats.mean[i % c]) / stats.stddev[i % c];
  }
  return ImageTensor(image.height(), image.width(), image.channels(),
                     std::move(out));
}

ImageTensor denormalize(const ImageTensor& image,
                        const NormalizationStats& stats) {
  stats.validate();
  if (static_cast<int>(stats.channels()) != image.channels()) {
    throw ShapeError("normalization stats channel mismatch");
  }
  std::vector<double> out(image.data().begin(), image.data().end());
  const std::size_t c = stats.channels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = out[i] * stats.stddev[i % c] + stats.mean[i % c];
  }
  return ImageTensor(image.height(), image.width(), image.channels(),
                     std::move(out));
}

ImageTensor to_image(const RelevanceMap& map) {
  return ImageTensor(map.height(), map.width(), 1,
                     {map.values().begin(), map.values().end()});
}

RelevanceMap to_relevance(const ImageTensor& image) {
  if (image.channels() != 1) {
    throw ShapeError("relevance map needs a single-channel image");
  }
  return RelevanceMap(image.height(), image.width(),
                      {image.data().begin(), image.data().end()});
}

ImageTensor to_image(const BinaryMask& mask) {
  std::vector<double> data(mask.values().begin(), mask.values().end());
  return ImageTensor(mask.height(), mask.width(), 1, std::move(data));
}

// --- Resampling -------------------------------------------------------------

ImageTensor resize_bilinear(const ImageTensor& image, int height, int width) {
  check_dims(height, width);
  if (image.height() == height && image.width() == width) return image;
  auto sample = [&](int y, int x, int c) { return image(y, x, c); };
  return ImageTensor(height, width, image.channels(),
                     bilinear(sample, image.height(), image.width(),
                              image.channels(), height, width));
}

RelevanceMap resize_bilinear(const RelevanceMap& map, int height, int width) {
  check_dims(height, width);
  if (map.height() == height && map.width() == width) return map;
  auto sample = [&](int y, int x, int) { return map(y, x); };
  auto values = bilinear(sample, map.height(), map.width(), 1, height, width);
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return RelevanceMap(height, width, std::move(values));
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
  check_dims(height, width);
  if (mask.height() == height && mask.width() == width) return mask;
  BinaryMask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(
        mask.height() - 1,
        static_cast<int>((static_cast<long long>(y) * mask.height()) / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(
          mask.width() - 1,
          static_cast<int>((static_cast<long long>(x) * mask.width()) / width));
      out.set(y, x, mask(sy, sx));
    }
  }
  return out;
}

Shape fit_to_budget(Shape shape, std::size_t budget) {
  if (shape.pixels() <= budget) return shape;
  const double scale =
      std::sqrt(static_cast<double>(budget) / static_cast<double>(shape.pixels()));
  Shape out{std::max(1, static_cast<int>(std::floor(shape.height * scale))),
            std::max(1, static_cast<int>(std::floor(shape.width * scale)))};
  while (out.pixels() > budget) {
    if (out.height >= out.width) {
      --out.height;
    } else {
      --out.width;
    }
  }
  return out;
}

}  // namespace xaiseg
