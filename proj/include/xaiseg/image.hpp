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

// Raster value types shared by every stage, PGM/PPM I/O and the intensity
// transforms applied before thresholding.

#ifndef XAISEG_IMAGE_HPP_
#define XAISEG_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace xaiseg {

struct Shape {
  int height = 0;
  int width = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape shape);

// H x W x C real raster, row-major with interleaved channels.
class ImageTensor {
 public:
  ImageTensor() = default;
  // Zero-filled image.
  ImageTensor(int height, int width, int channels);
  // Takes ownership of `data`; throws ShapeError on a length mismatch or
  // DataError on non-finite values.
  ImageTensor(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Shape shape() const { return {height_, width_}; }
  std::size_t size() const { return data_.size(); }

  double operator()(int y, int x, int c = 0) const {
    return data_[index(y, x, c)];
  }
  double& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;
  bool same_layout(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Per-pixel scalar importance in [0, 1].
class RelevanceMap {
 public:
  RelevanceMap() = default;
  RelevanceMap(int height, int width);  // all zeros
  // Throws DataError if any value is outside [0, 1] or not finite.
  RelevanceMap(int height, int width, std::vector<double> values);

  // Min-max rescales arbitrary finite values into [0, 1]. A constant input
  // (zero range) maps to all zeros.
  static RelevanceMap from_unnormalized(int height, int width,
                                       std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  Shape shape() const { return {height_, width_}; }
  std::size_t size() const { return values_.size(); }

  double operator()(int y, int x) const {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const RelevanceMap&, const RelevanceMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// Per-pixel {0, 1} labels.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);
  // Throws DataError unless every value is 0 or 1.
  BinaryMask(int height, int width, std::vector<std::uint8_t> values);

  int height() const { return height_; }
  int width() const { return width_; }
  Shape shape() const { return {height_, width_}; }
  std::size_t size() const { return values_.size(); }

  bool operator()(int y, int x) const {
    return values_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  bool operator[](std::size_t i) const { return values_[i] != 0; }
  void set(int y, int x, bool on) {
    values_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0;
  }
  void set(std::size_t i, bool on) { values_[i] = on ? 1 : 0; }

  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }
  // True if every foreground pixel of this mask is also set in `other`.
  bool subset_of(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> values_;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t channels() const { return mean.size(); }
  // Throws ConfigError if sizes differ or any stddev is not positive.
  void validate() const;
};

// Per-channel mean and standard deviation over every pixel of every image.
// Channels whose standard deviation vanishes get 1 so the transform stays
// invertible.
NormalizationStats compute_stats(std::span<const ImageTensor> images);

// --- Raster I/O -------------------------------------------------------------

// Reads a binary PGM (P5) or PPM (P6) with maxval 255. Bytes map to [0, 1]
// by dividing by 255.
ImageTensor load_image(const std::filesystem::path& path);
ImageTensor decode_pnm(std::span<const std::uint8_t> bytes);

// Writes P5 (1 channel) or P6 (3 channels); values are clamped to [0, 1]
// and rounded to the nearest byte.
void save_image(const ImageTensor& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pnm(const ImageTensor& image);

// Mask files are P5 with 0 -> 0 and 1 -> 255.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_mask(const BinaryMask& mask);
// Loads a single-channel raster and thresholds it at 0.5.
BinaryMask load_mask(const std::filesystem::path& path);

// Debug dump: relevance scaled by 255 and written as P5.
void save_relevance(const RelevanceMap& map, const std::filesystem::path& path);

// --- Intensity transforms ---------------------------------------------------

// ITU-R 601 luma for 3 channels; identity for 1 channel.
ImageTensor to_grayscale(const ImageTensor& image);

// 256-bin global histogram equalization of a single-channel image in [0, 1].
// Output levels are multiples of 1/255. A constant image is returned as is.
ImageTensor equalize_histogram(const ImageTensor& image);

ImageTensor normalize(const ImageTensor& image, const NormalizationStats& stats);
ImageTensor denormalize(const ImageTensor& image,
                        const NormalizationStats& stats);

// Conversions between the single-channel image and map/mask types.
ImageTensor to_image(const RelevanceMap& map);
RelevanceMap to_relevance(const ImageTensor& image);  // requires 1 channel
ImageTensor to_image(const BinaryMask& mask);

// --- Resampling -------------------------------------------------------------

// Bilinear resampling with half-pixel centers (edge samples clamped).
ImageTensor resize_bilinear(const ImageTensor& image, int height, int width);
RelevanceMap resize_bilinear(const RelevanceMap& map, int height, int width);
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);

// Largest shape with the same aspect ratio whose pixel count fits `budget`.
// Returns `shape` itself when it already fits.
Shape fit_to_budget(Shape shape, std::size_t budget);

}  // namespace xaiseg

#endif  // XAISEG_IMAGE_HPP_
