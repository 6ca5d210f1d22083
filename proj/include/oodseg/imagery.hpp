/* Copyright 2026 The oodseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace oodseg {

// Label sentinels. Class codes occupy 0..C-1 with C <= 254.
inline constexpr std::uint8_t kOodId = 254;
inline constexpr std::uint8_t kIgnoreId = 255;
inline constexpr int kMaxClasses = 254;

// RGB image, row-major, channel-interleaved, values in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width);
  // Throws DataError if any value lies outside [0, 1] or is not finite.
  Image(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double at(int row, int col, int channel) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * kChannels + channel];
  }
  double& at(int row, int col, int channel) {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * kChannels + channel];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Per-pixel class codes with OoD / ignore sentinels.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int height, int width, std::uint8_t fill = 0);
  LabelMap(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  std::uint8_t at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  std::uint8_t& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::size_t count(std::uint8_t code) const;

  // Throws InvalidClassError if a code is neither < num_classes nor a sentinel.
  void validate(int num_classes) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

// Per-pixel class logits, pixel-major (all classes of pixel 0, then pixel 1, ...).
class LogitMap {
 public:
  LogitMap() = default;
  // Zero-filled. Requires classes >= 2.
  LogitMap(int height, int width, int classes);
  // Throws DataError on non-finite values, ArgumentError on bad shape.
  LogitMap(int height, int width, int classes, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int classes() const { return classes_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  std::span<const double> pixel(std::size_t index) const {
    return {data_.data() + index * classes_, static_cast<std::size_t>(classes_)};
  }
  std::span<double> pixel(std::size_t index) {
    return {data_.data() + index * classes_, static_cast<std::size_t>(classes_)};
  }
  double at(int row, int col, int cls) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * classes_ + cls];
  }
  double& at(int row, int col, int cls) {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * classes_ + cls];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const LogitMap&, const LogitMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int classes_ = 0;
  std::vector<double> data_;
};

// Per-pixel anomaly scores; higher means more anomalous.
class ScoreMap {
 public:
  ScoreMap() = default;
  ScoreMap(int height, int width);
  ScoreMap(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Image with its label map. Dimensions always agree.
struct SegSample {
  Image image;
  LabelMap labels;

  SegSample() = default;
  SegSample(Image img, LabelMap lbl);

  friend bool operator==(const SegSample&, const SegSample&) = default;
};

// Binary PPM (P6, maxval 255). Values map to v / 255.
Image read_image(const std::filesystem::path& path);
// Quantizes with round-to-nearest; read_image(write_image(x)) is exact for
// images that came from read_image.
void write_image(const Image& image, const std::filesystem::path& path);

// Binary PGM (P5, maxval 255).
LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const LabelMap& labels, const std::filesystem::path& path);

// "OODL" v1 container: magic, u32 version, u32 H, u32 W, u32 C, then
// H*W*C little-endian float32, pixel-major.
struct OodlBlob {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> values;
};
OodlBlob read_oodl(const std::filesystem::path& path);
void write_oodl(const OodlBlob& blob, const std::filesystem::path& path);

// Logit dumps require C >= 2; score dumps are the same container with C = 1.
LogitMap read_logit_dump(const std::filesystem::path& path);
void write_logit_dump(const LogitMap& logits, const std::filesystem::path& path);
ScoreMap read_score_dump(const std::filesystem::path& path);
void write_score_dump(const ScoreMap& scores, const std::filesystem::path& path);

// Affine rescale min -> 0, max -> 255 with round-half-up; a constant map
// becomes all 128.
std::vector<std::uint8_t> heatmap_bytes(const ScoreMap& scores);
void write_heatmap(const ScoreMap& scores, const std::filesystem::path& path);

}  // namespace oodseg
