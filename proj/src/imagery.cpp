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

#include "oodseg/imagery.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "oodseg/errors.hpp"

namespace oodseg {
namespace {

void check_dims(int height, int width) {
  if (height < 0 || width < 0) throw ArgumentError("negative image dimension");
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed for " + path.string());
}

// Minimal netpbm header reader: magic, width, height, maxval, then exactly
// one whitespace byte before the payload. '#' comments are skipped.
struct PnmHeader {
  int width = 0;
  int height = 0;
  std::size_t payload_offset = 0;
};

PnmHeader parse_pnm(const std::vector<char>& bytes, const char* magic, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw FormatError(name + ": expected magic " + magic);
  }
  std::size_t pos = 2;
  auto read_number = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(name + ": malformed header");
    }
    long value = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 24)) throw FormatError(name + ": header value too large");
      ++pos;
    }
    return value;
  };
  PnmHeader header;
  header.width = static_cast<int>(read_number());
  header.height = static_cast<int>(read_number());
  const long maxval = read_number();
  if (maxval != 255) throw FormatError(name + ": maxval must be 255");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError(name + ": missing whitespace after header");
  }
  header.payload_offset = pos + 1;
  return header;
}

std::string pnm_header(const char* magic, int width, int height) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

std::uint32_t load_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

void store_u32(std::vector<char>& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + 4);
}

constexpr char kOodlMagic[4] = {'O', 'O', 'D', 'L'};
constexpr std::uint32_t kOodlVersion = 1;
constexpr std::size_t kOodlHeaderSize = 20;

}  // namespace

Image::Image(int height, int width) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(pixel_count() * kChannels, 0.0);
}

Image::Image(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != pixel_count() * kChannels) throw ArgumentError("image data length mismatch");
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("image value outside [0,1]");
  }
}

LabelMap::LabelMap(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(pixel_count(), fill);
}

LabelMap::LabelMap(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != pixel_count()) throw ArgumentError("label data length mismatch");
}

std::size_t LabelMap::count(std::uint8_t code) const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), code));
}

void LabelMap::validate(int num_classes) const {
  if (num_classes < 1 || num_classes > kMaxClasses) throw ArgumentError("class count out of range");
  for (std::uint8_t code : data_) {
    if (code >= num_classes && code != kOodId && code != kIgnoreId) {
      throw InvalidClassError("label code " + std::to_string(code) + " invalid for C=" +
                              std::to_string(num_classes));
    }
  }
}

LogitMap::LogitMap(int height, int width, int classes)
    : height_(height), width_(width), classes_(classes) {
  check_dims(height, width);
  if (classes < 2) throw ArgumentError("logit map needs at least 2 classes");
  data_.assign(pixel_count() * classes_, 0.0);
}

LogitMap::LogitMap(int height, int width, int classes, std::vector<double> data)
    : height_(height), width_(width), classes_(classes), data_(std::move(data)) {
  check_dims(height, width);
  if (classes < 2) throw ArgumentError("logit map needs at least 2 classes");
  if (data_.size() != pixel_count() * classes_) throw ArgumentError("logit data length mismatch");
  for (double v : data_) {
    if (!std::isfinite(v)) throw DataError("non-finite logit");
  }
}

ScoreMap::ScoreMap(int height, int width) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(pixel_count(), 0.0);
}

ScoreMap::ScoreMap(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != pixel_count()) throw ArgumentError("score data length mismatch");
  for (double v : data_) {
    if (!std::isfinite(v)) throw DataError("non-finite score");
  }
}

SegSample::SegSample(Image img, LabelMap lbl) : image(std::move(img)), labels(std::move(lbl)) {
  if (image.height() != labels.height() || image.width() != labels.width()) {
    throw ArgumentError("image and label map dimensions differ");
  }
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const PnmHeader header = parse_pnm(bytes, "P6", path.string());
  const std::size_t n = static_cast<std::size_t>(header.width) * header.height * Image::kChannels;
  if (bytes.size() - header.payload_offset < n) throw TruncationError(path.string() + ": truncated payload");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<unsigned char>(bytes[header.payload_offset + i]) / 255.0;
  }
  return Image(header.height, header.width, std::move(data));
}

void write_image(const Image& image, const std::filesystem::path& path) {
  std::string out = pnm_header("P6", image.width(), image.height());
  const std::size_t offset = out.size();
  out.resize(offset + image.data().size());
  for (std::size_t i = 0; i < image.data().size(); ++i) {
    const double v = std::clamp(image.data()[i], 0.0, 1.0);
    out[offset + i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  dump(path, out.data(), out.size());
}

LabelMap read_label_map(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const PnmHeader header = parse_pnm(bytes, "P5", path.string());
  const std::size_t n = static_cast<std::size_t>(header.width) * header.height;
  if (bytes.size() - header.payload_offset < n) throw TruncationError(path.string() + ": truncated payload");
  std::vector<std::uint8_t> data(n);
  std::memcpy(data.data(), bytes.data() + header.payload_offset, n);
  return LabelMap(header.height, header.width, std::move(data));
}

void write_label_map(const LabelMap& labels, const std::filesystem::path& path) {
  std::string out = pnm_header("P5", labels.width(), labels.height());
  out.append(reinterpret_cast<const char*>(labels.data().data()), labels.data().size());
  dump(path, out.data(), out.size());
}

OodlBlob read_oodl(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < kOodlHeaderSize) throw FormatError(path.string() + ": short OODL header");
  if (std::memcmp(bytes.data(), kOodlMagic, 4) != 0) throw FormatError(path.string() + ": bad OODL magic");
  if (load_u32(bytes.data() + 4) != kOodlVersion) throw FormatError(path.string() + ": unsupported OODL version");
  OodlBlob blob;
  blob.height = load_u32(bytes.data() + 8);
  blob.width = load_u32(bytes.data() + 12);
  blob.channels = load_u32(bytes.data() + 16);
  const std::size_t n = static_cast<std::size_t>(blob.height) * blob.width * blob.channels;
  if ((bytes.size() - kOodlHeaderSize) / 4 < n) throw TruncationError(path.string() + ": truncated OODL payload");
  blob.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t raw = load_u32(bytes.data() + kOodlHeaderSize + 4 * i);
    float v;
    std::memcpy(&v, &raw, 4);
    if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite value in OODL payload");
    blob.values[i] = v;
  }
  return blob;
}

void write_oodl(const OodlBlob& blob, const std::filesystem::path& path) {
  if (blob.values.size() != static_cast<std::size_t>(blob.height) * blob.width * blob.channels) {
    throw ArgumentError("OODL payload length mismatch");
  }
  std::vector<char> out(kOodlMagic, kOodlMagic + 4);
  out.reserve(kOodlHeaderSize + 4 * blob.values.size());
  store_u32(out, kOodlVersion);
  store_u32(out, blob.height);
  store_u32(out, blob.width);
  store_u32(out, blob.channels);
  for (float v : blob.values) {
    if (!std::isfinite(v)) throw DataError("non-finite value in OODL payload");
    store_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  dump(path, out.data(), out.size());
}

LogitMap read_logit_dump(const std::filesystem::path& path) {
  OodlBlob blob = read_oodl(path);
  if (blob.channels < 2) throw DataError(path.string() + ": logit dump needs C >= 2");
  std::vector<double> data(blob.values.begin(), blob.values.end());
  return LogitMap(static_cast<int>(blob.height), static_cast<int>(blob.width),
                  static_cast<int>(blob.channels), std::move(data));
}

void write_logit_dump(const LogitMap& logits, const std::filesystem::path& path) {
  OodlBlob blob;
  blob.height = static_cast<std::uint32_t>(logits.height());
  blob.width = static_cast<std::uint32_t>(logits.width());
  blob.channels = static_cast<std::uint32_t>(logits.classes());
  blob.values.assign(logits.data().begin(), logits.data().end());
  write_oodl(blob, path);
}

ScoreMap read_score_dump(const std::filesystem::path& path) {
  OodlBlob blob = read_oodl(path);
  if (blob.channels != 1) throw DataError(path.string() + ": score dump needs C == 1");
  std::vector<double> data(blob.values.begin(), blob.values.end());
  return ScoreMap(static_cast<int>(blob.height), static_cast<int>(blob.width), std::move(data));
}

void write_score_dump(const ScoreMap& scores, const std::filesystem::path& path) {
  OodlBlob blob;
  blob.height = static_cast<std::uint32_t>(scores.height());
  blob.width = static_cast<std::uint32_t>(scores.width());
  blob.channels = 1;
  blob.values.assign(scores.data().begin(), scores.data().end());
  write_oodl(blob, path);
}

std::vector<std::uint8_t> heatmap_bytes(const ScoreMap& scores) {
  const auto values = scores.data();
  std::vector<std::uint8_t> bytes(values.size(), 128);
  if (values.empty()) return bytes;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (!(range > 0.0)) return bytes;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double scaled = (values[i] - min) / range * 255.0;
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
  }
  return bytes;
}

void write_heatmap(const ScoreMap& scores, const std::filesystem::path& path) {
  write_label_map(LabelMap(scores.height(), scores.width(), heatmap_bytes(scores)), path);
}

}  // namespace oodseg
