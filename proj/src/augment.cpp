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

#include "oodseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "oodseg/errors.hpp"
#include "oodseg/rng.hpp"

namespace oodseg {
namespace {

ChannelStats moments(std::span<const double> data, std::size_t pixels,
                     std::span<const std::uint8_t> region) {
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!region.empty() && !region[p]) continue;
    for (int ch = 0; ch < 3; ++ch) sum[ch] += data[p * 3 + ch];
    ++n;
  }
  if (n == 0) throw ArgumentError("style region is empty");
  ChannelStats stats;
  for (int ch = 0; ch < 3; ++ch) stats.mean[ch] = sum[ch] / static_cast<double>(n);
  std::array<double, 3> sq{0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!region.empty() && !region[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = data[p * 3 + ch] - stats.mean[ch];
      sq[ch] += d * d;
    }
  }
  for (int ch = 0; ch < 3; ++ch) {
    stats.std[ch] = std::max(kStyleEpsilon, std::sqrt(sq[ch] / static_cast<double>(n)));
  }
  return stats;
}

enum Stream : std::uint64_t { kStreamFire = 11, kStreamCount = 12, kStreamObject = 13, kStreamPlace = 14 };

}  // namespace

void MixConfig::validate() const {
  if (!(mix_probability >= 0.0 && mix_probability <= 1.0)) {
    throw ArgumentError("mix_probability must lie in [0, 1]");
  }
  if (max_objects_per_scene < 1) throw ArgumentError("max_objects_per_scene must be >= 1");
}

ChannelStats extract_style(const Image& image, std::span<const std::uint8_t> region) {
  if (!region.empty() && region.size() != image.pixel_count()) throw ArgumentError("style region size mismatch");
  return moments(image.data(), image.pixel_count(), region);
}

ChannelStats object_style(const OodObject& object) { return extract_style(object.texture, object.mask); }

OodObject MomentMatchAligner::align(const OodObject& object, const ChannelStats& target) const {
  const ChannelStats source = object_style(object);
  OodObject out = object;
  auto data = out.texture.data();
  for (std::size_t p = 0; p < out.mask.size(); ++p) {
    if (!out.mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      double& x = data[p * 3 + ch];
      x = std::clamp((x - source.mean[ch]) / source.std[ch] * target.std[ch] + target.mean[ch], 0.0, 1.0);
    }
  }
  return out;
}

OodObject style_align(const OodObject& object, const ChannelStats& target) {
  return MomentMatchAligner{}.align(object, target);
}

void paste_in_place(SegSample& sample, const OodObject& object, int row, int col) {
  if (row < 0 || col < 0 || row + object.height > sample.image.height() ||
      col + object.width > sample.image.width()) {
    throw ArgumentError("object does not fit at the requested position");
  }
  for (int r = 0; r < object.height; ++r) {
    for (int c = 0; c < object.width; ++c) {
      if (!object.in_mask(r, c)) continue;
      for (int ch = 0; ch < 3; ++ch) sample.image.at(row + r, col + c, ch) = object.texture.at(r, c, ch);
      sample.labels.at(row + r, col + c) = kOodId;
    }
  }
}

SegSample paste(const SegSample& sample, const OodObject& object, int row, int col) {
  SegSample out = sample;
  paste_in_place(out, object, row, col);
  return out;
}

ProxyObjectSource::ProxyObjectSource(StyleDomain style) : style_(std::move(style)) {}

OodObject ProxyObjectSource::draw(std::uint64_t seed, int scene_height, int scene_width) const {
  OodObject object = generate_ood_object(OodFamily::kProxy, seed, scene_height, scene_width);
  if (style_.name != "raw") apply_style(object.texture, style_, seed, object.mask);
  return object;
}

MixOutcome anomaly_mix_traced(const SegSample& sample, const MixConfig& cfg, const ObjectSource& source,
                              std::uint64_t seed, const StyleAligner& aligner) {
  cfg.validate();
  MixOutcome outcome{sample, false};
  Rng fire(mix_seed(seed, kStreamFire));
  if (!fire.bernoulli(cfg.mix_probability)) return outcome;

  const int height = sample.image.height();
  const int width = sample.image.width();
  Rng count_rng(mix_seed(seed, kStreamCount));
  const int n_objects = static_cast<int>(count_rng.uniform_int(1, cfg.max_objects_per_scene));
  const ChannelStats scene_style = cfg.style_align ? extract_style(sample.image) : ChannelStats{};
  Rng place(mix_seed(seed, kStreamPlace));
  for (int k = 0; k < n_objects; ++k) {
    OodObject object = source.draw(mix_seed(seed, kStreamObject * 1000 + k), height, width);
    if (object.height > height || object.width > width) continue;
    if (cfg.style_align) object = aligner.align(object, scene_style);
    const int row = static_cast<int>(place.uniform_int(0, height - object.height));
    const int col = static_cast<int>(place.uniform_int(0, width - object.width));
    paste_in_place(outcome.sample, object, row, col);
    outcome.mixed = true;
  }
  return outcome;
}

SegSample anomaly_mix(const SegSample& sample, const MixConfig& cfg, const ObjectSource& source,
                      std::uint64_t seed) {
  return anomaly_mix_traced(sample, cfg, source, seed, MomentMatchAligner{}).sample;
}

}  // namespace oodseg
