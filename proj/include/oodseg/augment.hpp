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

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "oodseg/imagery.hpp"
#include "oodseg/synth.hpp"

namespace oodseg {

inline constexpr double kStyleEpsilon = 1e-6;

// Per-channel first and second moments (population convention), std >= eps.
struct ChannelStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{kStyleEpsilon, kStyleEpsilon, kStyleEpsilon};
};

struct MixConfig {
  double mix_probability = 0.1;
  bool style_align = true;
  int max_objects_per_scene = 1;

  // Throws ArgumentError when out of range.
  void validate() const;
};

// Moments over the whole image, or over pixels where region != 0.
// Throws ArgumentError if the region is empty or mis-sized.
ChannelStats extract_style(const Image& image, std::span<const std::uint8_t> region = {});

// Style of an object's masked texture.
ChannelStats object_style(const OodObject& object);

// Pluggable style transfer applied to objects before pasting.
class StyleAligner {
 public:
  virtual ~StyleAligner() = default;
  virtual OodObject align(const OodObject& object, const ChannelStats& target) const = 0;
};

// Per-channel affine moment matching:
//   x -> clamp((x - mu_src) / sigma_src * sigma_tgt + mu_tgt, 0, 1).
class MomentMatchAligner final : public StyleAligner {
 public:
  OodObject align(const OodObject& object, const ChannelStats& target) const override;
};

OodObject style_align(const OodObject& object, const ChannelStats& target);

// Hard-mask copy-paste: texture replaces image pixels under the mask and the
// labels there become kOodId. Everything else is untouched.
// Throws ArgumentError when the object does not fit at (row, col).
SegSample paste(const SegSample& sample, const OodObject& object, int row, int col);
void paste_in_place(SegSample& sample, const OodObject& object, int row, int col);

// Supplies OoD objects for mixing.
class ObjectSource {
 public:
  virtual ~ObjectSource() = default;
  virtual OodObject draw(std::uint64_t seed, int scene_height, int scene_width) const = 0;
};

// Proxy-family objects rendered in a given style domain ("raw" keeps the
// generator's colors).
class ProxyObjectSource final : public ObjectSource {
 public:
  explicit ProxyObjectSource(StyleDomain style = style_domain("raw"));
  OodObject draw(std::uint64_t seed, int scene_height, int scene_width) const override;

 private:
  StyleDomain style_;
};

struct MixOutcome {
  SegSample sample;
  bool mixed = false;
};

// With probability cfg.mix_probability draws 1..max_objects_per_scene
// objects, optionally aligns each to the scene style, and pastes them at
// uniformly random valid positions. Deterministic per seed.
MixOutcome anomaly_mix_traced(const SegSample& sample, const MixConfig& cfg, const ObjectSource& source,
                              std::uint64_t seed, const StyleAligner& aligner);
SegSample anomaly_mix(const SegSample& sample, const MixConfig& cfg, const ObjectSource& source,
                      std::uint64_t seed);

}  // namespace oodseg
