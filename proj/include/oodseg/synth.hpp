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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oodseg/imagery.hpp"

namespace oodseg {

// Scene classes of the synthetic driving corpus.
enum SceneClass : std::uint8_t {
  kRoad = 0,
  kSky = 1,
  kBuilding = 2,
  kVegetation = 3,
  kCar = 4,
  kPedestrian = 5,
};
inline constexpr int kSceneClasses = 6;
std::string_view scene_class_name(int cls);

// Global photometric look of a domain: x -> clamp(gain * x^gamma + offset + noise).
struct StyleDomain {
  std::string name = "raw";
  std::array<double, 3> channel_gains{1.0, 1.0, 1.0};
  std::array<double, 3> channel_offsets{0.0, 0.0, 0.0};
  double gamma = 1.0;
  double noise_sigma = 0.0;

  friend bool operator==(const StyleDomain&, const StyleDomain&) = default;
};

// Built-ins: "raw" (identity), "styleA" (training scenes), "styleB" (shifted
// scenes), "styleP" (mismatched look for proxy objects). Throws ArgumentError
// for unknown names.
StyleDomain style_domain(std::string_view name);
std::vector<std::string> builtin_style_names();

// Applies the style in place; noise is drawn from `seed`. If `mask` is given
// (row-major, same size as the image) only masked pixels change.
void apply_style(Image& image, const StyleDomain& style, std::uint64_t seed,
                 std::span<const std::uint8_t> mask = {});
// Inverse of the affine part; exact up to clamping when gamma == 1 and
// noise_sigma == 0.
Image invert_style(const Image& image, const StyleDomain& style);

struct SceneSpec {
  int height = 128;
  int width = 256;
  int classes = kSceneClasses;
  StyleDomain style = style_domain("styleA");
  std::uint64_t seed = 0;
};

// Deterministic scene: sky band, building/vegetation band, road band at the
// bottom covering >= 30% of pixels, cars and pedestrians on the road.
SegSample generate_scene(const SceneSpec& spec);

enum class OodFamily { kProxy, kTest };
std::string_view family_name(OodFamily family);

// Object cut-out: `mask` and `texture` share the bounding-box size; texture
// pixels outside the mask are zero.
struct OodObject {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> mask;
  Image texture;
  OodFamily family = OodFamily::kProxy;
  // Which shape/texture generator produced the object, for construction logs.
  std::string shape_generator;
  std::string texture_generator;

  bool in_mask(int row, int col) const { return mask[static_cast<std::size_t>(row) * width + col] != 0; }
  std::size_t area() const;
};

// Proxy family: simple (star-shaped) polygons with checker/stripe textures.
// Test family: unions of <= 3 ellipses with marble/blob noise textures.
// The bounding box stays within 25% of the scene area.
OodObject generate_ood_object(OodFamily family, std::uint64_t seed, int scene_height = 128,
                              int scene_width = 256);

// True when the mask is nonempty and a single 4-connected component.
bool mask_is_connected(const OodObject& object);

enum class Split { kTrain, kVal, kEval };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct CorpusEntry {
  int id = 0;
  Split split = Split::kTrain;
  std::string style;
  bool has_ood = false;
  std::uint64_t seed = 0;
};

struct CorpusSpec {
  int n_train = 200;
  int n_val = 50;
  int n_ood_eval = 50;
  int height = 128;
  int width = 256;
  StyleDomain style = style_domain("styleA");
  std::uint64_t seed = 0;
  int max_eval_objects = 2;
};

// One line of the construction log.
struct PastedObjectRecord {
  int id = 0;
  OodFamily family = OodFamily::kTest;
  std::string shape_generator;
  std::string texture_generator;
  std::uint64_t object_seed = 0;
  int row = 0;
  int col = 0;
  std::size_t area = 0;
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  std::vector<SegSample> samples;
  std::vector<PastedObjectRecord> objects;

  std::vector<std::size_t> indices(Split split) const;
};

// Generates the whole corpus in memory. Eval samples carry pasted test-family
// objects labelled kOodId; proxy objects never appear.
Corpus generate_corpus(const CorpusSpec& spec);

// Writes images/NNNN.ppm, labels/NNNN.pgm, index.csv and objects.csv (the
// construction log of pasted objects) under `dir`, which is created if its
// parent exists. Throws IoError otherwise.
Corpus build_corpus(const CorpusSpec& spec, const std::filesystem::path& dir);

Corpus load_corpus(const std::filesystem::path& dir);

std::string corpus_file_stem(int id);

}  // namespace oodseg
