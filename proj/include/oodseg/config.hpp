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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oodseg/augment.hpp"
#include "oodseg/segnet.hpp"
#include "oodseg/synth.hpp"

namespace oodseg {

// Flat key=value run configuration. '#' starts a comment; blank lines are
// ignored. Unknown keys and malformed values throw ArgumentError.
struct RunConfig {
  std::uint64_t seed = 0;

  // corpus
  int n_train = 200;
  int n_val = 50;
  int n_ood_eval = 50;
  int height = 128;
  int width = 256;
  std::string scene_style = "styleA";
  int max_eval_objects = 2;

  // pre-training
  int train_epochs = 20;
  int train_batch_size = 4;
  double train_lr = 3e-3;
  double train_weight_decay = 1e-4;

  // fine-tuning
  int epochs = 20;
  int batch_size = 8;
  double lr = 1e-2;
  double weight_decay = 0.01;
  std::string variant = "topk_ovr";
  int k = 5;
  double s = 2.0;
  double gamma = 0.01;
  double mix_probability = 0.1;
  bool style_align = true;
  int max_objects = 1;
  std::string proxy_style = "raw";

  // evaluation
  std::string score = "all";
  std::vector<int> k_list = {3, 5, 7};

  // Applies one key=value assignment.
  void set(std::string_view key, std::string_view value);
  // Range checks on every field.
  void validate() const;

  CorpusSpec corpus_spec() const;
  TrainConfig pretrain_config() const;
  TrainConfig finetune_config() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(std::string_view text);
// Throws IoError if the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);
// Every key, one per line, reals printed with %.17g; parses back to an
// identical RunConfig.
std::string config_text(const RunConfig& cfg);
const std::vector<std::string>& config_keys();

}  // namespace oodseg
