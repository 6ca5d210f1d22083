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

#include <filesystem>
#include <string>
#include <vector>

#include "oodseg/config.hpp"
#include "oodseg/metrics.hpp"
#include "oodseg/scores.hpp"
#include "oodseg/segnet.hpp"

namespace oodseg {

// Name of the resolved-config echo written into every output directory.
inline constexpr const char* kConfigEcho = "config.resolved";

// Scores compared by the K ablation.
const std::vector<std::string>& ablation_scores();

// In-memory stages.
SegNet pretrain_net(const RunConfig& cfg, const Corpus& corpus, TrainResult* result = nullptr);
TrainResult finetune_net(SegNet& net, const RunConfig& cfg, const Corpus& corpus);
// Class-wise max-logit stats from the val split.
ClasswiseStats val_stats(const SegNet& net, const Corpus& corpus);
// One forward pass over the eval split, then one report per score name.
std::vector<EvalReport> evaluate_scores(const SegNet& net, const Corpus& corpus,
                                        const std::vector<std::string>& scores, const ClasswiseStats& stats);

// Score names selected by cfg.score ("all" expands to the registry).
std::vector<std::string> selected_scores(const RunConfig& cfg);

// File-level commands used by the CLI.
Corpus cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_train(const RunConfig& cfg, const std::filesystem::path& corpus_dir, const std::filesystem::path& checkpoint);
// Throws StateError when the input checkpoint is missing or carries no trained net.
void cmd_finetune(const RunConfig& cfg, const std::filesystem::path& corpus_dir,
                  const std::filesystem::path& checkpoint_in, const std::filesystem::path& checkpoint_out);
// `source` is a checkpoint file or a directory of NNNN.oodl logit dumps
// (full resolution, one per eval image).
std::vector<EvalReport> cmd_eval(const RunConfig& cfg, const std::filesystem::path& source,
                                 const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir);
// Fine-tunes once per K in cfg.k_list and writes ablate_k.csv.
std::string cmd_ablate_k(const RunConfig& cfg, const std::filesystem::path& corpus_dir,
                         const std::filesystem::path& checkpoint_in, const std::filesystem::path& out_dir);

}  // namespace oodseg
