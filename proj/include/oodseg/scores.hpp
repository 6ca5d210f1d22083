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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodseg/imagery.hpp"

namespace oodseg {

inline constexpr double kStatsEpsilon = 1e-6;

// Per-class moments of the max logit over pixels predicted as that class.
struct ClasswiseStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> count;

  int classes() const { return static_cast<int>(mean.size()); }
  friend bool operator==(const ClasswiseStats&, const ClasswiseStats&) = default;
};

// Every score is oriented so that larger means more anomalous.
ScoreMap score_msp(const LogitMap& logits);
ScoreMap score_entropy(const LogitMap& logits);
ScoreMap score_max_logit(const LogitMap& logits);
ScoreMap score_energy(const LogitMap& logits);
ScoreMap score_max_min(const LogitMap& logits);

// Throws ArgumentError on an empty sequence or mixed class counts.
ClasswiseStats fit_classwise_stats(std::span<const LogitMap> dumps);
// Throws ArgumentError if stats and logits disagree on C.
ScoreMap score_standardized_ml(const LogitMap& logits, const ClasswiseStats& stats);

// Registry order used for "all": msp, entropy, max_logit, energy, std_ml, max_min.
const std::vector<std::string>& score_names();
bool is_score_name(std::string_view name);
// Applies a score by name. `stats` is only read for std_ml and must then be
// non-null. Unknown names throw ArgumentError.
ScoreMap compute_score(std::string_view name, const LogitMap& logits, const ClasswiseStats* stats = nullptr);

}  // namespace oodseg
