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
#include <string_view>
#include <vector>

#include "oodseg/imagery.hpp"

namespace oodseg {

enum class OodLossVariant { kTopKOvr, kFullOvr, kUniformCe, kEnergyMax };
std::string_view variant_name(OodLossVariant variant);
// Accepts topk_ovr | full_ovr | uniform_ce | energy_max.
OodLossVariant parse_variant(std::string_view name);

struct LossConfig {
  int k = 5;
  double slope = 2.0;
  double gamma = 0.01;
  OodLossVariant variant = OodLossVariant::kTopKOvr;

  void validate() const;
};

// Loss value and d(value)/d(logits), laid out like the input logit map(s).
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

// Batched results: one gradient buffer per input map; the value is one global
// average over all contributing pixels of the batch.
struct BatchLossResult {
  double value = 0.0;
  std::vector<std::vector<double>> grads;
  std::size_t contributing_pixels = 0;
};

// Overflow-safe log(1 + e^x).
double softplus(double x);
double sigmoid(double x);
// max-shifted log-sum-exp.
double log_sum_exp(std::span<const double> values);

// Indices of the k largest values, ties broken by ascending index.
std::vector<int> top_k_indices(std::span<const double> values, int k);

// Per-pixel terms are only taken on pixels labelled kOodId (OoD losses) or
// on pixels with label < C (ID cross-entropy). An empty contributing set
// yields value 0 and an all-zero gradient. Shape mismatches throw
// ArgumentError; label codes that are neither classes nor sentinels throw
// InvalidClassError.
BatchLossResult ood_topk_ovr(std::span<const LogitMap> logits, std::span<const LabelMap> labels, int k,
                             double slope);
BatchLossResult ood_full_ovr(std::span<const LogitMap> logits, std::span<const LabelMap> labels, double slope);
BatchLossResult ood_uniform_ce(std::span<const LogitMap> logits, std::span<const LabelMap> labels);
BatchLossResult ood_energy_max(std::span<const LogitMap> logits, std::span<const LabelMap> labels);
BatchLossResult id_cross_entropy(std::span<const LogitMap> logits, std::span<const LabelMap> labels);
// Dispatches on cfg.variant.
BatchLossResult ood_loss(std::span<const LogitMap> logits, std::span<const LabelMap> labels,
                         const LossConfig& cfg);

// Single-map conveniences.
LossResult ood_topk_ovr(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg);
LossResult ood_full_ovr(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg);
LossResult ood_uniform_ce(const LogitMap& logits, const LabelMap& labels);
LossResult ood_energy_max(const LogitMap& logits, const LabelMap& labels);
LossResult id_cross_entropy(const LogitMap& logits, const LabelMap& labels);
LossResult ood_loss(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg);

// L_all = L_id(post-upsampling logits, full-resolution labels)
//       + gamma * L_ood(pre-upsampling logits, downsampled labels).
struct CombinedLoss {
  double value = 0.0;
  BatchLossResult id;
  BatchLossResult ood;
  // gamma * ood.grads, i.e. the gradient of `value` w.r.t. the pre-upsampling logits.
  std::vector<std::vector<double>> grad_pre;
};

CombinedLoss combined_loss(std::span<const LogitMap> logits_pre, std::span<const LogitMap> logits_post,
                           std::span<const LabelMap> labels_full, std::span<const LabelMap> labels_pre,
                           const LossConfig& cfg);

// Deterministic pairwise summation; the result does not depend on how the
// terms were produced, only on their order.
double pairwise_sum(std::span<const double> terms);

}  // namespace oodseg
