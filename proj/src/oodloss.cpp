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

#include "oodseg/oodloss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oodseg/errors.hpp"

namespace oodseg {
namespace {

void check_batch(std::span<const LogitMap> logits, std::span<const LabelMap> labels) {
  if (logits.size() != labels.size()) throw ArgumentError("logit/label batch sizes differ");
  for (std::size_t b = 0; b < logits.size(); ++b) {
    if (logits[b].height() != labels[b].height() || logits[b].width() != labels[b].width()) {
      throw ArgumentError("logit and label map shapes differ");
    }
    if (b > 0 && logits[b].classes() != logits[0].classes()) throw ArgumentError("class count varies in batch");
    labels[b].validate(logits[b].classes());
  }
}

std::vector<std::vector<double>> zero_grads(std::span<const LogitMap> logits) {
  std::vector<std::vector<double>> grads;
  grads.reserve(logits.size());
  for (const LogitMap& m : logits) grads.emplace_back(m.data().size(), 0.0);
  return grads;
}

// Runs `term(pixel_logits, label, grad_out) -> value` on every pixel where
// `select(label, classes)` holds, then divides value and gradients by
// `count * extra_norm`.
template <typename Select, typename Term>
BatchLossResult accumulate(std::span<const LogitMap> logits, std::span<const LabelMap> labels, Select select,
                           Term term, double extra_norm) {
  check_batch(logits, labels);
  BatchLossResult result;
  result.grads = zero_grads(logits);
  std::vector<double> terms;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const int classes = logits[b].classes();
    const auto lbl = labels[b].data();
    for (std::size_t p = 0; p < logits[b].pixel_count(); ++p) {
      if (!select(lbl[p], classes)) continue;
      std::span<double> g(result.grads[b].data() + p * classes, static_cast<std::size_t>(classes));
      terms.push_back(term(logits[b].pixel(p), lbl[p], g));
    }
  }
  result.contributing_pixels = terms.size();
  if (terms.empty()) return result;
  const double norm = static_cast<double>(terms.size()) * extra_norm;
  result.value = pairwise_sum(terms) / norm;
  const double scale = 1.0 / norm;
  for (auto& g : result.grads) {
    for (double& v : g) v *= scale;
  }
  return result;
}

bool is_ood(std::uint8_t label, int) { return label == kOodId; }
bool is_id(std::uint8_t label, int classes) { return label < classes; }

void softmax(std::span<const double> x, std::span<double> out) {
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
}

BatchLossResult ovr(std::span<const LogitMap> logits, std::span<const LabelMap> labels, int k, double slope) {
  if (k < 1) throw ArgumentError("K must be positive");
  if (!(slope > 0.0)) throw ArgumentError("slope must be positive");
  const int classes = logits.empty() ? 0 : logits[0].classes();
  const int effective_k = std::min(k, std::max(classes, 1));
  auto term = [&](std::span<const double> x, std::uint8_t, std::span<double> g) {
    double sum = 0.0;
    for (int idx : top_k_indices(x, effective_k)) {
      const double z = slope * x[idx];
      sum += softplus(z);
      g[idx] = slope * sigmoid(z);
    }
    return sum;
  };
  return accumulate(logits, labels, is_ood, term, static_cast<double>(effective_k));
}

template <typename Fn>
LossResult single(Fn fn, const LogitMap& logits, const LabelMap& labels) {
  BatchLossResult batch = fn(std::span<const LogitMap>(&logits, 1), std::span<const LabelMap>(&labels, 1));
  return {batch.value, std::move(batch.grads.front())};
}

}  // namespace

std::string_view variant_name(OodLossVariant variant) {
  switch (variant) {
    case OodLossVariant::kTopKOvr: return "topk_ovr";
    case OodLossVariant::kFullOvr: return "full_ovr";
    case OodLossVariant::kUniformCe: return "uniform_ce";
    case OodLossVariant::kEnergyMax: return "energy_max";
  }
  return "unknown";
}

OodLossVariant parse_variant(std::string_view name) {
  for (auto v : {OodLossVariant::kTopKOvr, OodLossVariant::kFullOvr, OodLossVariant::kUniformCe,
                 OodLossVariant::kEnergyMax}) {
    if (variant_name(v) == name) return v;
  }
  throw ArgumentError("unknown loss variant '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  if (k < 1) throw ArgumentError("K must be positive");
  if (!(slope > 0.0) || !std::isfinite(slope)) throw ArgumentError("slope s must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be non-negative");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sum_exp(std::span<const double> values) {
  const double mx = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

std::vector<int> top_k_indices(std::span<const double> values, int k) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto kk = static_cast<std::size_t>(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), 0,
                                                                   values.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), [&](int a, int b) {
    return values[a] > values[b] || (values[a] == values[b] && a < b);
  });
  idx.resize(kk);
  return idx;
}

double pairwise_sum(std::span<const double> terms) {
  if (terms.size() <= 8) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

BatchLossResult ood_topk_ovr(std::span<const LogitMap> logits, std::span<const LabelMap> labels, int k,
                             double slope) {
  return ovr(logits, labels, k, slope);
}

BatchLossResult ood_full_ovr(std::span<const LogitMap> logits, std::span<const LabelMap> labels, double slope) {
  const int classes = logits.empty() ? 1 : logits[0].classes();
  return ovr(logits, labels, classes, slope);
}

BatchLossResult ood_uniform_ce(std::span<const LogitMap> logits, std::span<const LabelMap> labels) {
  std::vector<double> prob;
  auto term = [&](std::span<const double> x, std::uint8_t, std::span<double> g) {
    prob.resize(x.size());
    softmax(x, prob);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double uniform = 1.0 / static_cast<double>(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) g[c] = prob[c] - uniform;
    return log_sum_exp(x) - mean;
  };
  return accumulate(logits, labels, is_ood, term, 1.0);
}

BatchLossResult ood_energy_max(std::span<const LogitMap> logits, std::span<const LabelMap> labels) {
  auto term = [&](std::span<const double> x, std::uint8_t, std::span<double> g) {
    softmax(x, g);
    return log_sum_exp(x);
  };
  return accumulate(logits, labels, is_ood, term, 1.0);
}

BatchLossResult id_cross_entropy(std::span<const LogitMap> logits, std::span<const LabelMap> labels) {
  auto term = [&](std::span<const double> x, std::uint8_t label, std::span<double> g) {
    softmax(x, g);
    g[label] -= 1.0;
    return log_sum_exp(x) - x[label];
  };
  return accumulate(logits, labels, is_id, term, 1.0);
}

BatchLossResult ood_loss(std::span<const LogitMap> logits, std::span<const LabelMap> labels,
                         const LossConfig& cfg) {
  cfg.validate();
  switch (cfg.variant) {
    case OodLossVariant::kTopKOvr: return ood_topk_ovr(logits, labels, cfg.k, cfg.slope);
    case OodLossVariant::kFullOvr: return ood_full_ovr(logits, labels, cfg.slope);
    case OodLossVariant::kUniformCe: return ood_uniform_ce(logits, labels);
    case OodLossVariant::kEnergyMax: return ood_energy_max(logits, labels);
  }
  throw ArgumentError("unknown loss variant");
}

LossResult ood_topk_ovr(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg) {
  return single([&](auto l, auto y) { return ood_topk_ovr(l, y, cfg.k, cfg.slope); }, logits, labels);
}

LossResult ood_full_ovr(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg) {
  return single([&](auto l, auto y) { return ood_full_ovr(l, y, cfg.slope); }, logits, labels);
}

LossResult ood_uniform_ce(const LogitMap& logits, const LabelMap& labels) {
  return single([](auto l, auto y) { return ood_uniform_ce(l, y); }, logits, labels);
}

LossResult ood_energy_max(const LogitMap& logits, const LabelMap& labels) {
  return single([](auto l, auto y) { return ood_energy_max(l, y); }, logits, labels);
}

LossResult id_cross_entropy(const LogitMap& logits, const LabelMap& labels) {
  return single([](auto l, auto y) { return id_cross_entropy(l, y); }, logits, labels);
}

LossResult ood_loss(const LogitMap& logits, const LabelMap& labels, const LossConfig& cfg) {
  return single([&](auto l, auto y) { return ood_loss(l, y, cfg); }, logits, labels);
}

CombinedLoss combined_loss(std::span<const LogitMap> logits_pre, std::span<const LogitMap> logits_post,
                           std::span<const LabelMap> labels_full, std::span<const LabelMap> labels_pre,
                           const LossConfig& cfg) {
  cfg.validate();
  CombinedLoss out;
  out.id = id_cross_entropy(logits_post, labels_full);
  out.ood = ood_loss(logits_pre, labels_pre, cfg);
  out.value = out.id.value + cfg.gamma * out.ood.value;
  out.grad_pre = out.ood.grads;
  for (auto& g : out.grad_pre) {
    for (double& v : g) v *= cfg.gamma;
  }
  return out;
}

}  // namespace oodseg
