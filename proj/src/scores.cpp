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

#include "oodseg/scores.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oodseg/errors.hpp"
#include "oodseg/simd.hpp"

namespace oodseg {
namespace {

struct Extremes {
  std::vector<double> max;
  std::vector<double> min;
};

Extremes extremes(const LogitMap& logits) {
  Extremes e{std::vector<double>(logits.pixel_count()), std::vector<double>(logits.pixel_count())};
  simd::kernels().row_max_min(logits.data().data(), logits.pixel_count(), static_cast<std::size_t>(logits.classes()),
                              e.max.data(), e.min.data());
  return e;
}

template <typename Fn>
ScoreMap per_pixel(const LogitMap& logits, Fn fn) {
  std::vector<double> out(logits.pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = fn(logits.pixel(p));
  return ScoreMap(logits.height(), logits.width(), std::move(out));
}

// Shifted sum of exponentials; returns sum_c exp(x_c - mx).
double shifted_exp_sum(std::span<const double> x, double mx) {
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  return sum;
}

}  // namespace

ScoreMap score_msp(const LogitMap& logits) {
  return per_pixel(logits, [](std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    // max softmax = 1 / sum; 1 - 1/sum computed as (sum - 1) / sum to keep
    // tiny values when one class dominates.
    double rest = 0.0;
    bool seen_max = false;
    for (double v : x) {
      if (v == mx && !seen_max) {
        seen_max = true;
        continue;
      }
      rest += std::exp(v - mx);
    }
    return rest / (1.0 + rest);
  });
}

ScoreMap score_entropy(const LogitMap& logits) {
  return per_pixel(logits, [](std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    const double sum = shifted_exp_sum(x, mx);
    const double log_sum = std::log(sum);
    double h = 0.0;
    for (double v : x) {
      const double log_p = v - mx - log_sum;
      const double p = std::exp(log_p);
      if (p > 0.0) h -= p * log_p;
    }
    return std::max(h, 0.0);
  });
}

ScoreMap score_max_logit(const LogitMap& logits) {
  Extremes e = extremes(logits);
  for (double& v : e.max) v = -v;
  return ScoreMap(logits.height(), logits.width(), std::move(e.max));
}

ScoreMap score_energy(const LogitMap& logits) {
  return per_pixel(logits, [](std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    return -(mx + std::log(shifted_exp_sum(x, mx)));
  });
}

ScoreMap score_max_min(const LogitMap& logits) {
  Extremes e = extremes(logits);
  for (std::size_t p = 0; p < e.max.size(); ++p) e.max[p] = -(e.max[p] - e.min[p]);
  return ScoreMap(logits.height(), logits.width(), std::move(e.max));
}

ClasswiseStats fit_classwise_stats(std::span<const LogitMap> dumps) {
  if (dumps.empty()) throw ArgumentError("fit_classwise_stats needs at least one logit map");
  const int classes = dumps.front().classes();
  std::vector<long double> sum(classes, 0.0L);
  std::vector<std::size_t> count(classes, 0);
  for (const LogitMap& m : dumps) {
    if (m.classes() != classes) throw ArgumentError("logit maps disagree on the class count");
    for (std::size_t p = 0; p < m.pixel_count(); ++p) {
      const auto x = m.pixel(p);
      const auto it = std::max_element(x.begin(), x.end());
      const auto c = static_cast<std::size_t>(it - x.begin());
      sum[c] += *it;
      ++count[c];
    }
  }
  ClasswiseStats stats{std::vector<double>(classes, 0.0), std::vector<double>(classes, 1.0), count};
  for (int c = 0; c < classes; ++c) {
    if (count[c] > 0) stats.mean[c] = static_cast<double>(sum[c] / static_cast<long double>(count[c]));
  }
  std::vector<long double> sq(classes, 0.0L);
  for (const LogitMap& m : dumps) {
    for (std::size_t p = 0; p < m.pixel_count(); ++p) {
      const auto x = m.pixel(p);
      const auto it = std::max_element(x.begin(), x.end());
      const auto c = static_cast<std::size_t>(it - x.begin());
      const long double d = *it - stats.mean[c];
      sq[c] += d * d;
    }
  }
  for (int c = 0; c < classes; ++c) {
    if (count[c] == 0) continue;
    const double var = static_cast<double>(sq[c] / static_cast<long double>(count[c]));
    stats.std[c] = std::max(kStatsEpsilon, std::sqrt(var));
  }
  return stats;
}

ScoreMap score_standardized_ml(const LogitMap& logits, const ClasswiseStats& stats) {
  if (stats.classes() != logits.classes() || stats.std.size() != stats.mean.size()) {
    throw ArgumentError("class-wise stats do not match the logit class count");
  }
  return per_pixel(logits, [&](std::span<const double> x) {
    const auto it = std::max_element(x.begin(), x.end());
    const auto c = static_cast<std::size_t>(it - x.begin());
    return -(*it - stats.mean[c]) / stats.std[c];
  });
}

const std::vector<std::string>& score_names() {
  static const std::vector<std::string> names = {"msp", "entropy", "max_logit", "energy", "std_ml", "max_min"};
  return names;
}

bool is_score_name(std::string_view name) {
  const auto& names = score_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ScoreMap compute_score(std::string_view name, const LogitMap& logits, const ClasswiseStats* stats) {
  if (name == "msp") return score_msp(logits);
  if (name == "entropy") return score_entropy(logits);
  if (name == "max_logit") return score_max_logit(logits);
  if (name == "energy") return score_energy(logits);
  if (name == "max_min") return score_max_min(logits);
  if (name == "std_ml") {
    if (stats == nullptr) throw ArgumentError("std_ml needs class-wise stats");
    return score_standardized_ml(logits, *stats);
  }
  throw ArgumentError("unknown score '" + std::string(name) + "'");
}

}  // namespace oodseg
