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
#include <span>
#include <string>
#include <vector>

#include "oodseg/imagery.hpp"
#include "oodseg/scores.hpp"

namespace oodseg {

class SegNet;
struct Corpus;

// Flattened scores with binary truth (1 = OoD). Ignore pixels are dropped
// when pairs are built from maps.
struct EvalPair {
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;

  std::size_t positives() const;
  std::size_t negatives() const;
};

// Pixels labelled kIgnoreId are skipped; kOodId is positive, everything else
// negative. Throws ArgumentError on shape mismatch.
void append_pairs(EvalPair& pairs, const ScoreMap& scores, const LabelMap& truth);
EvalPair make_pairs(std::span<const ScoreMap> scores, std::span<const LabelMap> truth);

// Throw UndefinedMetricError when a required class is absent.
double auroc(const EvalPair& pairs);
double average_precision(const EvalPair& pairs);
double fpr_at_tpr(const EvalPair& pairs, double target = 0.95);

struct RankingMetrics {
  double auroc = 0.0;
  double ap = 0.0;
  double fpr95 = 0.0;
};
// All three from a single sort.
RankingMetrics ranking_metrics(const EvalPair& pairs, double target = 0.95);

// Classes absent from both prediction and truth have NaN IoU and are left
// out of the mean. Truth pixels labelled kOodId or kIgnoreId are skipped.
struct MiouResult {
  double miou = 0.0;
  std::vector<double> per_class;
};
MiouResult miou(const LabelMap& pred, const LabelMap& truth, int classes);
MiouResult miou(std::span<const LabelMap> pred, std::span<const LabelMap> truth, int classes);

inline constexpr int kConfidenceBins = 20;

// Prediction behaviour on OoD pixels: argmax class counts and a histogram of
// the max-softmax confidence (bin = floor(conf * 20), top bin closed).
struct ConfusionAnalysis {
  std::size_t ood_pixels = 0;
  std::vector<std::size_t> class_counts;
  std::array<std::size_t, kConfidenceBins> confidence_counts{};

  std::vector<double> class_fraction() const;
  std::array<double, kConfidenceBins> confidence_fraction() const;
};
ConfusionAnalysis ood_confusion_analysis(const LogitMap& logits, const LabelMap& truth);
ConfusionAnalysis ood_confusion_analysis(std::span<const LogitMap> logits, std::span<const LabelMap> truth);
// kind,bin,count,fraction
std::string confusion_csv(const ConfusionAnalysis& analysis);

struct EvalReport {
  std::string score;
  double auroc = 0.0;
  double ap = 0.0;
  double fpr95 = 0.0;
  double miou = 0.0;
  std::vector<double> per_class_iou;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  ConfusionAnalysis confusion;
};

// metric,value rows.
std::string report_csv(const EvalReport& report);
// Flat key=value lines.
std::string report_kv(const EvalReport& report);
// One row per report: score,auroc,ap,fpr95,miou.
std::string report_table_csv(std::span<const EvalReport> reports);

// Scores full-resolution logits against truth. `stats` is required for std_ml.
EvalReport evaluate(std::span<const LogitMap> logits, std::span<const LabelMap> truth, const std::string& score,
                    const ClasswiseStats* stats = nullptr);
// Runs the net over the eval split first.
EvalReport evaluate(const SegNet& net, const Corpus& corpus, const std::string& score,
                    const ClasswiseStats* stats = nullptr);

}  // namespace oodseg
