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

#include "oodseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oodseg/errors.hpp"
#include "oodseg/oodloss.hpp"
#include "oodseg/segnet.hpp"
#include "oodseg/synth.hpp"

namespace oodseg {
namespace {

// Per-threshold counts in descending score order, ties grouped.
struct Curve {
  std::vector<std::uint64_t> tp;  // positives in each group
  std::vector<std::uint64_t> fp;  // negatives in each group
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

Curve build_curve(const EvalPair& pairs) {
  if (pairs.scores.size() != pairs.truth.size()) throw ArgumentError("score and truth lengths differ");
  struct Item {
    double score;
    std::uint8_t positive;
  };
  std::vector<Item> items(pairs.scores.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!std::isfinite(pairs.scores[i])) throw DataError("non-finite score");
    items[i] = {pairs.scores[i], static_cast<std::uint8_t>(pairs.truth[i] != 0)};
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score > b.score; });
  Curve curve;
  for (std::size_t i = 0; i < items.size();) {
    std::uint64_t tp = 0, fp = 0;
    const double s = items[i].score;
    for (; i < items.size() && items[i].score == s; ++i) {
      if (items[i].positive) ++tp;
      else ++fp;
    }
    curve.tp.push_back(tp);
    curve.fp.push_back(fp);
    curve.positives += tp;
    curve.negatives += fp;
  }
  return curve;
}

void require_both(const Curve& c) {
  if (c.positives == 0 || c.negatives == 0) {
    throw UndefinedMetricError("ranking metric needs at least one positive and one negative");
  }
}

double curve_auroc(const Curve& c) {
  require_both(c);
  // Twice the Mann-Whitney U statistic, in exact integer arithmetic.
  unsigned __int128 twice_u = 0;
  std::uint64_t neg_above = 0;
  for (std::size_t g = 0; g < c.tp.size(); ++g) {
    const std::uint64_t neg_below = c.negatives - neg_above - c.fp[g];
    twice_u += static_cast<unsigned __int128>(c.tp[g]) * (2 * neg_below + c.fp[g]);
    neg_above += c.fp[g];
  }
  const unsigned __int128 total = static_cast<unsigned __int128>(2) * c.positives * c.negatives;
  const double denom = static_cast<double>(total);
  // Symmetric evaluation so that auroc(s) + auroc(-s) == 1 exactly.
  if (2 * twice_u <= total) return static_cast<double>(twice_u) / denom;
  return 1.0 - static_cast<double>(total - twice_u) / denom;
}

double curve_ap(const Curve& c) {
  if (c.positives == 0) throw UndefinedMetricError("average precision needs at least one positive");
  std::vector<double> terms;
  terms.reserve(c.tp.size());
  std::uint64_t tp_cum = 0, fp_cum = 0;
  for (std::size_t g = 0; g < c.tp.size(); ++g) {
    tp_cum += c.tp[g];
    fp_cum += c.fp[g];
    if (c.tp[g] == 0) continue;
    const double recall_step = static_cast<double>(c.tp[g]) / static_cast<double>(c.positives);
    const double precision = static_cast<double>(tp_cum) / static_cast<double>(tp_cum + fp_cum);
    terms.push_back(recall_step * precision);
  }
  return pairwise_sum(terms);
}

double curve_fpr(const Curve& c, double target) {
  require_both(c);
  if (!(target > 0.0 && target <= 1.0)) throw ArgumentError("target TPR must lie in (0, 1]");
  std::uint64_t tp_cum = 0, fp_cum = 0;
  for (std::size_t g = 0; g < c.tp.size(); ++g) {
    tp_cum += c.tp[g];
    fp_cum += c.fp[g];
    if (static_cast<double>(tp_cum) / static_cast<double>(c.positives) >= target) {
      return static_cast<double>(fp_cum) / static_cast<double>(c.negatives);
    }
  }
  return 1.0;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::size_t EvalPair::positives() const {
  return static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(), [](std::uint8_t t) { return t != 0; }));
}

std::size_t EvalPair::negatives() const { return truth.size() - positives(); }

void append_pairs(EvalPair& pairs, const ScoreMap& scores, const LabelMap& truth) {
  if (scores.height() != truth.height() || scores.width() != truth.width()) {
    throw ArgumentError("score and label map shapes differ");
  }
  const auto s = scores.data();
  const auto t = truth.data();
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (t[p] == kIgnoreId) continue;
    pairs.scores.push_back(s[p]);
    pairs.truth.push_back(t[p] == kOodId ? 1 : 0);
  }
}

EvalPair make_pairs(std::span<const ScoreMap> scores, std::span<const LabelMap> truth) {
  if (scores.size() != truth.size()) throw ArgumentError("score and label sequences differ in length");
  EvalPair pairs;
  for (std::size_t i = 0; i < scores.size(); ++i) append_pairs(pairs, scores[i], truth[i]);
  return pairs;
}

double auroc(const EvalPair& pairs) { return curve_auroc(build_curve(pairs)); }
double average_precision(const EvalPair& pairs) { return curve_ap(build_curve(pairs)); }
double fpr_at_tpr(const EvalPair& pairs, double target) { return curve_fpr(build_curve(pairs), target); }

RankingMetrics ranking_metrics(const EvalPair& pairs, double target) {
  const Curve c = build_curve(pairs);
  return {curve_auroc(c), curve_ap(c), curve_fpr(c, target)};
}

MiouResult miou(std::span<const LabelMap> pred, std::span<const LabelMap> truth, int classes) {
  if (pred.size() != truth.size()) throw ArgumentError("prediction and truth sequences differ in length");
  if (classes < 1 || classes > kMaxClasses) throw ArgumentError("bad class count");
  std::vector<std::uint64_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].height() != truth[i].height() || pred[i].width() != truth[i].width()) {
      throw ArgumentError("prediction and truth shapes differ");
    }
    const auto p = pred[i].data();
    const auto t = truth[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (t[k] >= classes) continue;
      if (p[k] == t[k]) {
        ++tp[t[k]];
      } else {
        ++fn[t[k]];
        if (p[k] < classes) ++fp[p[k]];
      }
    }
  }
  MiouResult result;
  result.per_class.assign(classes, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> present;
  for (int c = 0; c < classes; ++c) {
    const std::uint64_t denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    result.per_class[c] = static_cast<double>(tp[c]) / static_cast<double>(denom);
    present.push_back(result.per_class[c]);
  }
  if (present.empty()) throw UndefinedMetricError("no class present in prediction or truth");
  result.miou = pairwise_sum(present) / static_cast<double>(present.size());
  return result;
}

MiouResult miou(const LabelMap& pred, const LabelMap& truth, int classes) {
  return miou(std::span<const LabelMap>(&pred, 1), std::span<const LabelMap>(&truth, 1), classes);
}

std::vector<double> ConfusionAnalysis::class_fraction() const {
  std::vector<double> out(class_counts.size(), 0.0);
  if (ood_pixels == 0) return out;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = static_cast<double>(class_counts[c]) / ood_pixels;
  return out;
}

std::array<double, kConfidenceBins> ConfusionAnalysis::confidence_fraction() const {
  std::array<double, kConfidenceBins> out{};
  if (ood_pixels == 0) return out;
  for (int b = 0; b < kConfidenceBins; ++b) out[b] = static_cast<double>(confidence_counts[b]) / ood_pixels;
  return out;
}

ConfusionAnalysis ood_confusion_analysis(std::span<const LogitMap> logits, std::span<const LabelMap> truth) {
  if (logits.size() != truth.size()) throw ArgumentError("logit and label sequences differ in length");
  ConfusionAnalysis a;
  if (!logits.empty()) a.class_counts.assign(logits.front().classes(), 0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].height() != truth[i].height() || logits[i].width() != truth[i].width()) {
      throw ArgumentError("logit and label map shapes differ");
    }
    if (logits[i].classes() != static_cast<int>(a.class_counts.size())) {
      throw ArgumentError("class count varies across logit maps");
    }
    const auto t = truth[i].data();
    for (std::size_t p = 0; p < t.size(); ++p) {
      if (t[p] != kOodId) continue;
      const auto x = logits[i].pixel(p);
      const auto it = std::max_element(x.begin(), x.end());
      double sum = 0.0;
      for (double v : x) sum += std::exp(v - *it);
      const double conf = 1.0 / sum;
      const int bin = std::min(kConfidenceBins - 1, static_cast<int>(std::floor(conf * kConfidenceBins)));
      ++a.class_counts[it - x.begin()];
      ++a.confidence_counts[bin];
      ++a.ood_pixels;
    }
  }
  return a;
}

ConfusionAnalysis ood_confusion_analysis(const LogitMap& logits, const LabelMap& truth) {
  return ood_confusion_analysis(std::span<const LogitMap>(&logits, 1), std::span<const LabelMap>(&truth, 1));
}

std::string confusion_csv(const ConfusionAnalysis& a) {
  std::ostringstream out;
  out << "kind,bin,count,fraction\n";
  const auto cf = a.class_fraction();
  for (std::size_t c = 0; c < a.class_counts.size(); ++c) {
    out << "class," << c << ',' << a.class_counts[c] << ',' << fmt(cf[c]) << "\n";
  }
  const auto hf = a.confidence_fraction();
  for (int b = 0; b < kConfidenceBins; ++b) {
    out << "confidence," << b << ',' << a.confidence_counts[b] << ',' << fmt(hf[b]) << "\n";
  }
  return out.str();
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "auroc," << fmt(r.auroc) << "\n";
  out << "ap," << fmt(r.ap) << "\n";
  out << "fpr95," << fmt(r.fpr95) << "\n";
  out << "miou," << fmt(r.miou) << "\n";
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) out << "iou_" << c << ',' << fmt(r.per_class_iou[c]) << "\n";
  return out.str();
}

std::string report_kv(const EvalReport& r) {
  std::ostringstream out;
  out << "score=" << r.score << "\n";
  out << "auroc=" << fmt(r.auroc) << "\n";
  out << "ap=" << fmt(r.ap) << "\n";
  out << "fpr95=" << fmt(r.fpr95) << "\n";
  out << "miou=" << fmt(r.miou) << "\n";
  out << "positives=" << r.positives << "\n";
  out << "negatives=" << r.negatives << "\n";
  out << "ood_pixels=" << r.confusion.ood_pixels << "\n";
  return out.str();
}

std::string report_table_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "score,auroc,ap,fpr95,miou\n";
  for (const EvalReport& r : reports) {
    out << r.score << ',' << fmt(r.auroc) << ',' << fmt(r.ap) << ',' << fmt(r.fpr95) << ',' << fmt(r.miou) << "\n";
  }
  return out.str();
}

EvalReport evaluate(std::span<const LogitMap> logits, std::span<const LabelMap> truth, const std::string& score,
                    const ClasswiseStats* stats) {
  if (logits.size() != truth.size()) throw ArgumentError("logit and label sequences differ in length");
  if (logits.empty()) throw ArgumentError("nothing to evaluate");
  const int classes = logits.front().classes();
  EvalReport report;
  report.score = score;
  EvalPair pairs;
  std::vector<LabelMap> preds;
  preds.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    truth[i].validate(classes);
    append_pairs(pairs, compute_score(score, logits[i], stats), truth[i]);
    preds.push_back(predict_labels(logits[i]));
  }
  const RankingMetrics rm = ranking_metrics(pairs);
  report.auroc = rm.auroc;
  report.ap = rm.ap;
  report.fpr95 = rm.fpr95;
  report.positives = pairs.positives();
  report.negatives = pairs.truth.size() - report.positives;
  const MiouResult m = miou(preds, truth, classes);
  report.miou = m.miou;
  report.per_class_iou = m.per_class;
  report.confusion = ood_confusion_analysis(logits, truth);
  return report;
}

EvalReport evaluate(const SegNet& net, const Corpus& corpus, const std::string& score, const ClasswiseStats* stats) {
  std::vector<LogitMap> logits;
  std::vector<LabelMap> truth;
  for (std::size_t i : corpus.indices(Split::kEval)) {
    logits.push_back(net.forward(corpus.samples[i].image).logits_post);
    truth.push_back(corpus.samples[i].labels);
  }
  return evaluate(logits, truth, score, stats);
}

}  // namespace oodseg
