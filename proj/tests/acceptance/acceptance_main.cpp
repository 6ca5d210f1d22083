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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "oodseg/config.hpp"
#include "oodseg/metrics.hpp"
#include "oodseg/oodloss.hpp"
#include "oodseg/pipeline.hpp"
#include "oodseg/scores.hpp"
#include "oodseg/segnet.hpp"

#ifndef OODSEG_CLI_PATH
#define OODSEG_CLI_PATH "oodseg"
#endif

namespace {

namespace fs = std::filesystem;
using namespace oodseg;
using Clock = std::chrono::steady_clock;

// Tolerances and gates.
constexpr double kLossGradTol = 1e-5;
constexpr double kNetGradTol = 1e-4;
constexpr double kGradFloor = 1e-4;  // denominator floor for relative errors
constexpr double kLossStep = 1e-6;
constexpr double kNetStep = 1e-5;
constexpr int kGradInstances = 100;
constexpr double kGradSeconds = 60.0;
constexpr double kClosedFormTol = 1e-6;
constexpr double kLnCTol = 1e-9;
constexpr int kOracleInstances = 1000;
constexpr double kOracleTol = 1e-12;
constexpr double kOracleSeconds = 120.0;
constexpr double kGainMargin = 0.05;
constexpr int kAlignMinSeeds = 4;
constexpr double kMiouTol = 0.01;
constexpr std::size_t kPerfPairs = 10'000'000;
constexpr double kPerfSeconds = 10.0;
constexpr double kPipelineSeconds = 30.0 * 60.0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string num(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({kGradFloor, std::abs(analytic), std::abs(numeric)});
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };

  double worst_loss = 0.0;
  const OodLossVariant variants[] = {OodLossVariant::kTopKOvr, OodLossVariant::kFullOvr, OodLossVariant::kUniformCe,
                                     OodLossVariant::kEnergyMax};
  for (OodLossVariant variant : variants) {
    for (int inst = 0; inst < kGradInstances; ++inst) {
      const int classes = uniform_int(2, 7);
      const int batch = uniform_int(1, 2);
      std::vector<LogitMap> logits;
      std::vector<LabelMap> labels;
      for (int b = 0; b < batch; ++b) {
        const int h = uniform_int(1, 4), w = uniform_int(1, 4);
        LogitMap m(h, w, classes);
        for (double& v : m.data()) v = normal(gen);
        LabelMap l(h, w);
        for (auto& v : l.data()) {
          const double u = unit(gen);
          v = u < 0.45 ? kOodId : u < 0.55 ? kIgnoreId : static_cast<std::uint8_t>(uniform_int(0, classes - 1));
        }
        if (b == 0) l.data()[0] = kOodId;
        logits.push_back(std::move(m));
        labels.push_back(std::move(l));
      }
      LossConfig cfg;
      cfg.variant = variant;
      cfg.k = uniform_int(1, classes + 1);
      cfg.slope = 0.5 + 3.5 * unit(gen);
      const BatchLossResult r = ood_loss(logits, labels, cfg);
      for (int b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < logits[b].data().size(); ++i) {
          double& x = logits[b].data()[i];
          const double keep = x;
          x = keep + kLossStep;
          const double up = ood_loss(logits, labels, cfg).value;
          x = keep - kLossStep;
          const double down = ood_loss(logits, labels, cfg).value;
          x = keep;
          worst_loss = std::max(worst_loss, rel_error(r.grads[b][i], (up - down) / (2 * kLossStep)));
        }
      }
    }
  }

  double worst_net = 0.0;
  for (int inst = 0; inst < kGradInstances; ++inst) {
    SegNet net(kSceneClasses);
    net.initialize(static_cast<std::uint64_t>(inst) + 1);
    for (double& p : net.mutable_parameters()) p += 0.05 * normal(gen);
    Image image(8, 8);
    for (double& v : image.data()) v = unit(gen);
    LabelMap labels(8, 8);
    for (auto& v : labels.data()) {
      const double u = unit(gen);
      v = u < 0.4 ? kOodId : u < 0.5 ? kIgnoreId : static_cast<std::uint8_t>(uniform_int(0, kSceneClasses - 1));
    }
    const LabelMap labels_pre = downsample_labels(labels);
    LossConfig cfg;
    cfg.k = uniform_int(1, kSceneClasses);
    cfg.gamma = 0.5 + unit(gen);

    auto loss_at = [&](ForwardCache* cache) {
      const ForwardResult fr = net.forward(image, cache);
      return combined_loss(std::span(&fr.logits_pre, 1), std::span(&fr.logits_post, 1), std::span(&labels, 1),
                           std::span(&labels_pre, 1), cfg);
    };
    ForwardCache cache;
    const CombinedLoss base = loss_at(&cache);
    std::vector<double> grads(net.parameter_count(), 0.0);
    net.backward(cache, base.grad_pre[0], base.id.grads[0], grads, false);

    std::vector<std::size_t> probe;
    for (std::size_t i = net.backbone_parameter_count(); i < net.parameter_count(); ++i) probe.push_back(i);
    for (int j = 0; j < 20; ++j) {
      probe.push_back(std::uniform_int_distribution<std::size_t>(0, net.backbone_parameter_count() - 1)(gen));
    }
    for (std::size_t i : probe) {
      const double keep = net.parameters()[i];
      net.mutable_parameters()[i] = keep + kNetStep;
      const double up = loss_at(nullptr).value;
      net.mutable_parameters()[i] = keep - kNetStep;
      const double down = loss_at(nullptr).value;
      net.mutable_parameters()[i] = keep;
      worst_net = std::max(worst_net, rel_error(grads[i], (up - down) / (2 * kNetStep)));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst_loss < kLossGradTol && worst_net < kNetGradTol && elapsed < kGradSeconds,
          "loss max rel err " + sci(worst_loss) + ", network max rel err " + sci(worst_net) +
              ", " + num(elapsed, 1) + " s"};
}

// ---------------------------------------------------------------- 2

LossResult one_pixel(const std::vector<double>& lambda, std::uint8_t label, const LossConfig& cfg) {
  LogitMap m(1, 1, static_cast<int>(lambda.size()));
  std::copy(lambda.begin(), lambda.end(), m.data().begin());
  LabelMap l(1, 1);
  l.data()[0] = label;
  return ood_loss(m, l, cfg);
}

Outcome closed_forms() {
  LossConfig topk;
  topk.k = 2;
  LossConfig full;
  full.variant = OodLossVariant::kFullOvr;
  LossConfig uniform;
  uniform.variant = OodLossVariant::kUniformCe;
  LossConfig energy;
  energy.variant = OodLossVariant::kEnergyMax;
  LossConfig top1;
  top1.k = 1;

  struct Case {
    std::string name;
    double got, want, tol;
  };
  std::vector<Case> cases;
  cases.push_back({"topk (1,0,-1) K=2 s=2", one_pixel({1, 0, -1}, kOodId, topk).value, 1.410038, kClosedFormTol});
  const LossResult g = one_pixel({0, 0, 0}, kOodId, top1);
  cases.push_back({"topk grad at zero", g.grad[0], 1.0, kClosedFormTol});
  cases.push_back({"topk grad unselected", std::abs(g.grad[1]) + std::abs(g.grad[2]), 0.0, kClosedFormTol});
  cases.push_back({"full (0,0)", one_pixel({0, 0}, kOodId, full).value, 0.693147, kClosedFormTol});
  cases.push_back({"uniform (1,0)", one_pixel({1, 0}, kOodId, uniform).value, 0.813262, kClosedFormTol});
  for (int c : {2, 6, 19}) {
    cases.push_back({"uniform equal C=" + std::to_string(c), one_pixel(std::vector<double>(c, 0.7), kOodId, uniform).value,
                     std::log(static_cast<double>(c)), kLnCTol});
  }
  cases.push_back({"energy (0,0)", one_pixel({0, 0}, kOodId, energy).value, 0.693147, kClosedFormTol});
  cases.push_back({"energy (1000,1000)", one_pixel({1000, 1000}, kOodId, energy).value, 1000.693147, kClosedFormTol});
  {
    LogitMap m(1, 1, 6);
    LabelMap l(1, 1);
    l.data()[0] = 3;
    cases.push_back({"id CE uniform C=6", id_cross_entropy(m, l).value, 1.791759, kClosedFormTol});
  }
  std::string failed;
  for (const Case& c : cases) {
    if (!(std::abs(c.got - c.want) <= c.tol)) failed += " [" + c.name + ": " + sci(c.got) + "]";
  }
  return {failed.empty(), std::to_string(cases.size()) + " closed forms" + (failed.empty() ? " match" : failed)};
}

// ---------------------------------------------------------------- 3

struct BruteMetrics {
  double auroc, ap, fpr;
};

BruteMetrics brute_force(const EvalPair& p) {
  const std::size_t n = p.scores.size();
  double pos = 0, neg = 0;
  for (auto t : p.truth) (t ? pos : neg) += 1;
  double wins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!p.truth[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (p.truth[j]) continue;
      wins += p.scores[i] > p.scores[j] ? 1.0 : p.scores[i] == p.scores[j] ? 0.5 : 0.0;
    }
  }
  // AP: mean over positives of the precision at that positive's score.
  double ap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!p.truth[i]) continue;
    double tp = 0, all = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (p.scores[j] >= p.scores[i]) {
        all += 1;
        tp += p.truth[j];
      }
    }
    ap += tp / all;
  }
  // FPR at the highest threshold reaching 95% TPR.
  double best_t = -INFINITY, fpr = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = p.scores[i];
    double tp = 0, fp = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (p.scores[j] >= t) (p.truth[j] ? tp : fp) += 1;
    }
    if (tp / pos >= 0.95 && t > best_t) {
      best_t = t;
      fpr = fp / neg;
    }
  }
  return {wins / (pos * neg), ap / pos, fpr};
}

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(77);
  double worst = 0.0;
  for (int inst = 0; inst < kOracleInstances; ++inst) {
    const int n = std::uniform_int_distribution<int>(2, 200)(gen);
    const int levels = std::uniform_int_distribution<int>(1, 12)(gen);
    std::uniform_int_distribution<int> level(0, levels - 1);
    EvalPair p;
    for (int i = 0; i < n; ++i) {
      p.scores.push_back(0.25 * level(gen) - 1.0);
      p.truth.push_back(std::bernoulli_distribution(0.3)(gen) ? 1 : 0);
    }
    p.truth[0] = 1;
    p.truth[1] = 0;
    const BruteMetrics want = brute_force(p);
    const RankingMetrics got = ranking_metrics(p);
    worst = std::max({worst, std::abs(got.auroc - want.auroc), std::abs(got.ap - want.ap),
                      std::abs(got.fpr95 - want.fpr)});
  }
  const double elapsed = seconds_since(t0);
  return {worst <= kOracleTol && elapsed < kOracleSeconds,
          "max abs diff " + sci(worst) + " over " + std::to_string(kOracleInstances) + " instances, " +
              num(elapsed, 1) + " s"};
}

// ---------------------------------------------------------------- 4-8

struct SeedResult {
  std::map<std::string, double> ap_before, ap_after;
  double fpr_max_logit = 0, fpr_max_min = 0;
  double miou_before = 0, miou_after = 0;
  bool backbone_equal = true;
  double energy_aligned = 0, energy_unaligned = 0;
  std::map<std::string, std::map<int, double>> ap_by_k;  // score -> K -> AP
  std::map<std::string, double> ap_full;
};

std::map<std::string, const EvalReport*> by_score(const std::vector<EvalReport>& reports) {
  std::map<std::string, const EvalReport*> out;
  for (const EvalReport& r : reports) out[r.score] = &r;
  return out;
}

bool same_backbone(const SegNet& a, const SegNet& b) {
  const auto x = a.backbone_parameters(), y = b.backbone_parameters();
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
}

SeedResult run_seed(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  const Corpus corpus = generate_corpus(cfg.corpus_spec());
  const SegNet pre = pretrain_net(cfg, corpus);
  SeedResult out;

  const auto before = evaluate_scores(pre, corpus, score_names(), val_stats(pre, corpus));
  for (const EvalReport& r : before) out.ap_before[r.score] = r.ap;
  out.miou_before = before.front().miou;

  auto tuned = [&](const RunConfig& c, const std::vector<std::string>& scores) {
    SegNet net = pre;
    finetune_net(net, c, corpus);
    out.backbone_equal = out.backbone_equal && same_backbone(net, pre);
    return evaluate_scores(net, corpus, scores, val_stats(net, corpus));
  };

  const auto after = tuned(cfg, score_names());
  const auto a = by_score(after);
  for (const EvalReport& r : after) out.ap_after[r.score] = r.ap;
  out.fpr_max_logit = a.at("max_logit")->fpr95;
  out.fpr_max_min = a.at("max_min")->fpr95;
  out.miou_after = after.front().miou;

  RunConfig shifted = cfg;
  shifted.proxy_style = "styleP";
  shifted.style_align = true;
  out.energy_aligned = tuned(shifted, {"energy"}).front().ap;
  shifted.style_align = false;
  out.energy_unaligned = tuned(shifted, {"energy"}).front().ap;

  for (const std::string& s : ablation_scores()) out.ap_by_k[s][cfg.k] = a.at(s)->ap;
  for (int k : cfg.k_list) {
    if (k == cfg.k) continue;
    RunConfig c = cfg;
    c.k = k;
    for (const EvalReport& r : tuned(c, ablation_scores())) out.ap_by_k[r.score][k] = r.ap;
  }
  RunConfig full = cfg;
  full.variant = "full_ovr";
  for (const EvalReport& r : tuned(full, ablation_scores())) out.ap_full[r.score] = r.ap;
  return out;
}

void print_seed(std::uint64_t seed, const SeedResult& r) {
  std::cout << "  seed " << seed << ":";
  for (const auto& [name, ap] : r.ap_before) std::cout << " " << name << " " << num(ap) << "->" << num(r.ap_after.at(name));
  std::cout << "\n    fpr95 max_logit " << num(r.fpr_max_logit) << " max_min " << num(r.fpr_max_min) << ", miou "
            << num(r.miou_before) << "->" << num(r.miou_after) << ", energy aligned " << num(r.energy_aligned)
            << " unaligned " << num(r.energy_unaligned) << "\n   ";
  for (const auto& [name, ks] : r.ap_by_k) {
    std::cout << " " << name;
    for (const auto& [k, ap] : ks) std::cout << " K" << k << "=" << num(ap);
    std::cout << " full=" << num(r.ap_full.at(name));
  }
  std::cout << "\n";
}

std::vector<Outcome> directional(int n_seeds) {
  std::vector<SeedResult> runs;
  for (int s = 0; s < n_seeds; ++s) {
    const auto t0 = Clock::now();
    runs.push_back(run_seed(static_cast<std::uint64_t>(s)));
    print_seed(s, runs.back());
    std::cout << "    (" << num(seconds_since(t0), 0) << " s)\n" << std::flush;
  }
  std::vector<Outcome> out;

  bool gains_ok = true;
  std::string gains;
  for (const std::string& name : score_names()) {
    std::vector<double> gain;
    for (const SeedResult& r : runs) gain.push_back(r.ap_after.at(name) - r.ap_before.at(name));
    const double m = median(gain);
    gains_ok = gains_ok && m >= kGainMargin;
    gains += name + " " + (m >= 0 ? "+" : "") + num(100 * m, 1) + " ";
  }
  out.push_back({gains_ok, "median AP gain (points): " + gains});

  int wins = 0;
  for (const SeedResult& r : runs) wins += r.energy_aligned >= r.energy_unaligned ? 1 : 0;
  out.push_back({wins >= kAlignMinSeeds, "aligned >= unaligned on " + std::to_string(wins) + "/" +
                                          std::to_string(runs.size()) + " seeds (energy AP)"});

  std::vector<double> fpr_diff;
  for (const SeedResult& r : runs) fpr_diff.push_back(r.fpr_max_min - r.fpr_max_logit);
  out.push_back({median(fpr_diff) <= 0.0, "median FPR95(max_min) - FPR95(max_logit) = " + num(median(fpr_diff))});

  std::vector<double> miou_diff;
  bool equal = true;
  for (const SeedResult& r : runs) {
    miou_diff.push_back(std::abs(r.miou_after - r.miou_before));
    equal = equal && r.backbone_equal;
  }
  out.push_back({median(miou_diff) <= kMiouTol && equal,
                 "median |mIoU change| = " + num(100 * median(miou_diff), 2) + " points, backbone " +
                     (equal ? "byte-identical" : "CHANGED")});

  bool k_ok = true;
  std::string k_detail;
  for (const std::string& name : ablation_scores()) {
    std::vector<double> spread, gain;
    for (const SeedResult& r : runs) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& [k, ap] : r.ap_by_k.at(name)) {
        lo = std::min(lo, ap);
        hi = std::max(hi, ap);
      }
      spread.push_back(hi - lo);
      gain.push_back(hi - r.ap_full.at(name));
    }
    k_ok = k_ok && median(spread) <= median(gain);
    k_detail += name + " spread " + num(median(spread)) + " gain " + num(median(gain)) + "; ";
  }
  out.push_back({k_ok, k_detail});
  return out;
}

// ---------------------------------------------------------------- 9-10

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs every subcommand into `dir`; returns the first failing command or "".
std::string cli_pipeline(const std::string& cli, const fs::path& dir, const std::string& cfg_args) {
  fs::create_directories(dir);
  const fs::path log = dir.parent_path() / (dir.filename().string() + ".log");
  const std::string d = "\"" + dir.string() + "\"";
  const std::vector<std::string> steps = {
      "synth " + cfg_args + " --out " + d + "/corpus",
      "train " + cfg_args + " --corpus " + d + "/corpus --out " + d + "/ck/pre.ck",
      "finetune " + cfg_args + " --corpus " + d + "/corpus --checkpoint " + d + "/ck/pre.ck --out " + d +
          "/ft/ft.ck",
      "eval " + cfg_args + " --corpus " + d + "/corpus --checkpoint " + d + "/ft/ft.ck --out " + d + "/eval",
  };
  for (const std::string& s : steps) {
    if (run_cli(cli, s, log) != 0) return s;
  }
  return "";
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  const fs::path cfg_path = work / "small.cfg";
  std::ofstream(cfg_path) << "seed = 7\nn_train = 12\nn_val = 4\nn_ood_eval = 4\nheight = 32\nwidth = 64\n"
                             "train_epochs = 2\nepochs = 2\nbatch_size = 4\nmix_probability = 0.5\n";
  const std::string args = "--config \"" + cfg_path.string() + "\"";
  for (const char* run : {"run1", "run2"}) {
    const fs::path dir = work / run;
    fs::remove_all(dir);
    const std::string failed = cli_pipeline(cli, dir, args);
    if (!failed.empty()) return {false, std::string(run) + " command failed: " + failed};
    const std::string d = "\"" + dir.string() + "\"";
    if (run_cli(cli,
                "ablate-k " + args + " --k-list 3,5 --corpus " + d + "/corpus --checkpoint " + d +
                    "/ck/pre.ck --out " + d + "/ablate",
                work / (std::string(run) + ".log")) != 0) {
      return {false, std::string(run) + " ablate-k failed"};
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(work / "run1")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), work / "run1");
    const fs::path other = work / "run2" / rel;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) return {false, "differs: " + rel.string()};
    ++files;
  }
  return {files > 0, std::to_string(files) + " output files bit-identical across reruns"};
}

Outcome performance(const std::string& cli, const fs::path& work, bool run_pipeline) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  EvalPair p;
  p.scores.resize(kPerfPairs);
  p.truth.resize(kPerfPairs);
  for (std::size_t i = 0; i < kPerfPairs; ++i) {
    p.truth[i] = (gen() % 20 == 0) ? 1 : 0;
    p.scores[i] = normal(gen) + (p.truth[i] ? 1.0 : 0.0);
  }
  const auto t0 = Clock::now();
  const RankingMetrics m = ranking_metrics(p);
  const double metric_s = seconds_since(t0);
  bool ok = metric_s < kPerfSeconds && m.auroc > 0.5;
  std::string detail = "1e7 pairs in " + num(metric_s, 2) + " s";
  if (run_pipeline) {
    const auto t1 = Clock::now();
    const fs::path dir = work / "default";
    fs::remove_all(dir);
    const std::string failed = cli_pipeline(cli, dir, "");
    const double pipe_s = seconds_since(t1);
    ok = ok && failed.empty() && pipe_s < kPipelineSeconds;
    detail += ", default pipeline " + (failed.empty() ? num(pipe_s, 0) + " s" : "failed at: " + failed);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oodseg acceptance suite"};
  std::string cli = OODSEG_CLI_PATH;
  std::string work = (fs::temp_directory_path() / "oodseg_acceptance").string();
  std::vector<int> only;
  int seeds = 5;
  bool skip_pipeline = false;
  app.add_option("--cli", cli, "path to the oodseg binary");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "criteria to run (default: all)");
  app.add_option("--seeds", seeds, "seeds for the directional criteria");
  app.add_flag("--skip-pipeline", skip_pipeline, "skip the timed default pipeline run");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  const std::map<int, std::string> names = {
      {1, "gradient suite"},         {2, "closed-form losses"},    {3, "metric oracle equivalence"},
      {4, "fine-tuning gains"},      {5, "style alignment"},       {6, "max-min FPR95"},
      {7, "mIoU preservation"},      {8, "K robustness"},          {9, "CLI determinism"},
      {10, "performance"}};
  std::map<int, Outcome> results;
  auto record = [&](int c, Outcome o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c << " " << names.at(c) << ": " << o.detail << "\n"
              << std::flush;
    results[c] = std::move(o);
  };

  if (wanted(1)) record(1, gradient_suite());
  if (wanted(2)) record(2, closed_forms());
  if (wanted(3)) record(3, metric_oracle());
  if (wanted(4) || wanted(5) || wanted(6) || wanted(7) || wanted(8)) {
    const auto d = directional(seeds);
    for (int c = 4; c <= 8; ++c) {
      if (wanted(c)) record(c, d[c - 4]);
    }
  }
  if (wanted(9)) record(9, determinism(cli, work));
  if (wanted(10)) record(10, performance(cli, work, !skip_pipeline));

  int failed = 0;
  for (const auto& [c, o] : results) failed += o.pass ? 0 : 1;
  std::cout << "\nsummary:";
  for (const auto& [c, o] : results) std::cout << " " << c << "=" << (o.pass ? "PASS" : "FAIL");
  std::cout << "\n";
  return failed == 0 ? 0 : 1;
}
