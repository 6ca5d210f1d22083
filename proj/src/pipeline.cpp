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

#include "oodseg/pipeline.hpp"

#include <fstream>
#include <iostream>

#include "oodseg/errors.hpp"
#include "oodseg/rng.hpp"

namespace oodseg {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kInitStream = 101;

void ensure_dir(const fs::path& dir) {
  if (dir.empty() || fs::is_directory(dir)) return;
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw IoError("parent directory does not exist: " + parent.string());
  std::error_code ec;
  fs::create_directory(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
  write_text(dir.empty() ? fs::path(kConfigEcho) : dir / kConfigEcho, config_text(cfg));
}

fs::path parent_of(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

Checkpoint require_checkpoint(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw StateError("checkpoint not found: " + path.string());
  return load_checkpoint(path);
}

}  // namespace

const std::vector<std::string>& ablation_scores() {
  static const std::vector<std::string> names = {"max_logit", "energy", "max_min"};
  return names;
}

SegNet pretrain_net(const RunConfig& cfg, const Corpus& corpus, TrainResult* result) {
  SegNet net(kSceneClasses);
  net.initialize(mix_seed(cfg.seed, kInitStream));
  TrainResult r = train(net, corpus, cfg.pretrain_config());
  if (result != nullptr) *result = std::move(r);
  return net;
}

TrainResult finetune_net(SegNet& net, const RunConfig& cfg, const Corpus& corpus) {
  const ProxyObjectSource source(style_domain(cfg.proxy_style));
  return finetune(net, corpus, cfg.finetune_config(), source);
}

ClasswiseStats val_stats(const SegNet& net, const Corpus& corpus) {
  std::vector<LogitMap> logits;
  for (std::size_t i : corpus.indices(Split::kVal)) logits.push_back(net.forward(corpus.samples[i].image).logits_post);
  if (logits.empty()) throw ArgumentError("corpus has no validation samples");
  return fit_classwise_stats(logits);
}

std::vector<EvalReport> evaluate_scores(const SegNet& net, const Corpus& corpus,
                                        const std::vector<std::string>& scores, const ClasswiseStats& stats) {
  std::vector<LogitMap> logits;
  std::vector<LabelMap> truth;
  for (std::size_t i : corpus.indices(Split::kEval)) {
    logits.push_back(net.forward(corpus.samples[i].image).logits_post);
    truth.push_back(corpus.samples[i].labels);
  }
  std::vector<EvalReport> reports;
  for (const std::string& name : scores) reports.push_back(evaluate(logits, truth, name, &stats));
  return reports;
}

std::vector<std::string> selected_scores(const RunConfig& cfg) {
  if (cfg.score == "all") return score_names();
  if (!is_score_name(cfg.score)) throw ArgumentError("unknown score '" + cfg.score + "'");
  return {cfg.score};
}

Corpus cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  Corpus corpus = build_corpus(cfg.corpus_spec(), out_dir);
  echo_config(cfg, out_dir);
  return corpus;
}

void cmd_train(const RunConfig& cfg, const fs::path& corpus_dir, const fs::path& checkpoint) {
  cfg.validate();
  const Corpus corpus = load_corpus(corpus_dir);
  const fs::path dir = parent_of(checkpoint);
  ensure_dir(dir);
  TrainResult result;
  const SegNet net = pretrain_net(cfg, corpus, &result);
  save_checkpoint(net, &result, checkpoint);
  write_text(fs::path(checkpoint.string() + ".log.csv"), train_log_csv(result.log));
  echo_config(cfg, dir);
}

void cmd_finetune(const RunConfig& cfg, const fs::path& corpus_dir, const fs::path& checkpoint_in,
                  const fs::path& checkpoint_out) {
  cfg.validate();
  Checkpoint ck = require_checkpoint(checkpoint_in);
  const Corpus corpus = load_corpus(corpus_dir);
  const fs::path dir = parent_of(checkpoint_out);
  ensure_dir(dir);
  const TrainResult result = finetune_net(ck.net, cfg, corpus);
  save_checkpoint(ck.net, &result, checkpoint_out);
  write_text(fs::path(checkpoint_out.string() + ".log.csv"), train_log_csv(result.log));
  echo_config(cfg, dir);
}

std::vector<EvalReport> cmd_eval(const RunConfig& cfg, const fs::path& source, const fs::path& corpus_dir,
                                 const fs::path& out_dir) {
  cfg.validate();
  const std::vector<std::string> scores = selected_scores(cfg);
  const Corpus corpus = load_corpus(corpus_dir);
  const auto eval_idx = corpus.indices(Split::kEval);
  std::vector<LogitMap> logits;
  std::vector<LabelMap> truth;
  ClasswiseStats stats;
  if (fs::is_directory(source)) {
    for (std::size_t i : eval_idx) {
      logits.push_back(read_logit_dump(source / (corpus_file_stem(corpus.entries[i].id) + ".oodl")));
      truth.push_back(corpus.samples[i].labels);
    }
    if (logits.empty()) throw ArgumentError("corpus has no eval samples");
    stats = fit_classwise_stats(logits);
  } else {
    const Checkpoint ck = require_checkpoint(source);
    for (std::size_t i : eval_idx) {
      logits.push_back(ck.net.forward(corpus.samples[i].image).logits_post);
      truth.push_back(corpus.samples[i].labels);
    }
    stats = val_stats(ck.net, corpus);
  }
  ensure_dir(out_dir);
  ensure_dir(out_dir / "heatmaps");
  std::vector<EvalReport> reports;
  for (const std::string& name : scores) {
    EvalReport report = evaluate(logits, truth, name, &stats);
    write_text(out_dir / ("report_" + name + ".csv"), report_csv(report));
    write_text(out_dir / ("report_" + name + ".kv"), report_kv(report));
    const fs::path heat_dir = out_dir / "heatmaps" / name;
    ensure_dir(heat_dir);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      write_heatmap(compute_score(name, logits[j], &stats),
                    heat_dir / (corpus_file_stem(corpus.entries[eval_idx[j]].id) + ".pgm"));
    }
    reports.push_back(std::move(report));
  }
  write_text(out_dir / "reports.csv", report_table_csv(reports));
  write_text(out_dir / "confusion.csv", confusion_csv(reports.front().confusion));
  echo_config(cfg, out_dir);
  return reports;
}

std::string cmd_ablate_k(const RunConfig& cfg, const fs::path& corpus_dir, const fs::path& checkpoint_in,
                         const fs::path& out_dir) {
  cfg.validate();
  const Checkpoint ck = require_checkpoint(checkpoint_in);
  const Corpus corpus = load_corpus(corpus_dir);
  ensure_dir(out_dir);
  std::string csv = "k,score,auroc,ap,fpr95,miou\n";
  for (int k : cfg.k_list) {
    RunConfig run = cfg;
    run.k = k;
    SegNet net = ck.net;
    finetune_net(net, run, corpus);
    const ClasswiseStats stats = val_stats(net, corpus);
    const auto reports = evaluate_scores(net, corpus, ablation_scores(), stats);
    const std::string table = report_table_csv(reports);
    // Reuse the table rows, prefixed with K.
    std::size_t pos = table.find('\n') + 1;
    while (pos < table.size()) {
      const std::size_t nl = table.find('\n', pos);
      csv += std::to_string(k) + "," + table.substr(pos, nl - pos + 1);
      pos = nl + 1;
    }
  }
  write_text(out_dir / "ablate_k.csv", csv);
  echo_config(cfg, out_dir);
  return csv;
}

}  // namespace oodseg
