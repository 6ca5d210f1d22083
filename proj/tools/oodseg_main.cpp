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

// oodseg command-line driver: synth, train, finetune, eval, ablate-k.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oodseg/config.hpp"
#include "oodseg/errors.hpp"
#include "oodseg/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace oodseg;

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kState = 4, kInternal = 1 };

// Flag values collected before the config is resolved.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { items.emplace_back(key, v); }, help);
  }
};

RunConfig resolve(const std::string& config_path, const Overrides& overrides,
                  const std::vector<std::string>& sets) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides.items) cfg.set(k, v);
  cfg.validate();
  std::cerr << "# resolved config\n" << config_text(cfg);
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Anomaly-aware semantic segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out, corpus, checkpoint, dumps;
  std::vector<std::string> sets;
  Overrides ov;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value run config");
    sub->add_option("--set", sets, "extra key=value override (repeatable)");
    ov.add(sub, "--seed", "seed", "master seed");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  common(synth);
  synth->add_option("--out", out, "corpus directory")->required();

  CLI::App* train = app.add_subcommand("train", "pre-train the segmenter on the train split");
  common(train);
  train->add_option("--corpus", corpus, "corpus directory")->required();
  train->add_option("--out", out, "checkpoint to write")->required();
  ov.add(train, "--epochs", "train_epochs", "training epochs");
  ov.add(train, "--lr", "train_lr", "base learning rate");

  CLI::App* finetune = app.add_subcommand("finetune", "head-only fine-tuning with mixed-in OoD proxies");
  common(finetune);
  finetune->add_option("--corpus", corpus, "corpus directory")->required();
  finetune->add_option("--checkpoint", checkpoint, "pre-trained checkpoint")->required();
  finetune->add_option("--out", out, "checkpoint to write")->required();
  ov.add(finetune, "--variant", "variant", "topk_ovr | full_ovr | uniform_ce | energy_max");
  ov.add(finetune, "--k", "k", "top-K classes");
  ov.add(finetune, "--s", "s", "sigmoid slope");
  ov.add(finetune, "--gamma", "gamma", "OoD loss weight");
  ov.add(finetune, "--mix-prob", "mix_probability", "mixing probability");
  ov.add(finetune, "--style-align", "style_align", "on | off");
  ov.add(finetune, "--proxy-style", "proxy_style", "style domain of proxy objects");
  ov.add(finetune, "--epochs", "epochs", "fine-tuning epochs");
  ov.add(finetune, "--lr", "lr", "base learning rate");

  CLI::App* eval = app.add_subcommand("eval", "score the eval split and write reports");
  common(eval);
  eval->add_option("--corpus", corpus, "corpus directory")->required();
  auto* ck_opt = eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");
  auto* dump_opt = eval->add_option("--dumps", dumps, "directory of NNNN.oodl logit dumps");
  ck_opt->excludes(dump_opt);
  eval->add_option("--out", out, "report directory")->required();
  ov.add(eval, "--score", "score", "msp | entropy | max_logit | energy | std_ml | max_min | all");

  CLI::App* ablate = app.add_subcommand("ablate-k", "fine-tune and evaluate once per K");
  common(ablate);
  ablate->add_option("--corpus", corpus, "corpus directory")->required();
  ablate->add_option("--checkpoint", checkpoint, "pre-trained checkpoint")->required();
  ablate->add_option("--out", out, "report directory")->required();
  ov.add(ablate, "--k-list", "k_list", "comma-separated K values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const RunConfig cfg = resolve(config_path, ov, sets);
  if (synth->parsed()) {
    const Corpus c = cmd_synth(cfg, out);
    std::cout << "corpus " << out << ": " << c.indices(Split::kTrain).size() << " train, "
              << c.indices(Split::kVal).size() << " val, " << c.indices(Split::kEval).size() << " eval, "
              << c.objects.size() << " pasted objects\n";
  } else if (train->parsed()) {
    cmd_train(cfg, corpus, out);
    std::cout << "wrote " << out << "\n";
  } else if (finetune->parsed()) {
    cmd_finetune(cfg, corpus, checkpoint, out);
    std::cout << "wrote " << out << "\n";
  } else if (eval->parsed()) {
    if (checkpoint.empty() && dumps.empty()) throw ArgumentError("eval needs --checkpoint or --dumps");
    const auto reports = cmd_eval(cfg, checkpoint.empty() ? fs::path(dumps) : fs::path(checkpoint), corpus, out);
    std::cout << report_table_csv(reports);
  } else if (ablate->parsed()) {
    std::cout << cmd_ablate_k(cfg, corpus, checkpoint, out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kState;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
