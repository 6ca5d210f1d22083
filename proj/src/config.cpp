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

#include "oodseg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oodseg/errors.hpp"
#include "oodseg/rng.hpp"
#include "oodseg/scores.hpp"

namespace oodseg {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ArgumentError("bad value '" + std::string(value) + "' for key " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ArgumentError("bad boolean '" + std::string(value) + "' for key " + std::string(key));
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    out.push_back(parse_number<int>(key, trim(value.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    value = value.substr(comma + 1);
  }
  return out;
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Seed streams for the pipeline stages.
constexpr std::uint64_t kPretrainStream = 102;
constexpr std::uint64_t kFinetuneStream = 103;

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "seed",          "n_train",          "n_val",        "n_ood_eval",   "height",
      "width",         "scene_style",      "max_eval_objects", "train_epochs", "train_batch_size",
      "train_lr",      "train_weight_decay", "epochs",     "batch_size",   "lr",
      "weight_decay",  "variant",          "k",            "s",            "gamma",
      "mix_probability", "style_align",    "max_objects",  "proxy_style",  "score",
      "k_list"};
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "n_train") n_train = parse_number<int>(key, value);
  else if (key == "n_val") n_val = parse_number<int>(key, value);
  else if (key == "n_ood_eval") n_ood_eval = parse_number<int>(key, value);
  else if (key == "height") height = parse_number<int>(key, value);
  else if (key == "width") width = parse_number<int>(key, value);
  else if (key == "scene_style") scene_style = value;
  else if (key == "max_eval_objects") max_eval_objects = parse_number<int>(key, value);
  else if (key == "train_epochs") train_epochs = parse_number<int>(key, value);
  else if (key == "train_batch_size") train_batch_size = parse_number<int>(key, value);
  else if (key == "train_lr") train_lr = parse_number<double>(key, value);
  else if (key == "train_weight_decay") train_weight_decay = parse_number<double>(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "weight_decay") weight_decay = parse_number<double>(key, value);
  else if (key == "variant") variant = value;
  else if (key == "k") k = parse_number<int>(key, value);
  else if (key == "s") s = parse_number<double>(key, value);
  else if (key == "gamma") gamma = parse_number<double>(key, value);
  else if (key == "mix_probability") mix_probability = parse_number<double>(key, value);
  else if (key == "style_align") style_align = parse_bool(key, value);
  else if (key == "max_objects") max_objects = parse_number<int>(key, value);
  else if (key == "proxy_style") proxy_style = value;
  else if (key == "score") score = value;
  else if (key == "k_list") k_list = parse_int_list(key, value);
  else throw ArgumentError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(what);
  };
  require(n_train >= 1 && n_val >= 1 && n_ood_eval >= 1, "corpus split sizes must be >= 1");
  require(height > 0 && width > 0 && height % 4 == 0 && width % 4 == 0, "height and width must be positive multiples of 4");
  require(max_eval_objects >= 1, "max_eval_objects must be >= 1");
  require(train_epochs >= 1 && epochs >= 1, "epochs must be >= 1");
  require(train_batch_size >= 1 && batch_size >= 1, "batch sizes must be >= 1");
  require(train_lr >= 0.0 && lr >= 0.0, "learning rates must be non-negative");
  require(train_weight_decay >= 0.0 && weight_decay >= 0.0, "weight decay must be non-negative");
  require(!k_list.empty(), "k_list must not be empty");
  for (int kk : k_list) require(kk >= 1, "k_list entries must be >= 1");
  require(score == "all" || is_score_name(score), "unknown score name");
  style_domain(scene_style);
  style_domain(proxy_style);
  parse_variant(variant);
  finetune_config().loss.validate();
  finetune_config().mix.validate();
}

CorpusSpec RunConfig::corpus_spec() const {
  CorpusSpec spec;
  spec.n_train = n_train;
  spec.n_val = n_val;
  spec.n_ood_eval = n_ood_eval;
  spec.height = height;
  spec.width = width;
  spec.style = style_domain(scene_style);
  spec.seed = seed;
  spec.max_eval_objects = max_eval_objects;
  return spec;
}

TrainConfig RunConfig::pretrain_config() const {
  TrainConfig cfg;
  cfg.epochs = train_epochs;
  cfg.batch_size = train_batch_size;
  cfg.seed = mix_seed(seed, kPretrainStream);
  cfg.base_lr = train_lr;
  cfg.weight_decay = train_weight_decay;
  cfg.freeze_backbone = false;
  return cfg;
}

TrainConfig RunConfig::finetune_config() const {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.seed = mix_seed(seed, kFinetuneStream);
  cfg.base_lr = lr;
  cfg.weight_decay = weight_decay;
  cfg.loss.k = k;
  cfg.loss.slope = s;
  cfg.loss.gamma = gamma;
  cfg.loss.variant = parse_variant(variant);
  cfg.mix.mix_probability = mix_probability;
  cfg.mix.style_align = style_align;
  cfg.mix.max_objects_per_scene = max_objects;
  cfg.freeze_backbone = true;
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_text(const RunConfig& c) {
  std::ostringstream out;
  std::string ks;
  for (std::size_t i = 0; i < c.k_list.size(); ++i) ks += (i ? "," : "") + std::to_string(c.k_list[i]);
  out << "seed=" << c.seed << "\n"
      << "n_train=" << c.n_train << "\n"
      << "n_val=" << c.n_val << "\n"
      << "n_ood_eval=" << c.n_ood_eval << "\n"
      << "height=" << c.height << "\n"
      << "width=" << c.width << "\n"
      << "scene_style=" << c.scene_style << "\n"
      << "max_eval_objects=" << c.max_eval_objects << "\n"
      << "train_epochs=" << c.train_epochs << "\n"
      << "train_batch_size=" << c.train_batch_size << "\n"
      << "train_lr=" << real(c.train_lr) << "\n"
      << "train_weight_decay=" << real(c.train_weight_decay) << "\n"
      << "epochs=" << c.epochs << "\n"
      << "batch_size=" << c.batch_size << "\n"
      << "lr=" << real(c.lr) << "\n"
      << "weight_decay=" << real(c.weight_decay) << "\n"
      << "variant=" << c.variant << "\n"
      << "k=" << c.k << "\n"
      << "s=" << real(c.s) << "\n"
      << "gamma=" << real(c.gamma) << "\n"
      << "mix_probability=" << real(c.mix_probability) << "\n"
      << "style_align=" << (c.style_align ? "on" : "off") << "\n"
      << "max_objects=" << c.max_objects << "\n"
      << "proxy_style=" << c.proxy_style << "\n"
      << "score=" << c.score << "\n"
      << "k_list=" << ks << "\n";
  return out.str();
}

}  // namespace oodseg
