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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oodseg/augment.hpp"
#include "oodseg/imagery.hpp"
#include "oodseg/oodloss.hpp"
#include "oodseg/synth.hpp"

namespace oodseg {

// Dense feature map, row-major, channel-interleaved (HWC).
struct Tensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0) {}
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Fixed bilinear x4 upsampling. Output pixel y samples the input at y / 4
// (knots at y = 4i), clamped at the far edge. Linear in the input.
LogitMap bilinear_upsample(const LogitMap& low, int out_height, int out_width);
// Transpose of bilinear_upsample: accumulates A^T * grad_high into grad_low.
void bilinear_upsample_backward(std::span<const double> grad_high, int out_height, int out_width, int low_height,
                                int low_width, int classes, std::span<double> grad_low);

// Nearest-neighbour label downsampling: output (i, j) takes the input at
// (factor*i + 1, factor*j + 1). Sentinels pass through unchanged.
LabelMap downsample_labels(const LabelMap& labels, int factor = 4);

struct ForwardResult {
  LogitMap logits_pre;
  LogitMap logits_post;
};

class SegNet;

// Activations kept for a backward pass. Bound to the parameter version it
// was produced with; backward() on a stale cache throws StateError.
struct ForwardCache {
  std::uint64_t net_version = 0;
  bool valid = false;
  Image input;
  Tensor act1;  // post-ReLU outputs of the three backbone convs
  Tensor act2;
  Tensor act3;
  int out_height = 0;
  int out_width = 0;
};

// conv3x3(3->16, s2)+ReLU, conv3x3(16->32, s2)+ReLU, conv3x3(32->32, s1)+ReLU,
// conv1x1(32->C) head, then fixed bilinear x4 upsampling.
class SegNet {
 public:
  static constexpr int kDownsample = 4;
  static constexpr int kFeatureChannels = 32;
  static constexpr const char* kArchitectureTag = "tinyseg-v1";

  explicit SegNet(int classes = kSceneClasses);

  int classes() const { return classes_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::size_t backbone_parameter_count() const { return head_offset_; }

  std::span<const double> parameters() const { return params_; }
  // Any mutable access bumps the version and invalidates forward caches.
  std::span<double> mutable_parameters();
  std::span<const double> backbone_parameters() const { return std::span(params_).first(head_offset_); }
  std::span<const double> head_parameters() const { return std::span(params_).subspan(head_offset_); }
  std::uint64_t version() const { return version_; }

  // He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  // Image dimensions must be divisible by 4.
  ForwardResult forward(const Image& image, ForwardCache* cache = nullptr) const;
  // Backbone features only (H/4 x W/4 x 32).
  Tensor features(const Image& image) const;
  // Head on precomputed features; returns pre-upsampling logits.
  LogitMap head(const Tensor& features) const;

  // Reverse-mode gradients. grad_pre / grad_post are d(loss)/d(logits) for
  // the pre- and post-upsampling maps (either may be empty). Gradients are
  // accumulated into `param_grads` (size parameter_count()). With
  // freeze_backbone the backbone entries are left untouched.
  void backward(const ForwardCache& cache, std::span<const double> grad_pre, std::span<const double> grad_post,
                std::span<double> param_grads, bool freeze_backbone) const;
  // Head-only backward from cached features.
  void head_backward(const Tensor& features, std::span<const double> grad_pre, std::span<double> param_grads) const;

  // FNV-1a over the raw little-endian parameter bytes.
  std::uint64_t backbone_hash() const;
  std::uint64_t parameter_hash() const;

 private:
  struct Conv {
    int in_ch, out_ch, kernel, stride;
    std::size_t weight_offset, bias_offset;
  };

  Tensor conv_forward(const Conv& conv, const Tensor& input) const;
  void conv_backward(const Conv& conv, const Tensor& input, const Tensor& grad_out, std::span<double> param_grads,
                     Tensor* grad_input) const;

  int classes_;
  std::vector<Conv> convs_;  // backbone + head (last)
  std::size_t head_offset_ = 0;
  std::vector<double> params_;
  std::uint64_t version_ = 1;
};

Tensor image_to_tensor(const Image& image);

struct AdamWConfig {
  double base_lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double poly_power = 0.9;
  std::int64_t total_steps = 1;
};

// AdamW with decoupled weight decay and polynomial learning-rate decay.
class AdamW {
 public:
  AdamW() = default;
  AdamW(AdamWConfig cfg, std::size_t size);

  // lr after `completed_steps` updates: base_lr * (1 - t / total)^power.
  double learning_rate(std::int64_t completed_steps) const;
  double current_learning_rate() const { return learning_rate(step_); }

  // One update of `params` (same length as the state) from `grads`.
  void step(std::span<double> params, std::span<const double> grads);

  const AdamWConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }
  void restore(std::int64_t step, std::vector<double> m, std::vector<double> v);

 private:
  AdamWConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t step_ = 0;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double base_lr = 1e-5;
  double weight_decay = 0.01;
  LossConfig loss;
  MixConfig mix;
  bool freeze_backbone = true;
};

struct TrainLogRow {
  int epoch = 0;
  double lr = 0.0;
  double loss_id = 0.0;
  double loss_ood = 0.0;
  double val_miou = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  AdamW optimizer;
  // Index range of the parameters the optimizer covers.
  std::size_t optimized_offset = 0;
};

std::string train_log_csv(const std::vector<TrainLogRow>& log);

// Full training of every parameter with the ID cross-entropy only.
// Throws ArgumentError on an empty train split.
TrainResult train(SegNet& net, const Corpus& corpus, const TrainConfig& cfg);

// Head-only fine-tuning with combined_loss and per-sample anomaly_mix.
// Requires cfg.freeze_backbone.
TrainResult finetune(SegNet& net, const Corpus& corpus, const TrainConfig& cfg, const ObjectSource& source,
                     const StyleAligner& aligner);
TrainResult finetune(SegNet& net, const Corpus& corpus, const TrainConfig& cfg, const ObjectSource& source);

// Argmax over post-upsampling logits.
LabelMap predict_labels(const LogitMap& logits);

// Mean IoU of the net on a split.
double split_miou(const SegNet& net, const Corpus& corpus, Split split);

// Binary checkpoint: "OODS", u32 version, architecture tag, u32 classes,
// u64 parameter count, f64 parameters, optional optimizer state. All
// little-endian.
void save_checkpoint(const SegNet& net, const TrainResult* training, const std::filesystem::path& path);
struct Checkpoint {
  SegNet net;
  std::optional<AdamW> optimizer;
  std::size_t optimized_offset = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace oodseg
