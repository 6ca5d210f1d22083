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

#include "oodseg/segnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "oodseg/errors.hpp"
#include "oodseg/metrics.hpp"
#include "oodseg/rng.hpp"
#include "oodseg/simd.hpp"

namespace oodseg {
namespace {

constexpr char kCheckpointMagic[4] = {'O', 'O', 'D', 'S'};
constexpr std::uint32_t kCheckpointVersion = 1;

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

// grad *= (activation > 0)
void relu_mask(const Tensor& activation, Tensor& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (!(activation.data[i] > 0.0)) grad.data[i] = 0.0;
  }
}

struct UpsampleTap {
  int i0, i1;
  double frac;
};

std::vector<UpsampleTap> upsample_taps(int out_size, int in_size) {
  std::vector<UpsampleTap> taps(out_size);
  for (int y = 0; y < out_size; ++y) {
    const double src = static_cast<double>(y) / SegNet::kDownsample;
    int i0 = static_cast<int>(std::floor(src));
    double frac = src - i0;
    if (i0 >= in_size - 1) {
      i0 = in_size - 1;
      frac = 0.0;
    }
    taps[y] = {i0, std::min(i0 + 1, in_size - 1), frac};
  }
  return taps;
}

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void scalar(T v) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      auto raw = std::bit_cast<std::array<char, sizeof(T)>>(v);
      std::reverse(raw.begin(), raw.end());
      bytes(raw.data(), sizeof(T));
    } else {
      bytes(&v, sizeof(T));
    }
  }
  void f64s(std::span<const double> values) {
    for (double v : values) scalar(v);
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string name) : buf_(std::move(data)), name_(std::move(name)) {}
  void bytes(void* p, std::size_t n) {
    if (buf_.size() - pos_ < n) throw TruncationError(name_ + ": truncated checkpoint");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T scalar() {
    std::array<char, sizeof(T)> raw;
    bytes(raw.data(), sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }
  std::vector<double> f64s(std::size_t n) {
    if ((buf_.size() - pos_) / 8 < n) throw TruncationError(name_ + ": truncated checkpoint");
    std::vector<double> out(n);
    for (double& v : out) v = scalar<double>();
    return out;
  }

 private:
  std::vector<char> buf_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> order, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::int64_t steps_per_epoch(std::size_t samples, int batch_size) {
  return static_cast<std::int64_t>((samples + batch_size - 1) / batch_size);
}

}  // namespace

Tensor image_to_tensor(const Image& image) {
  Tensor t(image.height(), image.width(), Image::kChannels);
  std::copy(image.data().begin(), image.data().end(), t.data.begin());
  return t;
}

LogitMap bilinear_upsample(const LogitMap& low, int out_height, int out_width) {
  const int classes = low.classes();
  const auto ty = upsample_taps(out_height, low.height());
  const auto tx = upsample_taps(out_width, low.width());
  LogitMap high(out_height, out_width, classes);
  for (int y = 0; y < out_height; ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const auto [x0, x1, fx] = tx[x];
      const double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
      for (int c = 0; c < classes; ++c) {
        high.at(y, x, c) = w00 * low.at(y0, x0, c) + w01 * low.at(y0, x1, c) + w10 * low.at(y1, x0, c) +
                           w11 * low.at(y1, x1, c);
      }
    }
  }
  return high;
}

void bilinear_upsample_backward(std::span<const double> grad_high, int out_height, int out_width, int low_height,
                                int low_width, int classes, std::span<double> grad_low) {
  if (grad_high.size() != static_cast<std::size_t>(out_height) * out_width * classes ||
      grad_low.size() != static_cast<std::size_t>(low_height) * low_width * classes) {
    throw ArgumentError("upsample gradient shape mismatch");
  }
  const auto ty = upsample_taps(out_height, low_height);
  const auto tx = upsample_taps(out_width, low_width);
  auto low_at = [&](int r, int c, int k) -> double& {
    return grad_low[(static_cast<std::size_t>(r) * low_width + c) * classes + k];
  };
  for (int y = 0; y < out_height; ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const auto [x0, x1, fx] = tx[x];
      const double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
      const double* g = grad_high.data() + (static_cast<std::size_t>(y) * out_width + x) * classes;
      for (int c = 0; c < classes; ++c) {
        low_at(y0, x0, c) += w00 * g[c];
        low_at(y0, x1, c) += w01 * g[c];
        low_at(y1, x0, c) += w10 * g[c];
        low_at(y1, x1, c) += w11 * g[c];
      }
    }
  }
}

LabelMap downsample_labels(const LabelMap& labels, int factor) {
  if (factor < 1 || labels.height() % factor != 0 || labels.width() % factor != 0) {
    throw ArgumentError("label map dimensions not divisible by the downsampling factor");
  }
  const int off = std::min(1, factor - 1);
  LabelMap out(labels.height() / factor, labels.width() / factor);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out.at(r, c) = labels.at(factor * r + off, factor * c + off);
  }
  return out;
}

SegNet::SegNet(int classes) : classes_(classes) {
  if (classes < 2 || classes > kMaxClasses) throw ArgumentError("SegNet needs 2..254 classes");
  std::size_t offset = 0;
  auto add = [&](int in_ch, int out_ch, int kernel, int stride) {
    Conv conv{in_ch, out_ch, kernel, stride, offset, 0};
    offset += static_cast<std::size_t>(out_ch) * kernel * kernel * in_ch;
    conv.bias_offset = offset;
    offset += out_ch;
    convs_.push_back(conv);
  };
  add(3, 16, 3, 2);
  add(16, 32, 3, 2);
  add(32, kFeatureChannels, 3, 1);
  head_offset_ = offset;
  add(kFeatureChannels, classes, 1, 1);
  params_.assign(offset, 0.0);
}

std::span<double> SegNet::mutable_parameters() {
  ++version_;
  return params_;
}

void SegNet::initialize(std::uint64_t seed) {
  ++version_;
  Rng rng(seed);
  for (const Conv& conv : convs_) {
    const double fan_in = static_cast<double>(conv.kernel * conv.kernel * conv.in_ch);
    const bool is_head = conv.weight_offset == head_offset_;
    const double stddev = std::sqrt((is_head ? 1.0 : 2.0) / fan_in);
    for (std::size_t i = conv.weight_offset; i < conv.bias_offset; ++i) params_[i] = stddev * rng.normal();
    for (int i = 0; i < conv.out_ch; ++i) params_[conv.bias_offset + i] = 0.0;
  }
}

Tensor SegNet::conv_forward(const Conv& conv, const Tensor& input) const {
  const int pad = conv.kernel / 2;
  const int oh = (input.height + 2 * pad - conv.kernel) / conv.stride + 1;
  const int ow = (input.width + 2 * pad - conv.kernel) / conv.stride + 1;
  const std::size_t patch_len = static_cast<std::size_t>(conv.kernel) * conv.kernel * conv.in_ch;
  const auto& kern = simd::kernels();
  const double* weights = params_.data() + conv.weight_offset;
  const double* bias = params_.data() + conv.bias_offset;
  Tensor out(oh, ow, conv.out_ch);
  std::vector<double> patch(patch_len);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* dst = patch.data();
      for (int ky = 0; ky < conv.kernel; ++ky) {
        const int iy = oy * conv.stride - pad + ky;
        for (int kx = 0; kx < conv.kernel; ++kx, dst += conv.in_ch) {
          const int ix = ox * conv.stride - pad + kx;
          if (iy < 0 || iy >= input.height || ix < 0 || ix >= input.width) {
            std::fill(dst, dst + conv.in_ch, 0.0);
          } else {
            const double* src = input.data.data() + (static_cast<std::size_t>(iy) * input.width + ix) * conv.in_ch;
            std::copy(src, src + conv.in_ch, dst);
          }
        }
      }
      double* o = out.data.data() + (static_cast<std::size_t>(oy) * ow + ox) * conv.out_ch;
      for (int co = 0; co < conv.out_ch; ++co) {
        o[co] = bias[co] + kern.dot(weights + co * patch_len, patch.data(), patch_len);
      }
    }
  }
  return out;
}

void SegNet::conv_backward(const Conv& conv, const Tensor& input, const Tensor& grad_out,
                           std::span<double> param_grads, Tensor* grad_input) const {
  const int pad = conv.kernel / 2;
  const std::size_t patch_len = static_cast<std::size_t>(conv.kernel) * conv.kernel * conv.in_ch;
  const auto& kern = simd::kernels();
  const double* weights = params_.data() + conv.weight_offset;
  double* gw = param_grads.data() + conv.weight_offset;
  double* gb = param_grads.data() + conv.bias_offset;
  std::vector<double> patch(patch_len);
  std::vector<double> dpatch(patch_len);
  for (int oy = 0; oy < grad_out.height; ++oy) {
    for (int ox = 0; ox < grad_out.width; ++ox) {
      const double* g = grad_out.data.data() + (static_cast<std::size_t>(oy) * grad_out.width + ox) * conv.out_ch;
      bool any = false;
      for (int co = 0; co < conv.out_ch && !any; ++co) any = g[co] != 0.0;
      if (!any) continue;
      double* dst = patch.data();
      for (int ky = 0; ky < conv.kernel; ++ky) {
        const int iy = oy * conv.stride - pad + ky;
        for (int kx = 0; kx < conv.kernel; ++kx, dst += conv.in_ch) {
          const int ix = ox * conv.stride - pad + kx;
          if (iy < 0 || iy >= input.height || ix < 0 || ix >= input.width) {
            std::fill(dst, dst + conv.in_ch, 0.0);
          } else {
            const double* src = input.data.data() + (static_cast<std::size_t>(iy) * input.width + ix) * conv.in_ch;
            std::copy(src, src + conv.in_ch, dst);
          }
        }
      }
      if (grad_input != nullptr) std::fill(dpatch.begin(), dpatch.end(), 0.0);
      for (int co = 0; co < conv.out_ch; ++co) {
        if (g[co] == 0.0) continue;
        gb[co] += g[co];
        kern.axpy(g[co], patch.data(), gw + co * patch_len, patch_len);
        if (grad_input != nullptr) kern.axpy(g[co], weights + co * patch_len, dpatch.data(), patch_len);
      }
      if (grad_input == nullptr) continue;
      const double* src = dpatch.data();
      for (int ky = 0; ky < conv.kernel; ++ky) {
        const int iy = oy * conv.stride - pad + ky;
        for (int kx = 0; kx < conv.kernel; ++kx, src += conv.in_ch) {
          const int ix = ox * conv.stride - pad + kx;
          if (iy < 0 || iy >= input.height || ix < 0 || ix >= input.width) continue;
          double* gi = grad_input->data.data() + (static_cast<std::size_t>(iy) * input.width + ix) * conv.in_ch;
          for (int ci = 0; ci < conv.in_ch; ++ci) gi[ci] += src[ci];
        }
      }
    }
  }
}

Tensor SegNet::features(const Image& image) const {
  if (image.height() % kDownsample != 0 || image.width() % kDownsample != 0 || image.height() == 0 ||
      image.width() == 0) {
    throw ArgumentError("image dimensions must be positive multiples of 4");
  }
  Tensor x = conv_forward(convs_[0], image_to_tensor(image));
  relu_inplace(x);
  x = conv_forward(convs_[1], x);
  relu_inplace(x);
  x = conv_forward(convs_[2], x);
  relu_inplace(x);
  return x;
}

LogitMap SegNet::head(const Tensor& feats) const {
  if (feats.channels != kFeatureChannels) throw ArgumentError("feature channel mismatch");
  const Conv& conv = convs_.back();
  const auto& kern = simd::kernels();
  const double* weights = params_.data() + conv.weight_offset;
  const double* bias = params_.data() + conv.bias_offset;
  std::vector<double> logits(feats.pixel_count() * classes_);
  for (std::size_t p = 0; p < feats.pixel_count(); ++p) {
    const double* f = feats.data.data() + p * kFeatureChannels;
    for (int c = 0; c < classes_; ++c) {
      logits[p * classes_ + c] = bias[c] + kern.dot(weights + c * kFeatureChannels, f, kFeatureChannels);
    }
  }
  return LogitMap(feats.height, feats.width, classes_, std::move(logits));
}

ForwardResult SegNet::forward(const Image& image, ForwardCache* cache) const {
  if (image.height() % kDownsample != 0 || image.width() % kDownsample != 0 || image.height() == 0 ||
      image.width() == 0) {
    throw ArgumentError("image dimensions must be positive multiples of 4");
  }
  Tensor a1 = conv_forward(convs_[0], image_to_tensor(image));
  relu_inplace(a1);
  Tensor a2 = conv_forward(convs_[1], a1);
  relu_inplace(a2);
  Tensor a3 = conv_forward(convs_[2], a2);
  relu_inplace(a3);
  ForwardResult result;
  result.logits_pre = head(a3);
  result.logits_post = bilinear_upsample(result.logits_pre, image.height(), image.width());
  if (cache != nullptr) {
    cache->net_version = version_;
    cache->valid = true;
    cache->input = image;
    cache->act1 = std::move(a1);
    cache->act2 = std::move(a2);
    cache->act3 = std::move(a3);
    cache->out_height = image.height();
    cache->out_width = image.width();
  }
  return result;
}

void SegNet::head_backward(const Tensor& feats, std::span<const double> grad_pre,
                           std::span<double> param_grads) const {
  if (param_grads.size() != params_.size()) throw ArgumentError("gradient buffer size mismatch");
  if (grad_pre.size() != feats.pixel_count() * classes_) throw ArgumentError("head gradient shape mismatch");
  const Conv& conv = convs_.back();
  const auto& kern = simd::kernels();
  double* gw = param_grads.data() + conv.weight_offset;
  double* gb = param_grads.data() + conv.bias_offset;
  for (std::size_t p = 0; p < feats.pixel_count(); ++p) {
    const double* f = feats.data.data() + p * kFeatureChannels;
    const double* g = grad_pre.data() + p * classes_;
    for (int c = 0; c < classes_; ++c) {
      if (g[c] == 0.0) continue;
      gb[c] += g[c];
      kern.axpy(g[c], f, gw + c * kFeatureChannels, kFeatureChannels);
    }
  }
}

void SegNet::backward(const ForwardCache& cache, std::span<const double> grad_pre,
                      std::span<const double> grad_post, std::span<double> param_grads,
                      bool freeze_backbone) const {
  if (!cache.valid || cache.net_version != version_) throw StateError("forward cache is stale");
  if (param_grads.size() != params_.size()) throw ArgumentError("gradient buffer size mismatch");
  const Tensor& a3 = cache.act3;
  const std::size_t pre_size = a3.pixel_count() * classes_;
  std::vector<double> g_pre(pre_size, 0.0);
  if (!grad_pre.empty()) {
    if (grad_pre.size() != pre_size) throw ArgumentError("pre-upsampling gradient shape mismatch");
    std::copy(grad_pre.begin(), grad_pre.end(), g_pre.begin());
  }
  if (!grad_post.empty()) {
    bilinear_upsample_backward(grad_post, cache.out_height, cache.out_width, a3.height, a3.width, classes_, g_pre);
  }
  head_backward(a3, g_pre, param_grads);
  if (freeze_backbone) return;

  // d(loss)/d(features) through the 1x1 head.
  const Conv& head_conv = convs_.back();
  const auto& kern = simd::kernels();
  Tensor g3(a3.height, a3.width, kFeatureChannels);
  for (std::size_t p = 0; p < a3.pixel_count(); ++p) {
    const double* g = g_pre.data() + p * classes_;
    double* gf = g3.data.data() + p * kFeatureChannels;
    for (int c = 0; c < classes_; ++c) {
      if (g[c] == 0.0) continue;
      kern.axpy(g[c], params_.data() + head_conv.weight_offset + c * kFeatureChannels, gf, kFeatureChannels);
    }
  }
  relu_mask(a3, g3);
  Tensor g2(cache.act2.height, cache.act2.width, cache.act2.channels);
  conv_backward(convs_[2], cache.act2, g3, param_grads, &g2);
  relu_mask(cache.act2, g2);
  Tensor g1(cache.act1.height, cache.act1.width, cache.act1.channels);
  conv_backward(convs_[1], cache.act1, g2, param_grads, &g1);
  relu_mask(cache.act1, g1);
  conv_backward(convs_[0], image_to_tensor(cache.input), g1, param_grads, nullptr);
}

std::uint64_t SegNet::backbone_hash() const { return fnv1a(backbone_parameters()); }
std::uint64_t SegNet::parameter_hash() const { return fnv1a(params_); }

AdamW::AdamW(AdamWConfig cfg, std::size_t size) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {
  if (cfg_.total_steps < 1) throw ArgumentError("total_steps must be >= 1");
  if (!(cfg_.base_lr >= 0.0)) throw ArgumentError("learning rate must be non-negative");
}

double AdamW::learning_rate(std::int64_t completed_steps) const {
  const double progress = static_cast<double>(completed_steps) / static_cast<double>(cfg_.total_steps);
  return cfg_.base_lr * std::pow(std::max(0.0, 1.0 - progress), cfg_.poly_power);
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ArgumentError("AdamW shape mismatch");
  const double lr = learning_rate(step_);
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps)) + lr * cfg_.weight_decay * params[i];
  }
}

void AdamW::restore(std::int64_t step, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw ArgumentError("optimizer state size mismatch");
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,lr,L_id,L_ood,val_mIoU\n";
  for (const TrainLogRow& row : log) {
    out << row.epoch << ',' << row.lr << ',' << row.loss_id << ',' << row.loss_ood << ',' << row.val_miou << "\n";
  }
  return out.str();
}

LabelMap predict_labels(const LogitMap& logits) {
  LabelMap out(logits.height(), logits.width());
  auto data = out.data();
  for (std::size_t p = 0; p < logits.pixel_count(); ++p) {
    const auto x = logits.pixel(p);
    data[p] = static_cast<std::uint8_t>(std::max_element(x.begin(), x.end()) - x.begin());
  }
  return out;
}

double split_miou(const SegNet& net, const Corpus& corpus, Split split) {
  std::vector<LabelMap> preds, truths;
  for (std::size_t i : corpus.indices(split)) {
    preds.push_back(predict_labels(net.forward(corpus.samples[i].image).logits_post));
    truths.push_back(corpus.samples[i].labels);
  }
  if (preds.empty()) return 0.0;
  return miou(preds, truths, net.classes()).miou;
}

TrainResult train(SegNet& net, const Corpus& corpus, const TrainConfig& cfg) {
  const auto train_idx = corpus.indices(Split::kTrain);
  if (train_idx.empty()) throw ArgumentError("corpus has no training samples");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ArgumentError("epochs and batch_size must be >= 1");

  AdamWConfig opt_cfg;
  opt_cfg.base_lr = cfg.base_lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  opt_cfg.total_steps = steps_per_epoch(train_idx.size(), cfg.batch_size) * cfg.epochs;
  TrainResult result{{}, AdamW(opt_cfg, net.parameter_count()), 0};

  std::vector<double> grads(net.parameter_count());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double epoch_lr = result.optimizer.current_learning_rate();
    const auto order = shuffled(train_idx, mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<double> batch_losses;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<ForwardCache> caches(end - start);
      std::vector<LogitMap> post;
      std::vector<LabelMap> labels;
      for (std::size_t b = start; b < end; ++b) {
        post.push_back(net.forward(corpus.samples[order[b]].image, &caches[b - start]).logits_post);
        labels.push_back(corpus.samples[order[b]].labels);
      }
      const BatchLossResult loss = id_cross_entropy(post, labels);
      batch_losses.push_back(loss.value);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t b = 0; b < caches.size(); ++b) {
        net.backward(caches[b], {}, loss.grads[b], grads, false);
      }
      result.optimizer.step(net.mutable_parameters(), grads);
    }
    TrainLogRow row;
    row.epoch = epoch + 1;
    row.lr = epoch_lr;
    row.loss_id = pairwise_sum(batch_losses) / static_cast<double>(batch_losses.size());
    row.val_miou = corpus.indices(Split::kVal).empty() ? 0.0 : split_miou(net, corpus, Split::kVal);
    result.log.push_back(row);
  }
  return result;
}

TrainResult finetune(SegNet& net, const Corpus& corpus, const TrainConfig& cfg, const ObjectSource& source,
                     const StyleAligner& aligner) {
  if (!cfg.freeze_backbone) throw ArgumentError("fine-tuning requires a frozen backbone");
  const auto train_idx = corpus.indices(Split::kTrain);
  if (train_idx.empty()) throw ArgumentError("corpus has no training samples");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ArgumentError("epochs and batch_size must be >= 1");
  cfg.loss.validate();
  cfg.mix.validate();

  const std::size_t head_offset = net.backbone_parameter_count();
  const std::size_t head_size = net.parameter_count() - head_offset;
  AdamWConfig opt_cfg;
  opt_cfg.base_lr = cfg.base_lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  opt_cfg.total_steps = steps_per_epoch(train_idx.size(), cfg.batch_size) * cfg.epochs;
  TrainResult result{{}, AdamW(opt_cfg, head_size), head_offset};

  // The backbone is frozen, so clean-sample features can be computed once.
  std::vector<Tensor> train_features(corpus.samples.size());
  for (std::size_t i : train_idx) train_features[i] = net.features(corpus.samples[i].image);
  const auto val_idx = corpus.indices(Split::kVal);
  std::vector<Tensor> val_features;
  for (std::size_t i : val_idx) val_features.push_back(net.features(corpus.samples[i].image));

  std::vector<double> grads(net.parameter_count());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double epoch_lr = result.optimizer.current_learning_rate();
    const auto order = shuffled(train_idx, mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<double> id_losses, ood_losses;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor> mixed_features;
      std::vector<const Tensor*> feats;
      std::vector<LogitMap> pre, post;
      std::vector<LabelMap> labels_full, labels_pre;
      mixed_features.reserve(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const std::uint64_t mix_seed_value =
            mix_seed(cfg.seed ^ 0x5eedf00dULL, static_cast<std::uint64_t>(epoch) * 1000003ULL + idx);
        MixOutcome mixed = anomaly_mix_traced(corpus.samples[idx], cfg.mix, source, mix_seed_value, aligner);
        if (mixed.mixed) {
          mixed_features.push_back(net.features(mixed.sample.image));
          feats.push_back(&mixed_features.back());
        } else {
          feats.push_back(&train_features[idx]);
        }
        pre.push_back(net.head(*feats.back()));
        post.push_back(bilinear_upsample(pre.back(), mixed.sample.image.height(), mixed.sample.image.width()));
        labels_pre.push_back(downsample_labels(mixed.sample.labels, SegNet::kDownsample));
        labels_full.push_back(std::move(mixed.sample.labels));
      }
      const CombinedLoss loss = combined_loss(pre, post, labels_full, labels_pre, cfg.loss);
      id_losses.push_back(loss.id.value);
      ood_losses.push_back(loss.ood.value);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t b = 0; b < pre.size(); ++b) {
        std::vector<double> g_pre = loss.grad_pre[b];
        bilinear_upsample_backward(loss.id.grads[b], post[b].height(), post[b].width(), pre[b].height(),
                                   pre[b].width(), pre[b].classes(), g_pre);
        net.head_backward(*feats[b], g_pre, grads);
      }
      auto params = net.mutable_parameters();
      result.optimizer.step(params.subspan(head_offset), std::span<const double>(grads).subspan(head_offset));
    }
    TrainLogRow row;
    row.epoch = epoch + 1;
    row.lr = epoch_lr;
    row.loss_id = pairwise_sum(id_losses) / static_cast<double>(id_losses.size());
    row.loss_ood = pairwise_sum(ood_losses) / static_cast<double>(ood_losses.size());
    if (!val_idx.empty()) {
      std::vector<LabelMap> preds, truths;
      for (std::size_t v = 0; v < val_idx.size(); ++v) {
        const SegSample& s = corpus.samples[val_idx[v]];
        preds.push_back(predict_labels(bilinear_upsample(net.head(val_features[v]), s.image.height(),
                                                         s.image.width())));
        truths.push_back(s.labels);
      }
      row.val_miou = miou(preds, truths, net.classes()).miou;
    }
    result.log.push_back(row);
  }
  return result;
}

TrainResult finetune(SegNet& net, const Corpus& corpus, const TrainConfig& cfg, const ObjectSource& source) {
  return finetune(net, corpus, cfg, source, MomentMatchAligner{});
}

void save_checkpoint(const SegNet& net, const TrainResult* training, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kCheckpointMagic, 4);
  w.scalar<std::uint32_t>(kCheckpointVersion);
  const std::string tag = SegNet::kArchitectureTag;
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(tag.size()));
  w.bytes(tag.data(), tag.size());
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(net.classes()));
  w.scalar<std::uint64_t>(net.parameter_count());
  w.f64s(net.parameters());
  w.scalar<std::uint8_t>(training != nullptr ? 1 : 0);
  if (training != nullptr) {
    const AdamW& opt = training->optimizer;
    const AdamWConfig& c = opt.config();
    w.scalar<std::uint64_t>(training->optimized_offset);
    w.scalar<std::uint64_t>(opt.first_moment().size());
    w.scalar<std::int64_t>(opt.step_count());
    w.scalar<std::int64_t>(c.total_steps);
    for (double v : {c.base_lr, c.beta1, c.beta2, c.eps, c.weight_decay, c.poly_power}) w.scalar(v);
    w.f64s(opt.first_moment());
    w.f64s(opt.second_moment());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  ByteReader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(path.string() + ": bad checkpoint magic");
  if (r.scalar<std::uint32_t>() != kCheckpointVersion) throw FormatError(path.string() + ": unsupported version");
  const auto tag_len = r.scalar<std::uint32_t>();
  if (tag_len > 256) throw FormatError(path.string() + ": bad architecture tag");
  std::string tag(tag_len, '\0');
  r.bytes(tag.data(), tag_len);
  if (tag != SegNet::kArchitectureTag) throw FormatError(path.string() + ": unknown architecture " + tag);
  const auto classes = static_cast<int>(r.scalar<std::uint32_t>());
  if (classes < 2 || classes > kMaxClasses) throw FormatError(path.string() + ": bad class count");
  Checkpoint ck{SegNet(classes), std::nullopt, 0};
  const auto count = r.scalar<std::uint64_t>();
  if (count != ck.net.parameter_count()) throw FormatError(path.string() + ": parameter count mismatch");
  const auto params = r.f64s(count);
  std::copy(params.begin(), params.end(), ck.net.mutable_parameters().begin());
  if (r.scalar<std::uint8_t>() != 0) {
    ck.optimized_offset = r.scalar<std::uint64_t>();
    const auto size = r.scalar<std::uint64_t>();
    if (ck.optimized_offset + size != count) throw FormatError(path.string() + ": optimizer range mismatch");
    const auto step = r.scalar<std::int64_t>();
    AdamWConfig c;
    c.total_steps = r.scalar<std::int64_t>();
    c.base_lr = r.scalar<double>();
    c.beta1 = r.scalar<double>();
    c.beta2 = r.scalar<double>();
    c.eps = r.scalar<double>();
    c.weight_decay = r.scalar<double>();
    c.poly_power = r.scalar<double>();
    AdamW opt(c, size);
    auto m = r.f64s(size);
    auto v = r.f64s(size);
    opt.restore(step, std::move(m), std::move(v));
    ck.optimizer = std::move(opt);
  }
  return ck;
}

}  // namespace oodseg
