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

#include <cmath>
#include <cstring>

#include "oodseg/errors.hpp"
#include "oodseg/metrics.hpp"
#include "oodseg/segnet.hpp"
#include "test_util.hpp"

namespace oodseg {
namespace {

Image random_image(int h, int w, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit;
  Image img(h, w);
  for (double& v : img.data()) v = unit(gen);
  return img;
}

Corpus tiny_corpus(int n_train, std::uint64_t seed) {
  CorpusSpec spec;
  spec.n_train = n_train;
  spec.n_val = 3;
  spec.n_ood_eval = 2;
  spec.height = 32;
  spec.width = 64;
  spec.seed = seed;
  return generate_corpus(spec);
}

TEST(Upsample, KnotsAndShape) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal;
  LogitMap low(3, 5, 4);
  for (double& v : low.data()) v = normal(gen);
  const LogitMap high = bilinear_upsample(low, 12, 20);
  ASSERT_EQ(high.height(), 12);
  ASSERT_EQ(high.width(), 20);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (int c = 0; c < 4; ++c) EXPECT_EQ(high.at(4 * i, 4 * j, c), low.at(i, j, c));
    }
  }
  // Midpoint between two knots.
  EXPECT_NEAR(high.at(2, 0, 1), 0.5 * (low.at(0, 0, 1) + low.at(1, 0, 1)), 1e-15);
}

TEST(Upsample, BackwardIsExactTranspose) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 1 + static_cast<int>(gen() % 5), w = 1 + static_cast<int>(gen() % 5), c = 2 + static_cast<int>(gen() % 3);
    LogitMap x(h, w, c);
    for (double& v : x.data()) v = normal(gen);
    std::vector<double> y(static_cast<std::size_t>(16) * h * w * c);
    for (double& v : y) v = normal(gen);
    const LogitMap ax = bilinear_upsample(x, 4 * h, 4 * w);
    std::vector<double> aty(x.data().size(), 0.0);
    bilinear_upsample_backward(y, 4 * h, 4 * w, h, w, c, aty);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += ax.data()[i] * y[i];
    for (std::size_t i = 0; i < aty.size(); ++i) rhs += x.data()[i] * aty[i];
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(DownsampleLabels, CenterSampleRule) {
  LabelMap l(8, 8, kRoad);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) l.at(r, c) = kOodId;
  }
  const LabelMap d = downsample_labels(l);
  ASSERT_EQ(d.height(), 2);
  ASSERT_EQ(d.width(), 2);
  EXPECT_EQ(d.at(0, 0), kOodId);
  EXPECT_EQ(d.at(0, 1), kRoad);
  EXPECT_EQ(d.at(1, 0), kRoad);
  EXPECT_EQ(d.at(1, 1), kRoad);

  LabelMap probe(4, 8, 0);
  probe.at(1, 5) = kIgnoreId;
  EXPECT_EQ(downsample_labels(probe).at(0, 1), kIgnoreId);
  EXPECT_EQ(downsample_labels(LabelMap(8, 4, 3)), LabelMap(2, 1, 3));
  EXPECT_THROW(downsample_labels(LabelMap(6, 8, 0)), ArgumentError);
}

TEST(Forward, ShapesAndLinearity) {
  SegNet zero;
  const ForwardResult z = zero.forward(Image(16, 8));
  EXPECT_EQ(z.logits_pre.height(), 4);
  EXPECT_EQ(z.logits_pre.width(), 2);
  EXPECT_EQ(z.logits_post.height(), 16);
  for (double v : z.logits_post.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(zero.forward(Image(10, 8)), ArgumentError);

  std::mt19937_64 gen(3);
  SegNet net;
  net.initialize(4);
  const Image img = random_image(16, 16, gen);
  const ForwardResult a = net.forward(img);
  EXPECT_EQ(a.logits_post, bilinear_upsample(a.logits_pre, 16, 16));
  auto params = net.mutable_parameters();
  for (std::size_t i = net.backbone_parameter_count(); i < params.size(); ++i) params[i] *= 2.0;
  const ForwardResult b = net.forward(img);
  for (std::size_t i = 0; i < a.logits_pre.data().size(); ++i) {
    EXPECT_NEAR(b.logits_pre.data()[i], 2.0 * a.logits_pre.data()[i], 1e-12);
  }
}

TEST(Backward, HeadGradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    SegNet net;
    net.initialize(100 + trial);
    auto params = net.mutable_parameters();
    for (std::size_t i = net.backbone_parameter_count(); i < params.size(); ++i) params[i] += 0.1 * (unit(gen) - 0.5);
    const Image img = random_image(16, 16, gen);
    LabelMap labels(16, 16, 0);
    for (auto& v : labels.data()) v = unit(gen) < 0.3 ? kOodId : static_cast<std::uint8_t>(gen() % kSceneClasses);
    const LabelMap low = downsample_labels(labels);
    LossConfig cfg;
    cfg.gamma = 1.0;
    auto loss = [&](ForwardCache* cache) {
      const ForwardResult fr = net.forward(img, cache);
      return combined_loss(std::span(&fr.logits_pre, 1), std::span(&fr.logits_post, 1), std::span(&labels, 1),
                           std::span(&low, 1), cfg);
    };
    ForwardCache cache;
    const CombinedLoss l = loss(&cache);
    std::vector<double> grads(net.parameter_count(), 0.0);
    net.backward(cache, l.grad_pre[0], l.id.grads[0], grads, true);
    for (std::size_t i = 0; i < net.backbone_parameter_count(); ++i) ASSERT_EQ(grads[i], 0.0);
    const double h = 1e-5;
    for (std::size_t i = net.backbone_parameter_count(); i < net.parameter_count(); ++i) {
      const double keep = net.parameters()[i];
      net.mutable_parameters()[i] = keep + h;
      const double up = loss(nullptr).value;
      net.mutable_parameters()[i] = keep - h;
      const double down = loss(nullptr).value;
      net.mutable_parameters()[i] = keep;
      const double num = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(num - grads[i]) / std::max({1e-4, std::abs(num), std::abs(grads[i])}));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, ZeroGradientsAndStaleCache) {
  std::mt19937_64 gen(6);
  SegNet net;
  net.initialize(1);
  ForwardCache cache;
  const ForwardResult fr = net.forward(random_image(8, 8, gen), &cache);
  std::vector<double> grads(net.parameter_count(), 0.0);
  const std::vector<double> zero_pre(fr.logits_pre.data().size(), 0.0);
  const std::vector<double> zero_post(fr.logits_post.data().size(), 0.0);
  net.backward(cache, zero_pre, zero_post, grads, false);
  for (double g : grads) EXPECT_EQ(g, 0.0);

  net.mutable_parameters()[0] += 1.0;
  EXPECT_THROW(net.backward(cache, zero_pre, zero_post, grads, false), StateError);
}

TEST(AdamW, ScheduleClosedForms) {
  AdamWConfig cfg;
  cfg.base_lr = 1e-3;
  cfg.total_steps = 100;
  const AdamW opt(cfg, 1);
  EXPECT_EQ(opt.learning_rate(0), 1e-3);
  EXPECT_NEAR(opt.learning_rate(50), 1e-3 * 0.535887, 1e-9);
  EXPECT_NEAR(opt.learning_rate(50), 1e-3 * std::pow(0.5, 0.9), 1e-18);
  EXPECT_EQ(opt.learning_rate(100), 0.0);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  AdamWConfig cfg;
  cfg.base_lr = 0.01;
  cfg.weight_decay = 0.0;
  cfg.total_steps = 10;
  AdamW opt(cfg, 1);
  std::vector<double> theta = {0.0};
  const std::vector<double> g = {1.0};
  const double lr = opt.current_learning_rate();
  opt.step(theta, g);
  EXPECT_NEAR(theta[0], -lr, 1e-6 * lr);
  EXPECT_EQ(opt.step_count(), 1);
  EXPECT_GE(opt.second_moment()[0], 0.0);
}

TEST(AdamW, DecoupledWeightDecay) {
  AdamWConfig cfg;
  cfg.base_lr = 0.1;
  cfg.weight_decay = 0.5;
  cfg.total_steps = 1000;
  AdamW opt(cfg, 1);
  std::vector<double> theta = {2.0};
  opt.step(theta, std::vector<double>{0.0});
  EXPECT_NEAR(theta[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(Train, DeterministicAndLearns) {
  const Corpus one = tiny_corpus(1, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.base_lr = 3e-3;
  cfg.freeze_backbone = false;
  SegNet a, b;
  a.initialize(9);
  b.initialize(9);
  train(a, one, cfg);
  train(b, one, cfg);
  EXPECT_EQ(a.parameter_hash(), b.parameter_hash());

  const Corpus ten = tiny_corpus(10, 4);
  SegNet net;
  net.initialize(10);
  cfg.epochs = 3;
  cfg.batch_size = 2;
  const TrainResult r = train(net, ten, cfg);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_LT(r.log.front().loss_id, std::log(6.0));
  EXPECT_LT(r.log.back().loss_id, r.log.front().loss_id);
  EXPECT_NE(train_log_csv(r.log).find("epoch,lr,L_id,L_ood,val_mIoU"), std::string::npos);
}

TEST(Train, EmptyCorpusRejected) {
  SegNet net;
  TrainConfig cfg;
  cfg.freeze_backbone = false;
  EXPECT_THROW(train(net, Corpus{}, cfg), ArgumentError);
}

TEST(Finetune, FreezesBackboneAndControlRunIsStable) {
  const Corpus c = tiny_corpus(8, 5);
  TrainConfig pre;
  pre.epochs = 4;
  pre.batch_size = 2;
  pre.base_lr = 3e-3;
  pre.freeze_backbone = false;
  SegNet net;
  net.initialize(11);
  train(net, c, pre);
  const std::uint64_t backbone = net.backbone_hash();
  const double before = split_miou(net, c, Split::kVal);

  TrainConfig ft;
  ft.epochs = 3;
  ft.batch_size = 4;
  ft.base_lr = 1e-5;
  ft.loss.gamma = 0.0;
  ft.mix.mix_probability = 0.0;
  SegNet control = net;
  finetune(control, c, ft, ProxyObjectSource{});
  EXPECT_EQ(control.backbone_hash(), backbone);
  EXPECT_NEAR(split_miou(control, c, Split::kVal), before, 0.005);

  ft.loss.gamma = 1.0;
  ft.mix.mix_probability = 1.0;
  ft.base_lr = 1e-2;
  SegNet tuned = net;
  const TrainResult r = finetune(tuned, c, ft, ProxyObjectSource{});
  EXPECT_EQ(tuned.backbone_hash(), backbone);
  EXPECT_NE(tuned.parameter_hash(), net.parameter_hash());
  EXPECT_EQ(r.optimized_offset, net.backbone_parameter_count());
  EXPECT_GT(r.log.front().loss_ood, 0.0);

  ft.freeze_backbone = false;
  EXPECT_THROW(finetune(tuned, c, ft, ProxyObjectSource{}), ArgumentError);
}

class CheckpointTest : public testing::TempDir {};

TEST_F(CheckpointTest, RoundTripWithOptimizer) {
  const Corpus c = tiny_corpus(2, 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.freeze_backbone = false;
  SegNet net;
  net.initialize(3);
  const TrainResult r = train(net, c, cfg);
  save_checkpoint(net, &r, path("a.ck"));
  const Checkpoint ck = load_checkpoint(path("a.ck"));
  EXPECT_EQ(ck.net.parameter_hash(), net.parameter_hash());
  ASSERT_TRUE(ck.optimizer.has_value());
  EXPECT_EQ(ck.optimizer->step_count(), r.optimizer.step_count());
  EXPECT_TRUE(std::equal(ck.optimizer->first_moment().begin(), ck.optimizer->first_moment().end(),
                         r.optimizer.first_moment().begin()));
  save_checkpoint(ck.net, nullptr, path("b.ck"));
  EXPECT_FALSE(load_checkpoint(path("b.ck")).optimizer.has_value());
  const std::string bytes = testing::read_bytes(path("a.ck"));
  EXPECT_EQ(bytes.substr(0, 4), "OODS");
}

TEST_F(CheckpointTest, CorruptFiles) {
  SegNet net;
  save_checkpoint(net, nullptr, path("c.ck"));
  std::string bytes = testing::read_bytes(path("c.ck"));
  testing::write_bytes(path("t.ck"), bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(path("t.ck")), TruncationError);
  bytes[0] = 'X';
  testing::write_bytes(path("m.ck"), bytes);
  EXPECT_THROW(load_checkpoint(path("m.ck")), FormatError);
  EXPECT_THROW(load_checkpoint(path("missing.ck")), IoError);
}

TEST(Predict, ArgmaxLabels) {
  LogitMap m(1, 2, 3, {0, 2, 1, 5, 5, -1});
  const LabelMap l = predict_labels(m);
  EXPECT_EQ(l.at(0, 0), 1);
  EXPECT_EQ(l.at(0, 1), 0);
}

}  // namespace
}  // namespace oodseg
