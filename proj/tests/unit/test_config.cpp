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
#include "oodseg/errors.hpp"
#include "oodseg/rng.hpp"
#include "test_util.hpp"

namespace oodseg {
namespace {

using ConfigFile = testing::TempDir;

TEST(Config, DefaultsValidate) {
  const RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.k, 5);
  EXPECT_EQ(cfg.s, 2.0);
  EXPECT_EQ(cfg.mix_probability, 0.1);
  EXPECT_TRUE(cfg.style_align);
  EXPECT_EQ(cfg.k_list, (std::vector<int>{3, 5, 7}));
}

TEST(Config, ParseCommentsAndWhitespace) {
  const RunConfig cfg = parse_config("# header\n  k = 3 \n\ngamma=0.5 # trailing\nstyle_align=off\nk_list=1, 2,9\n");
  EXPECT_EQ(cfg.k, 3);
  EXPECT_EQ(cfg.gamma, 0.5);
  EXPECT_FALSE(cfg.style_align);
  EXPECT_EQ(cfg.k_list, (std::vector<int>{1, 2, 9}));
}

TEST(Config, MalformedInputRejected) {
  EXPECT_THROW(parse_config("k\n"), ArgumentError);
  EXPECT_THROW(parse_config("nope=1\n"), ArgumentError);
  EXPECT_THROW(parse_config("k=3x\n"), ArgumentError);
  EXPECT_THROW(parse_config("style_align=maybe\n"), ArgumentError);
  EXPECT_THROW(parse_config("gamma=\n"), ArgumentError);
}

TEST(Config, ValidationRanges) {
  auto invalid = [](const char* text) {
    const RunConfig cfg = parse_config(text);
    EXPECT_THROW(cfg.validate(), ArgumentError) << text;
  };
  invalid("mix_probability=1.5");
  invalid("mix_probability=-0.1");
  invalid("k=0");
  invalid("s=0");
  invalid("gamma=-1");
  invalid("height=30");
  invalid("k_list=");
  invalid("k_list=3,0");
  invalid("score=odin");
  invalid("variant=focal");
  invalid("proxy_style=sepia");
  invalid("n_train=0");
}

TEST(Config, TextRoundTrip) {
  RunConfig cfg;
  cfg.seed = 123456789012345ull;
  cfg.gamma = 0.1 + 0.2;
  cfg.lr = 1.0 / 3.0;
  cfg.style_align = false;
  cfg.k_list = {7, 1};
  cfg.proxy_style = "styleP";
  const std::string text = config_text(cfg);
  EXPECT_EQ(parse_config(text), cfg);
  EXPECT_EQ(config_text(parse_config(text)), text);
  for (const std::string& key : config_keys()) EXPECT_NE(text.find(key + "="), std::string::npos) << key;
}

TEST(Config, DerivedStageConfigs) {
  RunConfig cfg;
  cfg.seed = 4;
  const TrainConfig pre = cfg.pretrain_config();
  const TrainConfig ft = cfg.finetune_config();
  EXPECT_FALSE(pre.freeze_backbone);
  EXPECT_TRUE(ft.freeze_backbone);
  EXPECT_NE(pre.seed, ft.seed);
  EXPECT_EQ(ft.loss.k, 5);
  EXPECT_EQ(ft.mix.mix_probability, 0.1);
  EXPECT_EQ(cfg.corpus_spec().seed, 4u);
}

TEST_F(ConfigFile, LoadFromFile) {
  testing::write_bytes(path("run.cfg"), "seed=9\nepochs=3\n");
  const RunConfig cfg = load_config(path("run.cfg"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.epochs, 3);
  EXPECT_THROW(load_config(path("missing.cfg")), IoError);
}

}  // namespace
}  // namespace oodseg
