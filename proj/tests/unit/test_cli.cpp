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

#include <sys/wait.h>

#include <cstdlib>

#include "oodseg/config.hpp"
#include "oodseg/imagery.hpp"
#include "oodseg/pipeline.hpp"
#include "oodseg/synth.hpp"
#include "test_util.hpp"

namespace oodseg {
namespace {

namespace fs = std::filesystem;

class Cli : public testing::TempDir {
 protected:
  // Runs the CLI with stdout/stderr captured under the scratch dir; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string(OODSEG_CLI_PATH) + " " + args + " >" + path("stdout").string() + " 2>" +
                            path("stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string err() const { return testing::read_bytes(path("stderr")); }
  std::string out() const { return testing::read_bytes(path("stdout")); }

  static constexpr const char* kSmall =
      "--set n_train=4 --set n_val=2 --set n_ood_eval=3 --set height=32 --set width=64 --set train_epochs=1 "
      "--set epochs=1";
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("synth"), 2);
  EXPECT_EQ(run("synth --out " + path("c").string() + " --set score=odin"), 2);
  EXPECT_EQ(run("synth --out " + path("c").string() + " --set mix_probability=1.5"), 2);
  EXPECT_NE(err().find("error:"), std::string::npos);
  EXPECT_EQ(run("synth --out " + path("c").string() + " --set k_list="), 2);
  EXPECT_EQ(run("synth --out " + path("c").string() + " --set bogus=1"), 2);
  EXPECT_FALSE(fs::exists(path("c")));
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, IoAndStateErrors) {
  EXPECT_EQ(run("synth --out " + (path("no") / "such" / "dir").string()), 3);
  EXPECT_EQ(run("synth --config " + path("missing.cfg").string() + " --out " + path("c").string()), 3);
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --out " + path("c").string()), 0);
  EXPECT_EQ(run(std::string("finetune ") + kSmall + " --corpus " + path("c").string() + " --checkpoint " +
                path("absent.ckpt").string() + " --out " + path("ft.ckpt").string()),
            4);
  testing::write_bytes(path("junk.ckpt"), "not a checkpoint");
  EXPECT_EQ(run(std::string("eval ") + kSmall + " --corpus " + path("c").string() + " --checkpoint " +
                path("junk.ckpt").string() + " --out " + path("r").string()),
            3);
}

TEST_F(Cli, EndToEndAndConfigEcho) {
  const std::string corpus = path("c").string();
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --seed 3 --out " + corpus), 0);
  ASSERT_EQ(run(std::string("train ") + kSmall + " --seed 3 --corpus " + corpus + " --out " +
                path("pre.ckpt").string()),
            0);
  ASSERT_EQ(run(std::string("finetune ") + kSmall + " --seed 3 --corpus " + corpus + " --checkpoint " +
                path("pre.ckpt").string() + " --out " + path("ft.ckpt").string() + " --k 3 --mix-prob 0.5"),
            0);
  ASSERT_EQ(run(std::string("eval ") + kSmall + " --seed 3 --corpus " + corpus + " --checkpoint " +
                path("ft.ckpt").string() + " --out " + path("r").string()),
            0);
  EXPECT_EQ(out().rfind("score,auroc,ap,fpr95,miou", 0), 0u);

  const RunConfig echoed = load_config(path("r") / kConfigEcho);
  EXPECT_EQ(echoed.seed, 3u);
  EXPECT_EQ(echoed.n_train, 4);
  EXPECT_EQ(config_text(echoed), testing::read_bytes(path("r") / kConfigEcho));
}

TEST_F(Cli, EvalRejectsSingleClassDumps) {
  const std::string corpus = path("c").string();
  ASSERT_EQ(run(std::string("synth ") + kSmall + " --out " + corpus), 0);
  fs::create_directories(path("dumps"));
  const Corpus c = load_corpus(corpus);
  for (std::size_t i : c.indices(Split::kEval)) {
    write_score_dump(ScoreMap(32, 64), path("dumps") / (corpus_file_stem(c.entries[i].id) + ".oodl"));
  }
  EXPECT_EQ(run(std::string("eval ") + kSmall + " --corpus " + corpus + " --dumps " + path("dumps").string() +
                " --out " + path("r").string()),
            2);
  EXPECT_NE(err().find("C >= 2"), std::string::npos) << err();
}

}  // namespace
}  // namespace oodseg
