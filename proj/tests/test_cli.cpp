#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("vickrey-cli-" + std::to_string(rd()));
    fs::create_directories(dir_);
    std::string ini = read(fs::path(VK_SOURCE_DIR) / "config" / "default_pool.ini");
    ini.replace(ini.find("n_instructions = 2000"), 21, "n_instructions = 80");
    std::ofstream(path("pool.ini")) << ini;
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Exit status of the CLI; stdout is captured in last_output_.
  int run(const std::string& args) {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string("\"") + VK_CLI_PATH + "\" " + args + " >\"" + out + "\" 2>\"" +
                            path("stderr.txt") + "\"";
    const int raw = std::system(cmd.c_str());
    last_output_ = read(out);
    last_error_ = read(path("stderr.txt"));
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  fs::path dir_;
  std::string last_output_;
  std::string last_error_;
};

}  // namespace

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_NE(last_output_.find("gen-pool"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("gen-pool " + path("missing.ini") + " --out " + path("p.jsonl")), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("gen-pool"), 2);
}

TEST_F(CliTest, PipelineIsReproducible) {
  ASSERT_EQ(run("gen-pool " + path("pool.ini") + " --out " + path("pool.jsonl") + " --seed 5"), 0)
      << last_error_;
  EXPECT_NE(last_output_.find("entries=80"), std::string::npos);
  ASSERT_TRUE(fs::exists(path("pool.jsonl.manifest.json")));
  const std::string first = read(path("pool.jsonl"));
  ASSERT_EQ(run("gen-pool " + path("pool.ini") + " --out " + path("pool2.jsonl") + " --seed 5"), 0);
  EXPECT_EQ(read(path("pool2.jsonl")), first);

  EXPECT_EQ(run("validate --pool " + path("pool.jsonl")), 0) << last_output_;

  // Vanilla without a seed is a usage error.
  EXPECT_EQ(run("build --pool " + path("pool.jsonl") + " --mode vanilla --out " + path("va.jsonl")), 2);
  EXPECT_EQ(run("build --pool " + path("pool.jsonl") + " --mode sideways --out " + path("x.jsonl")), 2);
  ASSERT_EQ(run("build --pool " + path("pool.jsonl") + " --mode vanilla --seed 3 --out " + path("va.jsonl")), 0)
      << last_error_;
  ASSERT_EQ(run("build --pool " + path("pool.jsonl") + " --mode vickrey --subsample 0.5 --seed 3 --out " +
                path("vk.jsonl")),
            0)
      << last_error_;
  EXPECT_NE(last_output_.find("samples=40"), std::string::npos);
  const std::string manifest = read(path("vk.jsonl.manifest.json"));
  EXPECT_NE(manifest.find("\"inputs\""), std::string::npos);
  EXPECT_NE(manifest.find("\"seed\""), std::string::npos);

  ASSERT_EQ(run("cost --dataset " + path("vk.jsonl") + " --out " + path("cost.csv")), 0) << last_error_;
  EXPECT_EQ(read(path("cost.csv")).rfind("n_samples,cumulative_tokens,cumulative_dollars\n", 0), 0u);
  ASSERT_EQ(run("stats --dataset " + path("vk.jsonl") + " --source-out " + path("src.csv") + " --score-out " +
                path("score.csv")),
            0);

  ASSERT_EQ(run("procure --pool " + path("pool.jsonl") + " --budget 1e9 --out " + path("auctions.jsonl")), 0)
      << last_error_;
  EXPECT_NE(last_output_.find("auctions=80"), std::string::npos);
  EXPECT_EQ(run("procure --pool " + path("pool.jsonl") + " --budget -1 --out " + path("a2.jsonl")), 2);

  ASSERT_EQ(run("init-model --out " + path("base.json")), 0);
  ASSERT_EQ(run("train --dataset " + path("vk.jsonl") + " --base " + path("base.json") + " --out " +
                path("qa.json") + " --trace " + path("trace.csv") + " --seed 1"),
            0)
      << last_error_;
  const std::string model = read(path("qa.json"));
  ASSERT_EQ(run("train --dataset " + path("vk.jsonl") + " --base " + path("base.json") + " --out " +
                path("qa2.json") + " --seed 1"),
            0);
  EXPECT_EQ(read(path("qa2.json")), model);

  EXPECT_EQ(run("eval --model base=" + path("base.json") + " --instructions " + path("pool.jsonl") + " --out " +
                path("m.csv")),
            2);
  ASSERT_EQ(run("eval --model base=" + path("base.json") + " --model qa=" + path("qa.json") +
                " --instructions " + path("pool.jsonl") + " --out " + path("m.csv") + " --verdicts " +
                path("v.jsonl")),
            0)
      << last_error_;
  EXPECT_EQ(read(path("m.csv")).rfind("model,base,qa\n", 0), 0u);
}

TEST_F(CliTest, DeviationAndEfficiency) {
  ASSERT_EQ(run("deviation --agent a=3 --agent b=5 --mechanism second_price --exhaustive --rivals 2 --out " +
                path("dev.csv")),
            0)
      << last_error_;
  EXPECT_TRUE(fs::exists(path("dev.csv")));
  ASSERT_EQ(run("efficiency --run vk,10,0.6 --run va,40,0.55 --out " + path("eff.csv")), 0) << last_error_;
  EXPECT_EQ(read(path("eff.csv")), "label,cost,win_rate\nvk,10,0.6\nva,40,0.55\n");
  EXPECT_EQ(run("efficiency --run broken --out " + path("eff2.csv")), 2);
}
