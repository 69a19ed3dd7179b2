#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sudoku_grpo/hash.hpp"
#include "unit/test_util.hpp"

namespace sgrpo {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SGRPO_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyConfig =
    "model.n_layers = 1\n"
    "model.n_heads = 2\n"
    "model.d_model = 16\n"
    "sft.lr = 0.003\n"
    "sft.batch_size = 4\n"
    "sft.max_steps = 6\n"
    "sft.eval_interval = 3\n"
    "grpo.steps = 2\n"
    "grpo.group_size = 2\n"
    "grpo.batch_prompts = 2\n"
    "grpo.lr = 0.001\n"
    "grpo.eval_interval = 1\n"
    "grpo.val_limit = 2\n";

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(testing::temp_dir("cli_" + name)) {
    std::ofstream(dir / "tiny.cfg") << kTinyConfig;
  }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

void gen_small(const Workspace& w, const std::string& out, int seed = 3) {
  auto r = run_cli("gen-data --side 4 --n-train 6 --n-val 3 --n-test 3 --givens-min 7 --givens-max 8 --seed " +
                   std::to_string(seed) + " --out " + w.p(out));
  ASSERT_EQ(r.exit_code, 0) << r.output;
}

TEST(Cli, GenDataIsReproducible) {
  Workspace w("gen");
  for (const char* out : {"a", "b"}) {
    auto r = run_cli(std::string("gen-data --n-train 0 --n-val 0 --n-test 1 --seed 7 --out ") + w.p(out));
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "vocab.txt"})
    EXPECT_EQ(sha256_file(w.dir / "a" / f), sha256_file(w.dir / "b" / f)) << f;
  // Manifests differ only in the --out flag.
  auto ma = nlohmann::json::parse(read_file(w.dir / "a" / "manifest.json"));
  auto mb = nlohmann::json::parse(read_file(w.dir / "b" / "manifest.json"));
  EXPECT_EQ(ma["artifacts"], mb["artifacts"]);
  ma["flags"].erase("--out");
  mb["flags"].erase("--out");
  EXPECT_EQ(ma, mb);
  EXPECT_EQ(read_file(w.dir / "a" / "test.jsonl").find("\"split\":\"test\"") != std::string::npos, true);
}

TEST(Cli, InputErrorsExitTwoWithOneLine) {
  Workspace w("errors");
  auto missing = run_cli("eval --ckpt " + w.p("nope.ckpt") + " --data " + w.p("nodata") + " --out " + w.p("r.json"));
  EXPECT_EQ(missing.exit_code, 2);
  EXPECT_EQ(missing.output.rfind("error[", 0), 0u) << missing.output;
  EXPECT_EQ(std::count(missing.output.begin(), missing.output.end(), '\n'), 1);

  auto bad_flag = run_cli("gen-data --seed notanumber --out " + w.p("x"));
  EXPECT_EQ(bad_flag.exit_code, 2);
  EXPECT_EQ(bad_flag.output.rfind("error[input]", 0), 0u) << bad_flag.output;
}

TEST(Cli, PipelineAndProvenance) {
  Workspace w("pipeline");
  gen_small(w, "data");
  const std::string cfg = " --config " + w.p("tiny.cfg");
  auto sft = run_cli("sft --data " + w.p("data") + " --order random --seed 1 --out " + w.p("random.ckpt") + cfg);
  ASSERT_EQ(sft.exit_code, 0) << sft.output;
  auto sft2 = run_cli("sft --data " + w.p("data") + " --order random --seed 2 --out " + w.p("other.ckpt") + cfg);
  ASSERT_EQ(sft2.exit_code, 0) << sft2.output;
  ASSERT_TRUE(fs::exists(w.dir / "random.ckpt.metrics.jsonl"));
  ASSERT_TRUE(fs::exists(w.dir / "random.ckpt.manifest.json"));

  auto boot = run_cli("bootstrap-scales --ckpt " + w.p("random.ckpt") + " --data " + w.p("data") +
                      " --alpha 0.75 --out " + w.p("scales.json"));
  ASSERT_EQ(boot.exit_code, 0) << boot.output;

  auto grpo = run_cli("grpo --ckpt " + w.p("random.ckpt") + " --scales " + w.p("scales.json") + " --data " +
                      w.p("data") + " --out " + w.p("grpo.ckpt") + cfg);
  ASSERT_EQ(grpo.exit_code, 0) << grpo.output;
  EXPECT_TRUE(fs::exists(w.dir / "grpo.ckpt.best"));

  auto eval = run_cli("eval --ckpt " + w.p("grpo.ckpt") + " --data " + w.p("data") + " --split test --out " +
                      w.p("report.json"));
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  EXPECT_NE(read_file(w.dir / "report.json").find("cell_accuracy"), std::string::npos);

  auto foreign = run_cli("grpo --ckpt " + w.p("other.ckpt") + " --scales " + w.p("scales.json") + " --data " +
                         w.p("data") + " --out " + w.p("bad.ckpt") + cfg);
  EXPECT_EQ(foreign.exit_code, 4) << foreign.output;
  EXPECT_EQ(foreign.output.rfind("error[provenance]", 0), 0u) << foreign.output;

  auto bad_alpha = run_cli("bootstrap-scales --ckpt " + w.p("random.ckpt") + " --data " + w.p("data") +
                           " --alpha 1.5 --out " + w.p("s2.json"));
  EXPECT_EQ(bad_alpha.exit_code, 2);

  auto sweep = run_cli("sweep --ckpt " + w.p("random.ckpt") + " --solver-ckpt " + w.p("other.ckpt") +
                       " --data " + w.p("data") + " --alphas 0,1 --out " + w.p("sweep") + cfg);
  ASSERT_EQ(sweep.exit_code, 0) << sweep.output;
  const auto table = read_file(w.dir / "sweep" / "report.txt");
  EXPECT_NE(table.find("Fine-tuned (random order)"), std::string::npos);
  EXPECT_NE(table.find("1 : 0"), std::string::npos);
}

}  // namespace
}  // namespace sgrpo
