#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <sys/wait.h>

#include "json.hpp"
#include "support/temp_dir.hpp"

using nlohmann::json;
using vcap::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Result run_vcap(const std::string& args) {
  static TempDir io("vcap-cli-io");
  static int n = 0;
  const auto out = io / ("out" + std::to_string(n));
  const auto err = io / ("err" + std::to_string(n++));
  const std::string cmd = std::string(VCAP_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

const fs::path kToy = fs::path(VCAP_FIXTURE_DIR) / "toy";

// Small model so the pipeline runs in seconds.
const char* kTinyConfig = R"({"max_iterations": 12, "eval_interval": 4, "batch_size": 4, "samples": 2,
  "hidden_dim": 8, "embed_dim": 6, "feat_dim": 6, "frame_size": 16, "conv1_channels": 2,
  "conv2_channels": 3, "decoder_steps": 12, "lr": 0.01})";

}  // namespace

TEST(Cli, HelpListsEveryFlag) {
  const auto r = run_vcap("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--seed", "--config", "--log-level", "gen-data", "--clips", "--frames-per-clip",
                           "--grammar-size", "--frame-size", "--feature-dim", "--out-dir", "mine-attrs", "--count",
                           "train", "--step", "--data", "--resume", "--attrs", "--features", "--out", "--force", "eval",
                           "--checkpoint", "--split", "--mode", "caption", "--manifest", "score", "--hyps", "--refs",
                           "--idf", "--cider-variant", "ablate", "--suite", "--seeds"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, UnknownSubcommandIsAUsageError) {
  const auto r = run_vcap("frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
  EXPECT_EQ(run_vcap("").code, 1);
}

TEST(Cli, InvalidFlagValuesAreUsageErrors) {
  TempDir dir;
  EXPECT_EQ(run_vcap("gen-data --clips 0 --out-dir " + (dir / "d").string()).code, 1);
  EXPECT_FALSE(fs::exists(dir / "d"));
  EXPECT_EQ(run_vcap("train --step 4 --data . --out " + (dir / "t").string()).code, 1);
  EXPECT_EQ(run_vcap("--log-level loud score --hyps x --refs y").code, 1);
  EXPECT_EQ(run_vcap("score --hyps " + (kToy / "hyps.txt").string() + " --refs " + (kToy / "refs.tsv").string() +
                 " --cider-variant bleu")
                .code,
            1);
}

TEST(Cli, GenDataIsDeterministic) {
  TempDir dir;
  ASSERT_EQ(run_vcap("gen-data --clips 10 --seed 7 --out-dir " + (dir / "a").string()).code, 0);
  ASSERT_EQ(run_vcap("gen-data --clips 10 --seed 7 --out-dir " + (dir / "b").string()).code, 0);
  const auto a = tree(dir / "a");
  EXPECT_EQ(a, tree(dir / "b"));
  EXPECT_EQ(a.size(), 12u);  // manifest, meta and ten frame files
  // Rerunning into the same directory overwrites with identical bytes.
  ASSERT_EQ(run_vcap("gen-data --clips 10 --seed 7 --out-dir " + (dir / "a").string()).code, 0);
  EXPECT_EQ(tree(dir / "a"), a);
  ASSERT_EQ(run_vcap("--seed 8 gen-data --clips 10 --out-dir " + (dir / "c").string()).code, 0);
  EXPECT_NE(tree(dir / "c"), a);
}

TEST(Cli, ScoreReproducesTheGoldenToyReport) {
  // Closed forms for the fixture: exact match, three-word prefix of a four-word
  // reference, and a disjoint caption; idf from the references with D = 3.
  const double bleu = std::exp(1.0 - 12.0 / 9.0) * std::pow(7.0 / 9.0 * 5.0 / 6.0, 0.25);
  const double prefix_rouge = 2.44 * 0.75 / (0.75 + 1.44);
  const double rouge = (1.0 + prefix_rouge) / 3.0;
  const double meteor = ((1.0 - 0.5 / 64.0) + 7.5 / 9.75 * (1.0 - 0.5 / 27.0)) / 3.0;
  const double prefix_cider =
      10.0 * std::exp(-1.0 / 72.0) * (2.0 * 2.0 / std::sqrt(6.0) + 1.0 / std::sqrt(2.0)) / 4.0;
  const double cider = (10.0 + prefix_cider) / 3.0;

  const json golden = json::parse(slurp(kToy / "golden.json"));
  EXPECT_NEAR(golden["bleu4"].get<double>(), bleu, 1e-12);
  EXPECT_NEAR(golden["rouge_l"].get<double>(), rouge, 1e-12);
  EXPECT_NEAR(golden["meteor"].get<double>(), meteor, 1e-12);
  EXPECT_NEAR(golden["cider"].get<double>(), cider, 1e-12);

  TempDir dir;
  const auto r = run_vcap("score --hyps " + (kToy / "hyps.txt").string() + " --refs " + (kToy / "refs.tsv").string() +
                      " --out-dir " + dir.path().string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json printed = json::parse(r.out.substr(0, r.out.find('\n')));
  const json written = json::parse(slurp(dir / "scores.json"));
  for (const auto& report : {printed, written}) {
    for (const char* k : {"bleu4", "rouge_l", "meteor", "cider"}) {
      EXPECT_NEAR(report[k].get<double>(), golden[k].get<double>(), 1e-12) << k;
    }
  }
  // The table follows the paper's column order.
  EXPECT_LT(r.out.find("BLEU4"), r.out.find("ROUGE-L"));
  EXPECT_LT(r.out.find("ROUGE-L"), r.out.find("METEOR"));
  EXPECT_LT(r.out.find("METEOR"), r.out.find("CIDEr"));
}

TEST(Cli, ScoreRejectsMisalignedFiles) {
  TempDir dir;
  std::ofstream(dir / "h.txt") << "a red ball slides\n";
  const auto r = run_vcap("score --hyps " + (dir / "h.txt").string() + " --refs " + (kToy / "refs.tsv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("3 clips"), std::string::npos);
}

TEST(Cli, StepTwoWithoutStageOneCheckpointExitsOne) {
  TempDir dir;
  ASSERT_EQ(run_vcap("gen-data --clips 10 --out-dir " + (dir / "d").string()).code, 0);
  const auto r = run_vcap("train --step 2 --data " + (dir / "d").string() + " --out " + (dir / "t").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("stage-1"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "t"));
}

TEST(Cli, UnknownConfigKeyIsRejectedBeforeWork) {
  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"learning_rate": 0.1})";
  const auto r = run_vcap("--config " + (dir / "c.json").string() + " train --step 1 --data . --out " +
                      (dir / "t").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos);
}

TEST(Cli, CorruptCheckpointIsARuntimeError) {
  TempDir dir;
  ASSERT_EQ(run_vcap("gen-data --clips 10 --out-dir " + (dir / "d").string()).code, 0);
  std::ofstream(dir / "bad.vcck") << "not a checkpoint";
  const auto r = run_vcap("eval --checkpoint " + (dir / "bad.vcck").string() + " --data " + (dir / "d").string());
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SixCommandPipeline) {
  TempDir dir;
  std::ofstream(dir / "tiny.json") << kTinyConfig;
  const std::string d = (dir / "d").string();
  const std::string cfg = "--log-level warn --config " + (dir / "tiny.json").string();
  ASSERT_EQ(run_vcap("gen-data --clips 14 --seed 3 --frames-per-clip 4 --frame-size 16 --out-dir " + d).code, 0);
  auto r = run_vcap("mine-attrs --data " + d + " --count 8 --out-dir " + (dir / "attrs").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "attrs" / "attributes.txt").size(), 0u);
  for (int step = 1; step <= 3; ++step) {
    std::string cmd = cfg + " train --step " + std::to_string(step) + " --data " + d + " --attrs " +
                      (dir / "attrs").string() + " --out " + (dir / ("s" + std::to_string(step))).string();
    if (step > 1) cmd += " --resume " + (dir / ("s" + std::to_string(step - 1))).string();
    r = run_vcap(cmd);
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(slurp(dir / ("s" + std::to_string(step)) / "summary.json"));
    EXPECT_EQ(summary["stage"], step);
    EXPECT_TRUE(fs::exists(dir / ("s" + std::to_string(step)) / "log.csv"));
  }
  r = run_vcap("--log-level warn eval --checkpoint " + (dir / "s3").string() + " --data " + d + " --out-dir " +
           (dir / "ev").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(slurp(dir / "ev" / "report.json"));
  EXPECT_EQ(report["stage"], 3);

  // The exported hypotheses and references re-score to the same numbers.
  r = run_vcap("score --hyps " + (dir / "ev" / "hyps.txt").string() + " --refs " + (dir / "ev" / "refs.tsv").string() +
           " --idf " + (dir / "attrs" / "idf.json").string() + " --out-dir " + (dir / "sc").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(dir / "sc" / "scores.json")), report["metrics"]);

  r = run_vcap("caption --checkpoint " + (dir / "s3" / "checkpoint.vcck").string() + " --manifest " + d +
           " --split test --mode beam --out-dir " + (dir / "cap").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir / "cap" / "captions.txt"));
  const json caps = json::parse(slurp(dir / "cap" / "captions.json"));
  EXPECT_EQ(caps.size(), report["clips"].get<std::size_t>());
  for (const auto& c : caps) {
    EXPECT_TRUE(c.contains("id"));
    EXPECT_TRUE(c.contains("log_prob"));
  }
  EXPECT_EQ(r.out.find("<pad>"), std::string::npos);
  EXPECT_EQ(r.out.find("<bos>"), std::string::npos);

  // Step 1 again: same bytes.
  r = run_vcap(cfg + " train --step 1 --data " + d + " --attrs " + (dir / "attrs").string() + " --out " +
           (dir / "s1b").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "s1" / "checkpoint.vcck"), slurp(dir / "s1b" / "checkpoint.vcck"));
  EXPECT_EQ(slurp(dir / "s1" / "log.csv"), slurp(dir / "s1b" / "log.csv"));
}

TEST(Cli, FeatureModeMatchesFrameMode) {
  TempDir dir;
  std::ofstream(dir / "tiny.json") << kTinyConfig;
  const std::string d = (dir / "d").string();
  const std::string cfg = "--log-level warn --seed 4 --config " + (dir / "tiny.json").string();
  ASSERT_EQ(run_vcap(cfg + " gen-data --clips 14 --frames-per-clip 4 --frame-size 16 --feature-dim 6 --out-dir " + d).code,
            0);
  ASSERT_TRUE(fs::exists(dir / "d" / "features.bin"));
  auto r = run_vcap(cfg + " train --step 1 --data " + d + " --out " + (dir / "frames").string());
  ASSERT_EQ(r.code, 0) << r.err;
  r = run_vcap(cfg + " train --step 1 --data " + d + " --features " + (dir / "d" / "features.bin").string() + " --out " +
           (dir / "feats").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream a(slurp(dir / "frames" / "log.csv")), b(slurp(dir / "feats" / "log.csv"));
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  int rows = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    // Second column is the loss.
    auto field = [](const std::string& line, int k) {
      std::size_t pos = 0;
      for (int i = 0; i < k; ++i) pos = line.find(',', pos) + 1;
      return std::stod(line.substr(pos, line.find(',', pos) - pos));
    };
    EXPECT_NEAR(field(la, 1), field(lb, 1), 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
  r = run_vcap(cfg + " train --step 3 --force --data " + d + " --features " + (dir / "d" / "features.bin").string() +
           " --resume " + (dir / "feats").string() + " --out " + (dir / "s3").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("features"), std::string::npos);
}
