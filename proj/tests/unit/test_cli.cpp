#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "../support/cli_runs.hpp"
#include "sflow/cli/run_dir.hpp"
#include "sflow/cli/settings.hpp"
#include "sflow/featurestats/matrix.hpp"
#include "sflow/numkit/random.hpp"
#include "sflow/numkit/hash.hpp"

using namespace sflow::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "sflow_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

fs::path scratch_keep(const std::string& name) { return fs::temp_directory_path() / "sflow_cli_test" / name; }

std::string data(const std::string& name) { return (fs::path(SFLOW_TEST_DATA) / name).string(); }

const std::vector<std::string> kTinyTrain = {"--steps", "6", "--set", "batch=2", "--set", "heldout=3"};

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_NE(run_cli({"--help"}).out.find("toyclone"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, sflow::cli::kUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, sflow::cli::kUsage);
  EXPECT_EQ(run_cli({"coupling-lab"}).code, sflow::cli::kUsage);  // --out is required
  EXPECT_EQ(run_cli({"coupling-lab", "--out", scratch("x").string(), "--coupling", "sideways"}).code,
            sflow::cli::kUsage);
  EXPECT_EQ(run_cli({"pccs", "--out", scratch("y").string(), "--preset", "studio", data("speech_a_22k.wav")}).code,
            sflow::cli::kUsage);
  EXPECT_EQ(run_cli({"toyclone", "train", "--out", scratch("z").string(), "--version", "v3"}).code,
            sflow::cli::kUsage);
  EXPECT_EQ(run_cli({"toyclone", "infer", "--out", scratch("w").string(), "--noise-at-inference", "maybe"}).code,
            sflow::cli::kUsage);
}

TEST(Cli, MissingCheckpointNamesPath) {
  auto r = run_cli({"toyclone", "infer", "--out", scratch("inf").string(), "--checkpoint", "/no/such/model.ckpt"});
  EXPECT_EQ(r.code, sflow::cli::kRuntime);
  EXPECT_NE(r.err.find("/no/such/model.ckpt"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"toyclone", "infer", "--out", scratch("inf2").string()}).code, sflow::cli::kUsage);
}

TEST(Cli, ConfigFileRejectsUnknownKeys) {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"steps": 5, "learning_rate": 1})";
  auto r = run_cli({"coupling-lab", "--out", (dir / "o").string(), "--config", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, sflow::cli::kUsage);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
  std::ofstream(dir / "typed.json") << R"({"steps": "five"})";
  EXPECT_EQ(run_cli({"coupling-lab", "--out", (dir / "o2").string(), "--config", (dir / "typed.json").string()}).code,
            sflow::cli::kUsage);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = scratch("prec");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"steps": 3, "per_cluster": 4, "batch": 8, "eval_nfe": 4, "nfe": [2]})";
  auto r = run_cli({"coupling-lab", "--out", (dir / "o").string(), "--config", (dir / "c.json").string(), "--steps",
                    "5", "--coupling", "independent"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "o" / "config.json");
  auto cfg = nlohmann::json::parse(in);
  EXPECT_EQ(cfg["steps"], 5);
  EXPECT_EQ(cfg["per_cluster"], 4);
  EXPECT_EQ(cfg["coupling"], "independent");
  EXPECT_FALSE(cfg.contains("out"));
}

TEST(Cli, ManifestHashesEveryFile) {
  const auto dir = scratch("man");
  auto r = run_cli({"toyclone", "corpus", "--out", dir.string(), "--set", "heldout=2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "manifest.json");
  auto m = nlohmann::json::parse(in);
  ASSERT_GE(m["files"].size(), 3u);
  for (const auto& f : m["files"]) {
    const auto p = dir / f["path"].get<std::string>();
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(p));
    EXPECT_EQ(f["sha256"], sflow::numkit::sha256_file(p));
  }
}

TEST(Cli, PccsPartialFailure) {
  const auto dir = scratch("pccs");
  auto r = run_cli({"pccs", "--out", dir.string(), data("speech_a_22k.wav"), "/no/such.wav"});
  EXPECT_EQ(r.code, sflow::cli::kRuntime);
  EXPECT_NE(r.err.find("/no/such.wav"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, PccsOnMatrixFiles) {
  const auto dir = scratch("pm");
  fs::create_directories(dir);
  std::ofstream(dir / "m.csv") << "1,2,3\n2,4,7\n3,6,8\n5,1,0\n";
  auto r = run_cli({"pccs", "--out", (dir / "o").string(), (dir / "m.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "o" / "summary.json");
  auto s = nlohmann::json::parse(in);
  EXPECT_EQ(s["inputs"].size(), 1u);
}

TEST(Cli, TrainThenInfer) {
  const auto train = scratch("tr");
  auto args = std::vector<std::string>{"toyclone", "train", "--out", train.string()};
  args.insert(args.end(), kTinyTrain.begin(), kTinyTrain.end());
  auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(train / "model.ckpt"));
  const auto inf = scratch("inf3");
  r = run_cli({"toyclone", "infer", "--out", inf.string(), "--checkpoint", (train / "model.ckpt").string(), "--nfe",
               "1,4", "--utterances", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(inf / "generated" / "utt00_nfe1.csv"));
  EXPECT_TRUE(fs::exists(inf / "generated" / "utt01_nfe4.csv"));
}

TEST(Cli, Determinism) {
  const auto root = scratch("det");
  EXPECT_TRUE(rerun_identical({"coupling-lab", "--steps", "20", "--set", "per_cluster=8", "--set", "batch=16", "--set",
                               "eval_nfe=8", "--nfe", "2,8"},
                              root / "lab")
                  .ok);
  auto pccs = rerun_identical({"pccs", data("speech_b_16k_stereo.wav")}, root / "pccs");
  EXPECT_TRUE(pccs.ok) << pccs.detail;
  auto corpus = rerun_identical({"toyclone", "corpus", "--set", "heldout=2"}, root / "corpus");
  EXPECT_TRUE(corpus.ok) << corpus.detail;
}

TEST(Settings, TextConversions) {
  sflow::cli::Settings s({{"n", std::size_t{1}}, {"x", 0.5}, {"b", true}, {"name", "a"}, {"list", std::vector<std::size_t>{}}});
  s.set_text("n", "7");
  s.set_text("x", "1e-3");
  s.set_text("b", "off");
  s.set_text("list", "1,2,3");
  EXPECT_EQ(s.size("n"), 7u);
  EXPECT_DOUBLE_EQ(s.real("x"), 1e-3);
  EXPECT_FALSE(s.flag("b"));
  EXPECT_EQ(s.sizes("list"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_THROW(s.set_text("n", "-1"), sflow::cli::UsageError);
  EXPECT_THROW(s.set_text("b", "maybe"), sflow::cli::UsageError);
  EXPECT_THROW(s.set_text("nope", "1"), sflow::cli::UsageError);
}

TEST(CliOracles, UnwritableOutput) {
  const auto dir = scratch("ro");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  // a path below a regular file can never be created
  auto r = run_cli({"toyclone", "corpus", "--out", (dir / "file" / "sub").string()});
  EXPECT_NE(r.code, 0);
  auto fresh = run_cli({"toyclone", "corpus", "--out", (dir / "new" / "deeper").string(), "--set", "heldout=1"});
  EXPECT_EQ(fresh.code, 0) << fresh.err;
}

TEST(CliOracles, PccsRouting) {
  const auto dir = scratch("route");
  auto r = run_cli({"pccs", "--out", dir.string(), data("speech_a_22k.wav")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(dir / "reports")) csvs += e.path().extension() == ".csv";
  EXPECT_EQ(csvs, 2u);

  sflow::featurestats::FeatureMatrix m{sflow::numkit::Rng(4).normal_array({13, 7})};
  sflow::featurestats::export_matrix(dir.parent_path() / "route_m.featmat", m, sflow::featurestats::MatrixFormat::kRaw);
  const auto out = scratch("route_raw");
  r = run_cli({"pccs", "--out", out.string(), (dir.parent_path() / "route_m.featmat").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out / "summary.json");
  auto s = nlohmann::json::parse(in);
  EXPECT_EQ(s["inputs"][0]["source"], "external");
  EXPECT_EQ(s["inputs"][0]["frames"], 13);
  EXPECT_EQ(s["inputs"][0]["channels"], 7);
}

TEST(CliOracles, FullTrainingThenRepeatableInference) {
  const auto train = scratch("full");
  auto r = run_cli({"toyclone", "train", "--out", train.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(train / "loss.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> losses;
  while (std::getline(in, line)) losses.push_back(std::stod(line.substr(line.find(',') + 1)));
  ASSERT_EQ(losses.size(), 500u);
  double prev = 1e300;
  for (std::size_t block = 0; block < 5; ++block) {
    double mean = 0;
    for (std::size_t i = 0; i < 100; ++i) mean += losses[block * 100 + i] / 100;
    EXPECT_LT(mean, prev) << "block " << block;
    prev = mean;
  }
  const auto ckpt = (train / "model.ckpt").string();
  auto a = run_cli({"toyclone", "infer", "--out", scratch("ia").string(), "--checkpoint", ckpt, "--seed", "3"});
  auto b = run_cli({"toyclone", "infer", "--out", scratch("ib").string(), "--checkpoint", ckpt, "--seed", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(snapshot(scratch_keep("ia") / "generated"), snapshot(scratch_keep("ib") / "generated"));
}
