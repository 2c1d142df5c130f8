#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mist/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mist::cli;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "mist_cli_XXXXXX").string();
    path = mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::vector<std::string> kSmall = {"--stream", "synth-gauss", "--k-classes", "4", "--d", "3",
                                         "--samples-per-class", "150", "--test-per-class", "20", "--tasks", "2"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

void expect_json_error(const Result& r, const std::string& kind) {
  ASSERT_FALSE(r.err.empty());
  const json j = json::parse(r.err);
  EXPECT_EQ(j.at("error").get<std::string>(), kind);
  EXPECT_FALSE(j.at("message").get<std::string>().empty());
}

}  // namespace

TEST(Cli, UsageErrors) {
  const Result none = run({});
  EXPECT_EQ(none.code, kExitUsage);
  expect_json_error(none, "usage");

  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  const Result bad_stream = run({"bench", "--stream", "no-such-stream"});
  EXPECT_EQ(bad_stream.code, kExitUsage);
  expect_json_error(bad_stream, "usage");
  EXPECT_EQ(run(with({"bench"}, {"--method", "forest"})).code, kExitUsage);
  EXPECT_EQ(run(with(with({"bench"}, kSmall), {"--seeds", "0"})).code, kExitUsage);
  EXPECT_EQ(run(with(with({"bench"}, kSmall), {"--param", "noequals"})).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--stream", "ring"}).code, kExitUsage);
  EXPECT_EQ(run({"verify-theory", "--max-n", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"ablate", "--param", "alpha"}).code, kExitUsage);
}

TEST(Cli, Help) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
  EXPECT_NE(r.out.find("verify-theory"), std::string::npos);
}

TEST(Cli, BenchWritesSummaryAndRecords) {
  TempDir tmp;
  unsetenv("MIST_SEED_BASE");
  const Result r = run(with(with({"bench"}, kSmall), {"--method", "mist-k", "--out", tmp.path.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;

  const auto rows = lines(tmp.path / "summary.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].rfind("dataset,method,seed", 0), 0u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].rfind("synth-gauss,mist-k," + std::to_string(i - 1) + ",", 0), 0u) << rows[i];
    EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 8);
  }

  const fs::path rec = tmp.path / "synth-gauss_mist-k_seed3.json";
  ASSERT_TRUE(fs::exists(rec));
  std::ifstream in(rec);
  const json j = json::parse(in);
  EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 3u);
  EXPECT_EQ(j.at("config").at("tree").at("predictor").get<std::string>(), "sketch");
  EXPECT_EQ(j.at("config").at("stream").at("k_classes").get<std::size_t>(), 4u);

  // A second run appends rows without repeating the header.
  ASSERT_EQ(run(with(with({"bench"}, kSmall), {"--method", "ncm", "--seeds", "1", "--out", tmp.path.string()})).code,
            kExitOk);
  const auto more = lines(tmp.path / "summary.csv");
  ASSERT_EQ(more.size(), 7u);
  EXPECT_EQ(more.back().rfind("synth-gauss,ncm,0,", 0), 0u);
}

TEST(Cli, SeedBaseFromEnvironment) {
  TempDir tmp;
  setenv("MIST_SEED_BASE", "100", 1);
  const Result r = run(with(with({"bench"}, kSmall), {"--seeds", "2", "--out", tmp.path.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(tmp.path / "synth-gauss_mist-g_seed100.json"));
  EXPECT_TRUE(fs::exists(tmp.path / "synth-gauss_mist-g_seed101.json"));
  EXPECT_FALSE(fs::exists(tmp.path / "synth-gauss_mist-g_seed0.json"));

  setenv("MIST_SEED_BASE", "abc", 1);
  const Result bad = run(with(with({"bench"}, kSmall), {"--seeds", "1", "--out", tmp.path.string()}));
  EXPECT_EQ(bad.code, kExitUsage);
  expect_json_error(bad, "usage");
  unsetenv("MIST_SEED_BASE");
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  std::ofstream(cfg) << json{{"method", "mist-majority"},
                             {"seeds", 1},
                             {"stream", {{"kind", "ring"}, {"k_classes", 3}, {"d", 2}, {"samples_per_class", 100},
                                         {"test_per_class", 10}, {"tasks", 1}}},
                             {"tree", {{"criterion", {{"grace", 77}}}}}}
                                .dump();
  const Result r = run({"bench", "--config", cfg.string(), "--delta", "0.01", "--out", tmp.path.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(tmp.path / "ring_mist-majority_seed0.json");
  const json j = json::parse(in);
  EXPECT_EQ(j.at("config").at("tree").at("criterion").at("grace").get<int>(), 77);
  EXPECT_DOUBLE_EQ(j.at("config").at("tree").at("criterion").at("delta").get<double>(), 0.01);
  EXPECT_EQ(j.at("config").at("stream").at("k_classes").get<int>(), 3);

  std::ofstream(tmp.path / "broken.json") << "{ not json";
  EXPECT_EQ(run({"bench", "--config", (tmp.path / "broken.json").string()}).code, kExitUsage);
}

TEST(Cli, GenerateThenBenchCsv) {
  TempDir tmp;
  const fs::path csv = tmp.path / "data" / "ring.csv";
  const Result g = run({"generate", "--stream", "ring", "--k-classes", "3", "--samples-per-class", "100",
                        "--test-per-class", "10", "--tasks", "3", "--seed", "5", "--out", csv.string()});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  const json info = json::parse(g.out);
  EXPECT_EQ(info.at("rows").get<std::size_t>(), 300u);
  EXPECT_EQ(lines(csv).size(), 331u);

  const Result b = run({"bench", "--csv", csv.string(), "--method", "sqda", "--seeds", "1", "--out",
                        (tmp.path / "res").string()});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  std::ifstream in(tmp.path / "res" / "ring_sqda_seed0.json");
  const json rec = json::parse(in);
  EXPECT_EQ(rec.at("accuracy_matrix").size(), 3u);
  EXPECT_EQ(rec.at("config").at("stream").at("kind").get<std::string>(), "csv");
}

TEST(Cli, BadCsvIsDataError) {
  TempDir tmp;
  const fs::path csv = tmp.path / "bad.csv";
  std::ofstream(csv) << "a,b,label\n1,2,x\n3,oops,y\n";
  const Result r = run({"bench", "--csv", csv.string(), "--seeds", "1", "--out", (tmp.path / "res").string()});
  EXPECT_EQ(r.code, kExitData);
  expect_json_error(r, "data");
  EXPECT_NE(r.err.find("3"), std::string::npos);
}

TEST(Cli, VerifyTheorySmall) {
  TempDir tmp;
  const fs::path out = tmp.path / "theory.json";
  const Result r = run({"verify-theory", "--max-n", "6", "--trials", "200", "--random-max-n", "10", "--draws",
                        "20000", "--tightness-n", "100", "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(out);
  const json j = json::parse(in);
  for (const auto& [name, ok] : j.at("pass").items()) EXPECT_TRUE(ok.get<bool>()) << name;
  EXPECT_EQ(j.at("dirichlet").size(), 3u);
  EXPECT_EQ(j.at("sensitivity_binary").at("rows").size(), 5u);
}

TEST(Cli, AblateTable) {
  TempDir tmp;
  const fs::path out = tmp.path / "ablate.csv";
  const Result r = run({"ablate", "--stream", "ring,antipodal", "--k-classes", "3", "--samples-per-class", "100",
                        "--test-per-class", "10", "--tasks", "1", "--param", "alpha", "--values", "0,0.5", "--seeds",
                        "1", "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(out);
  ASSERT_EQ(rows.size(), 1u + 2u * 3u);
  EXPECT_EQ(rows[0], "param,value,dataset,method,mean_acc,sd_acc,mean_leaves");
  EXPECT_EQ(rows[1].rfind("alpha,0,ring,mist-g,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("alpha,0,suite-mean,mist-g,", 0), 0u);
  EXPECT_EQ(run({"ablate", "--stream", "ring", "--param", "colour", "--values", "1", "--seeds", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"ablate", "--stream", "ring", "--param", "alpha", "--values", "x", "--seeds", "1"}).code, kExitUsage);
}

TEST(Cli, AuditSketchReport) {
  const Result r = run({"audit-sketch", "--stream", "exponential", "--k-classes", "3", "--samples-per-class", "300",
                        "--test-per-class", "10", "--tasks", "1", "--seeds", "1", "--sketch-k", "64"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("sketch_k").get<int>(), 64);
  EXPECT_TRUE(j.at("streams").contains("exponential"));
  EXPECT_TRUE(j.contains("overall"));
  EXPECT_EQ(run({"audit-sketch", "--method", "slda", "--stream", "exponential"}).code, kExitUsage);
}
