#include "rootprobe/cli.hpp"

#include <sys/wait.h>

#include <gtest/gtest.h>

#include <cstdio>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rootprobe/classifier.hpp"
#include "rootprobe/profiles_io.hpp"
#include "rootprobe/simulator.hpp"

namespace rootprobe::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("rootprobe-cli-" + std::to_string(rd()));
  fs::create_directories(dir);
  return dir;
}

// `fixed` pins every delay to the profile mean, which keeps verdicts clear of sampling noise.
std::unique_ptr<sim::Responder> profile_responder(const std::string& key, std::uint64_t seed,
                                                  bool fixed = false) {
  auto profiles = builtin_profiles();
  auto pooled = find_profile(profiles, key)->pooled();
  sim::SimDeviceConfig cfg;
  cfg.model = sim::fit_latency_model(pooled.mean, fixed ? 0.0 : pooled.stddev);
  cfg.model.seed = seed;
  return sim::serve(cfg);
}

TEST(Usage, ZeroRunsIsUsageError) {
  auto r = run({"probe", "127.0.0.1", "--runs", "0"});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("usage error"), std::string::npos);
}

TEST(Usage, UnknownFlagAndMissingSubcommand) {
  EXPECT_EQ(run({"probe", "127.0.0.1", "--bogus"}).code, kUsageError);
  EXPECT_EQ(run({}).code, kUsageError);
  EXPECT_EQ(run({"classify"}).code, kUsageError);
  EXPECT_EQ(run({"--format", "xml", "profiles"}).code, kUsageError);
}

TEST(Usage, HelpSucceeds) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, kSuccess);
  EXPECT_NE(r.out.find("classify"), std::string::npos);
}

TEST(Profiles, ListShowExport) {
  auto list = run({"profiles", "--profiles", "builtin", "list"});
  EXPECT_EQ(list.code, kSuccess);
  EXPECT_EQ(list.out, "S4-rooted\nS5-rooted\nS5-stock\n");

  auto show = run({"--format", "structured", "profiles", "show", "S5-stock"});
  ASSERT_EQ(show.code, kSuccess);
  auto j = nlohmann::json::parse(show.out);
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["runs"][0]["mean"].get<double>(), 5.90);

  EXPECT_EQ(run({"profiles", "show", "S4-stock"}).code, kOperationalError);

  auto dir = scratch_dir();
  auto file = (dir / "p.json").string();
  EXPECT_EQ(run({"profiles", "export", file}).code, kSuccess);
  EXPECT_EQ(io::load_profiles(file), builtin_profiles());
  EXPECT_EQ(run({"profiles", "--profiles", file, "list"}).out, list.out);
  fs::remove_all(dir);
}

TEST(Classify, InseparableReferencesExitZero) {
  auto dir = scratch_dir();
  auto s4 = *find_profile(builtin_profiles(), "S4-rooted");
  auto s4_stock = s4;
  s4_stock.configuration = Configuration::stock;
  auto profiles_file = (dir / "p.json").string();
  io::save_profiles(profiles_file, {s4, s4_stock});
  auto csv = (dir / "c.csv").string();
  io::write_file(csv, "run,index,rtt_ms,outcome\n0,0,250.000,answered\n0,1,300.000,answered\n");

  auto r = run({"--format", "structured", "classify", "--input", csv, "--profiles", profiles_file,
                "--rooted", "S4-rooted", "--stock", "S4-stock"});
  EXPECT_EQ(r.code, kSuccess) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["label"], "inconclusive");
  EXPECT_FALSE(j["warnings"].empty());
  fs::remove_all(dir);
}

TEST(Classify, MissingInputFile) {
  EXPECT_EQ(run({"classify", "--input", "/nonexistent/x.csv"}).code, kOperationalError);
}

TEST(EndToEnd, StockSimulatorProbeThenClassify) {
  auto responder = profile_responder("S5-stock", 11, true);
  auto dir = scratch_dir();
  auto csv = (dir / "campaign.csv").string();
  auto target = responder->endpoint().to_string();

  auto probe = run({"probe", target, "--gap", "0", "--timeout", "1000", "--seed", "4",
                    "--no-overhead", "--thermal", "warm", "--out", csv});
  ASSERT_EQ(probe.code, kSuccess) << probe.err;
  EXPECT_NE(probe.out.find("300 samples, 300 answered"), std::string::npos) << probe.out;

  auto classify = run({"classify", "--input", csv, "--thermal", "warm"});
  EXPECT_EQ(classify.code, kSuccess) << classify.err;
  EXPECT_NE(classify.out.find("label: stock-leaning"), std::string::npos) << classify.out;
  fs::remove_all(dir);
}

TEST(EndToEnd, RootedSimulatorExitsThree) {
  auto responder = profile_responder("S5-rooted", 29);
  auto r = run({"--format", "structured", "classify", "--target", responder->endpoint().to_string(),
                "--gap", "0", "--seed", "1", "--no-overhead", "--thermal", "warm"});
  auto j = nlohmann::json::parse(r.out);
  if (j["label"] == "rooted-leaning")
    EXPECT_EQ(r.code, kRootedLeaning);
  else
    EXPECT_EQ(r.code, kSuccess);
  EXPECT_NE(j["label"], "stock-leaning");
}

TEST(EndToEnd, ScanAgainstSimulator) {
  auto responder = profile_responder("S5-stock", 2);
  auto port = std::to_string(responder->endpoint().port);
  auto r = run({"--format", "structured", "scan", "127.0.0.1", "--dns-port", port, "--ports",
                port + "/udp", "--timeout", "500"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["dns_functional"].get<bool>());
  EXPECT_EQ(j["probed_ports"][0]["state"], "open");
}

TEST(LocalCheck, StructuredReportOnEmptyRoot) {
  auto dir = scratch_dir();
  fs::create_directories(dir / "tmp");
  fs::create_directories(dir / "data/data");
  auto r = run({"--format", "structured", "local-check", "--fs-root", dir.string()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["checks"].size(), 5u);
  fs::remove_all(dir);
}

TEST(Binary, SimulateRunsForDuration) {
  std::string cmd = std::string(ROOTPROBE_CLI_PATH) +
                    " simulate --mean 2 --stddev 1 --port 0 --duration 0.3 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  char line[256] = {};
  ASSERT_NE(std::fgets(line, sizeof line, pipe), nullptr);
  EXPECT_EQ(std::string(line).rfind("listening on 127.0.0.1:", 0), 0u) << line;
  int status = ::pclose(pipe);
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Binary, InfeasibleMeanIsOperationalError) {
  std::string cmd = std::string(ROOTPROBE_CLI_PATH) +
                    " simulate --mean 0.1 --port 0 --duration 0.1 >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), kOperationalError);
}

}  // namespace
}  // namespace rootprobe::cli
