#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifdef USERBOOST_CLI_PATH

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(USERBOOST_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("userboost_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthDatasetWritesManifest) {
  const auto r = run("synth-dataset --users 2 --gestures 6 --seed 3 --out " + path("ds"));
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(path("ds/run_manifest.json")));
  const auto m = nlohmann::json::parse(slurp(path("ds/run_manifest.json")));
  EXPECT_EQ(m.at("command"), "synth-dataset");
  EXPECT_EQ(m.at("config").at("seed"), 3);
  EXPECT_EQ(m.at("config").at("data.users"), 2);
  EXPECT_TRUE(m.contains("config_hash"));
  EXPECT_FALSE(m.at("outputs").empty());
}

TEST_F(Cli, ManifestReplayReproducesOutputs) {
  ASSERT_EQ(run("synth-dataset --users 2 --gestures 6 --seed 3 --out " + path("a")).code, 0);
  ASSERT_EQ(run("synth-dataset --config " + path("a/run_manifest.json") + " --out " + path("b")).code, 0);
  for (const auto& e : fs::directory_iterator(path("a"))) {
    if (e.path().filename() == "run_manifest.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(path("b") / e.path().filename())) << e.path();
  }
  const auto ma = nlohmann::json::parse(slurp(path("a/run_manifest.json")));
  const auto mb = nlohmann::json::parse(slurp(path("b/run_manifest.json")));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
}

TEST_F(Cli, DryRunHasNoSideEffects) {
  const auto r = run("synth-dataset --users 2 --gestures 6 --dry-run --out " + path("dry"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(fs::exists(path("dry")));
  EXPECT_NE(r.out.find("data.users"), std::string::npos);
}

TEST_F(Cli, ConfigLayering) {
  std::ofstream(path("cfg.json")) << R"({"data": {"users": 3, "gestures": 5}, "seed": 9})";
  const auto r = run("synth-dataset --config " + path("cfg.json") + " --gestures 7 --dry-run --out " + path("x"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out.substr(r.out.find('{'))).at("config");
  EXPECT_EQ(j.at("data.users"), 3);
  EXPECT_EQ(j.at("data.gestures"), 7);
  EXPECT_EQ(j.at("seed"), 9);
  const auto env = run("synth-dataset --config " + path("cfg.json") + " --dry-run --out x --set seed=11",
                       "USERBOOST_DATA_USERS=6 USERBOOST_SEED=10 USERBOOST_DATA_GESTURES=4");
  ASSERT_EQ(env.code, 0) << env.out;
  const auto k = nlohmann::json::parse(env.out.substr(env.out.find('{'))).at("config");
  EXPECT_EQ(k.at("data.users"), 6);
  EXPECT_EQ(k.at("data.gestures"), 4);
  EXPECT_EQ(k.at("seed"), 11);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("synth-dataset").code, 1);  // --out missing
  EXPECT_EQ(run("synth-dataset --out " + path("d") + " --set bogus.key=1").code, 1);
  EXPECT_EQ(run("synth-dataset --out " + path("d") + " --users 1").code, 1);
  std::ofstream(path("bad.json")) << R"({"nope": 1})";
  EXPECT_EQ(run("synth-dataset --out " + path("d") + " --config " + path("bad.json")).code, 1);
}

TEST_F(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(run("split --data " + path("missing") + " --out " + path("s")).code, 2);
  std::ofstream(path("raw.csv")) << "user_id,terminal_id,label,gesture_id,t,sensor,x,y,z\n1,1,gesture,0,zero,accel,0,0,0\n";
  const auto r = run("ingest --raw " + path("raw.csv") + " --out " + path("ds"));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_EQ(run("eval --forest " + path("raw.csv") + " --data " + path("raw.csv") + " --user 1 --out " + path("e")).code, 2);
}

TEST_F(Cli, SplitAndBaselineAuthentication) {
  ASSERT_EQ(run("synth-dataset --users 3 --gestures 21 --out " + path("ds")).code, 0);
  ASSERT_EQ(run("split --data " + path("ds") + " --out " + path("split")).code, 0);
  const auto r = run("train-auth --data " + path("split") + " --user 1 --set forest.trees=10 --out " + path("f.rf"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto e = run("eval --forest " + path("f.rf") + " --data " + path("split") + " --user 1 --out " + path("eval"));
  ASSERT_EQ(e.code, 0) << e.out;
  EXPECT_TRUE(fs::exists(path("eval/run_manifest.json")));
}

#endif
