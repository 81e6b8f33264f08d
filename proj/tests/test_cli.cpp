#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SASMATE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double field(const std::string& text, const std::string& name) {
  std::smatch m;
  if (!std::regex_search(text, m, std::regex("(^|\\n)\\s*" + name + "\\s*=?\\s*([-+0-9.eE]+)"))) return std::nan("");
  return std::stod(m[2]);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("sasmate_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

const std::string kScenarios = SASMATE_SCENARIO_DIR;

}  // namespace

TEST_F(Cli, SldHeavyWater) {
  const auto r = run("sld D2O --density 1.1044");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(field(r.out, "sld_real"), 6.35775, 1e-4) << r.out;
  EXPECT_NEAR(field(r.out, "molar_mass"), 20.0276, 1e-3) << r.out;
}

TEST_F(Cli, SldRejectsBadInput) {
  EXPECT_EQ(run("sld '' --density 1").code, 2);
  EXPECT_EQ(run("sld H2O --density -1").code, 2);
  EXPECT_EQ(run("sld Qq2 --density 1").code, 2);
  EXPECT_EQ(run("sld H2O").code, 2);
}

TEST_F(Cli, GenerateLamellar) {
  const auto r = run("generate --model lamellar --set thickness=50 --qmin 0.01 --qmax 1 --n 200 --out " +
                     path("lam.dat") + " --plot " + path("lam.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(slurp(dir / "lam.dat"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 200);
  EXPECT_NE(slurp(dir / "lam.svg").find("<svg"), std::string::npos);
}

TEST_F(Cli, GenerateIsReproducible) {
  const std::string args = "generate --model sphere --set radius=80 --noise 0.01 --seed 7 --n 50";
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run("generate --model sphere --set radius=80 --noise 0.01 --seed 8 --n 50").out);
}

TEST_F(Cli, GenerateRejectsBadInput) {
  EXPECT_EQ(run("generate --model torus").code, 2);
  EXPECT_EQ(run("generate --model sphere --set radius=-5").code, 2);
  EXPECT_EQ(run("generate --model sphere --set colour=3").code, 2);
  EXPECT_EQ(run("generate --model sphere --qmin 1 --qmax 0.1").code, 2);
}

TEST_F(Cli, FitSphere) {
  ASSERT_EQ(run("generate --model sphere --set radius=80 --set sld=1 --set sld_solvent=6.36 --qmin 0.005 "
                "--qmax 0.3 --n 100 --noise 0.01 --seed 7 --out " + path("s.dat")).code, 0);
  const auto r = run("fit " + path("s.dat") + " --model sphere --fix sld=1 --fix sld_solvent=6.36 --init radius=60 "
                     "--bound radius=10,200 --plot " + path("fit.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(field(r.out, "radius"), 80.0, 1.6) << r.out;
  EXPECT_NE(r.out.find("+/-"), std::string::npos);
  EXPECT_NE(r.out.find("Fixed parameters:"), std::string::npos);
  EXPECT_NEAR(field(r.out, "sld_solvent"), 6.36, 1e-9);
  EXPECT_NE(r.out.find("Reduced chi2:"), std::string::npos);
  EXPECT_NE(slurp(dir / "fit.svg").find("<svg"), std::string::npos);
}

TEST_F(Cli, FitErrors) {
  EXPECT_EQ(run("fit " + path("missing.dat") + " --model sphere").code, 2);
  std::ofstream(dir / "junk.txt") << "hello\nworld\n";
  EXPECT_EQ(run("fit " + path("junk.txt") + " --model sphere").code, 2);
  ASSERT_EQ(run("generate --model sphere --n 50 --noise 0.05 --seed 1 --out " + path("s.dat")).code, 0);
  EXPECT_EQ(run("fit " + path("s.dat") + " --model sphere --max-iter 1 --init radius=10").code, 3);
}

TEST_F(Cli, Models) {
  const auto r = run("models list");
  ASSERT_EQ(r.code, 0);
  for (const char* m : {"sphere", "cylinder", "ellipsoid", "lamellar"}) EXPECT_NE(r.out.find(m), std::string::npos) << m;
  const auto d = run("models doc cylinder");
  ASSERT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("length"), std::string::npos);
  EXPECT_EQ(run("models doc torus").code, 2);
}

TEST_F(Cli, SearchDocs) {
  const auto r = run("search-docs lamellar --k 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("lamellar", 0), 0u) << r.out;
}

TEST_F(Cli, ScriptedChatIsDeterministic) {
  const std::string args = "chat --scenario " + kScenarios + "/sld.json --prompt 'SLD of heavy water'";
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("[sld]"), std::string::npos);
  EXPECT_NE(a.out.find("6.35"), std::string::npos);
}

TEST_F(Cli, ScriptedChatCanonical) {
  ASSERT_EQ(run("generate --model sphere --set radius=80 --set sld=1 --set sld_solvent=6.36 --qmin 0.005 "
                "--qmax 0.3 --n 100 --noise 0.01 --seed 7 --out " + path("s.dat")).code, 0);
  const auto r = run("chat --scenario " + kScenarios + "/canonical.json --upload " + path("s.dat") +
                     " --plot-dir " + path("plots") + " --prompt 'What can you do for me?' --prompt 'Fit my uploaded "
                     "data with the sphere model. The solvent is heavy water'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("[coordinator]"), std::string::npos);
  EXPECT_NE(r.out.find("[fitting]"), std::string::npos);
  EXPECT_NE(r.out.find("Reduced chi2"), std::string::npos);
  EXPECT_FALSE(fs::is_empty(dir / "plots"));
}

TEST_F(Cli, ChatNeedsScenarioForScriptedBackend) {
  EXPECT_EQ(run("chat --prompt hi").code, 2);
  EXPECT_EQ(run("chat --scenario " + path("nope.json") + " --prompt hi").code, 2);
}

TEST_F(Cli, ChatWithoutKeyIsBackendError) {
  ::unsetenv("OPENROUTER_API_KEY");
  const auto r = run("chat --backend openrouter --prompt 'SLD of water' </dev/null");
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_NE(r.out.find("backend failed"), std::string::npos) << r.out;
}
