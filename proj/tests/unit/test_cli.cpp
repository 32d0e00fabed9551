#include "cli.hpp"

#include "efg/efg_io.hpp"
#include "efg/mesh.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace efg;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("efg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  // Short fit used by several tests.
  Result quick_fit(const std::string& prefix, std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"fit", "--shape", "sphere:r=0.5", "--variant", "combined", "--deg", "1", "--res", "4",
                               "--iters", "5", "--batch-volume", "64", "--batch-near", "64", "--mean-shift-points",
                               "256", "--seed", "1", "--out", path(prefix)};
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a);
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, FitWritesOutputs) {
  const Result r = quick_fit("s");
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const ParamGrid g = load_efg(path("s.efg"));
  EXPECT_EQ(g.data().size(), 4u * 4 * 4 * 13);
  const std::string loss = slurp(path("s.loss.csv"));
  EXPECT_EQ(loss.rfind("iteration,loss\n", 0), 0u);
  const std::string manifest = slurp(path("s.manifest"));
  EXPECT_NE(manifest.find("command=fit"), std::string::npos);
  EXPECT_NE(manifest.find("seed=1"), std::string::npos);
  EXPECT_NE(manifest.find("status=ok"), std::string::npos);
  EXPECT_NE(manifest.find("param_count=832"), std::string::npos);
}

TEST_F(Cli, FitIsReproducible) {
  ASSERT_EQ(quick_fit("a").code, cli::kOk);
  ASSERT_EQ(quick_fit("b").code, cli::kOk);
  EXPECT_EQ(slurp(path("a.efg")), slurp(path("b.efg")));
  EXPECT_EQ(slurp(path("a.loss.csv")), slurp(path("b.loss.csv")));
}

TEST_F(Cli, UsageErrors) {
  Result r = quick_fit("bad", {"--res", "0"});
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_NE(r.err.find("--res"), std::string::npos);
  EXPECT_EQ(run({"fit", "--shape", path("missing.obj"), "--out", path("m")}).code, cli::kUsageError);
  EXPECT_FALSE(fs::exists(path("m.efg")));
  EXPECT_FALSE(fs::exists(path("m.manifest")));
  EXPECT_EQ(run({"fit"}).code, cli::kUsageError);
  EXPECT_EQ(run({}).code, cli::kUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
  EXPECT_EQ(quick_fit("v", {"--variant", "mlp"}).code, cli::kUsageError);
  EXPECT_EQ(quick_fit("d", {"--variant", "nrbf", "--deg", "2"}).code, cli::kUsageError);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST_F(Cli, NumericalAbortExitCode) {
  const Result r = run({"fit", "--shape", "sphere", "--variant", "func", "--deg", "3", "--res", "3", "--iters", "50",
                        "--lr", "1e200", "--batch-volume", "64", "--batch-near", "64", "--out", path("nan")});
  EXPECT_EQ(r.code, cli::kNumericalAbort);
  EXPECT_TRUE(fs::exists(path("nan.abort.efg")));
  EXPECT_NE(slurp(path("nan.manifest")).find("status=numerical_abort"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithOverride) {
  {
    std::ofstream cfg(path("run.cfg"));
    cfg << "# defaults\nshape = sphere:r=0.5\nvariant=func\ndeg=1\nres=3\niters=3\nbatch_volume=32\nbatch_near=32\nseed=9\n";
  }
  ASSERT_EQ(run({"fit", "--config", path("run.cfg"), "--res", "2", "--out", path("c")}).code, cli::kOk);
  const ParamGrid g = load_efg(path("c.efg"));
  EXPECT_EQ(g.resolution(), 2);
  EXPECT_EQ(g.variant(), Variant::FuncInterp);
  EXPECT_NE(slurp(path("c.manifest")).find("seed=9"), std::string::npos);
  EXPECT_EQ(run({"fit", "--config", path("nope.cfg")}).code, cli::kUsageError);
}

TEST_F(Cli, MeshCommand) {
  ASSERT_EQ(quick_fit("s").code, cli::kOk);
  const Result r = run({"mesh", "--grid", path("s.efg"), "--out", path("s.obj"), "--res", "24", "--normals"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const TriMesh m = load_obj(path("s.obj"));
  EXPECT_TRUE(fs::exists(path("s.obj.manifest")));
  EXPECT_NE(slurp(path("s.obj")).find("vn "), std::string::npos);
  (void)m;

  // A constant positive field has no surface.
  ParamGrid flat({Variant::FuncInterp, Degree::Constant, 2, true});
  for (std::int64_t k = 0; k < flat.key_count(); ++k) flat.at(k, 0) = 1.0;
  save_efg(path("flat.efg"), flat);
  const Result e = run({"mesh", "--grid", path("flat.efg"), "--out", path("flat.obj"), "--res", "8"});
  EXPECT_EQ(e.code, cli::kOk);
  EXPECT_NE(e.err.find("warning"), std::string::npos);
  EXPECT_TRUE(load_obj(path("flat.obj")).empty());
}

TEST_F(Cli, CorruptGridFiles) {
  ASSERT_EQ(quick_fit("s").code, cli::kOk);
  const std::string bytes = slurp(path("s.efg"));
  {
    std::ofstream t(path("trunc.efg"), std::ios::binary);
    t << bytes.substr(0, bytes.size() / 2);
  }
  {
    std::ofstream t(path("magic.efg"), std::ios::binary);
    t << "XXXX" << bytes.substr(4);
  }
  for (const char* name : {"trunc.efg", "magic.efg", "absent.efg"}) {
    EXPECT_EQ(run({"mesh", "--grid", path(name), "--out", path("x.obj")}).code, cli::kUsageError) << name;
    EXPECT_EQ(run({"metrics", "--grid", path(name), "--shape", "sphere"}).code, cli::kUsageError) << name;
  }
}

TEST_F(Cli, MetricsCsv) {
  ASSERT_EQ(quick_fit("s").code, cli::kOk);
  const Result r = run({"metrics", "--grid", path("s.efg"), "--shape", "sphere:r=0.5", "--samples", "500",
                        "--cd-samples", "500", "--mc-res", "16", "--csv", "--manifest", path("m.manifest")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.out.rfind("cd,vol_ae,vol_iou,near_ae,near_iou\n", 0), 0u);
  EXPECT_NE(slurp(path("m.manifest")).find("vol_iou_pct="), std::string::npos);
  EXPECT_EQ(run({"metrics", "--grid", path("s.efg")}).code, cli::kUsageError);
  EXPECT_EQ(run({"metrics", "--grid", path("s.efg"), "--reference", path("none.obj")}).code, cli::kUsageError);
}

TEST_F(Cli, MetricsAgainstOwnMesh) {
  ASSERT_EQ(quick_fit("s", {"--iters", "200", "--lr", "5e-3"}).code, cli::kOk);
  ASSERT_EQ(run({"mesh", "--grid", path("s.efg"), "--out", path("s.obj"), "--res", "32"}).code, cli::kOk);
  const Result r = run({"metrics", "--grid", path("s.efg"), "--reference", path("s.obj"), "--samples", "200",
                        "--cd-samples", "3000", "--mc-res", "32", "--csv", "--manifest", path("m.manifest")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const double cd = std::stod(r.out.substr(r.out.find('\n') + 1));
  // Sampling noise of two independent 3000-point draws on the same surface.
  EXPECT_LT(cd, 60.0);
}

TEST_F(Cli, SpliceCommand) {
  ASSERT_EQ(quick_fit("s").code, cli::kOk);
  ASSERT_EQ(run({"splice", "--a", path("s.efg"), "--b", path("s.efg"), "--axis", "y", "--threshold", "0.2", "--out",
                 path("self.efg")})
                .code,
            cli::kOk);
  EXPECT_EQ(slurp(path("self.efg")), slurp(path("s.efg")));
  EXPECT_TRUE(fs::exists(path("self.efg.manifest")));
  ASSERT_EQ(quick_fit("r5", {"--res", "5"}).code, cli::kOk);
  EXPECT_EQ(run({"splice", "--a", path("s.efg"), "--b", path("r5.efg"), "--out", path("bad.efg")}).code,
            cli::kUsageError);
  EXPECT_EQ(run({"splice", "--a", path("s.efg"), "--b", path("s.efg"), "--axis", "w"}).code, cli::kUsageError);
}

TEST_F(Cli, DecomposeZeroBandsMatchesFit) {
  ASSERT_EQ(quick_fit("f").code, cli::kOk);
  const Result r = run({"decompose", "--shape", "sphere:r=0.5", "--variant", "combined", "--deg", "1", "--res", "4",
                        "--iters", "5", "--batch-volume", "64", "--batch-near", "64", "--mean-shift-points", "256",
                        "--seed", "1", "--bands", "0", "--slice-res", "8", "--out", path("d")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(slurp(path("d.loss.csv")), slurp(path("f.loss.csv")));
  const auto bands = load_stack(path("d.stack"));
  ASSERT_EQ(bands.size(), 1u);
  EXPECT_TRUE(bands[0] == load_efg(path("f.efg")));
  const std::string slices = slurp(path("d.slices.csv"));
  EXPECT_EQ(slices.rfind("band,x,y,value,partial\n", 0), 0u);
  EXPECT_EQ(std::count(slices.begin(), slices.end(), '\n'), 1 + 64);
  EXPECT_TRUE(fs::exists(path("d.manifest")));
}

TEST_F(Cli, BenchCsv) {
  const Result r = run({"bench", "--res", "2,3", "--queries", "64,128", "--manifest", path("b.manifest")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "I,J,fwd_ms,bwd_ms,peak_bytes");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NE(slurp(path("b.manifest")).find("row3="), std::string::npos);
}
