#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "parcon/cli.hpp"
#include "parcon/errors.hpp"

using namespace parcon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("parcon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(Cli, MeshInfo) {
  const auto r = run({"mesh-info", "--n", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("vertices: 21\n"), std::string::npos);
  EXPECT_NE(r.out.find("triangles: 24\n"), std::string::npos);
  EXPECT_NE(r.out.find("interior_dofs: 5\n"), std::string::npos);
  EXPECT_NE(r.out.find("h: 0.353553\n"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run({"study", "--bogus", "1"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitValidation);
  EXPECT_EQ(run({"frobnicate"}).code, kExitValidation);
}

TEST(Cli, InvalidValuesAreValidationErrors) {
  EXPECT_EQ(run({"mesh-info", "--n", "3"}).code, kExitValidation);
  EXPECT_EQ(run({"gradcheck", "--ua", "0.2"}).code, kExitValidation);
  EXPECT_EQ(run({"study", "--levels", "4,4"}).code, kExitValidation);
  EXPECT_EQ(run({"solve", "--problem", "nope"}).code, kExitValidation);
}

TEST(Cli, GradientCheck) {
  const auto r = run({"gradcheck", "--n", "4", "--steps", "4"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  ASSERT_EQ(r.out.rfind("max relative error: ", 0), 0u);
  EXPECT_LE(std::stod(r.out.substr(20)), 1e-5);
}

TEST_F(CliFiles, StudyWritesReport) {
  const auto csv = dir_ / "report.csv";
  const auto r = run({"study", "--levels", "4,8,16", "--out", csv.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(slurp(csv));
  std::vector<std::string> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(l);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "level,h,dof,N,err_y,err_z,err_u,rate_y,rate_z,rate_u");
  EXPECT_TRUE(rows[1].ends_with(",,,"));
  for (int i : {2, 3}) {
    EXPECT_FALSE(rows[static_cast<std::size_t>(i)].ends_with(","));
    EXPECT_EQ(std::count(rows[static_cast<std::size_t>(i)].begin(), rows[static_cast<std::size_t>(i)].end(), ','), 9);
  }
  EXPECT_TRUE(fs::exists(dir_ / "report_final_time.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "report.svg"));
  EXPECT_EQ(r.out, slurp(csv));
}

TEST_F(CliFiles, StudyIsByteIdentical) {
  const auto a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(run({"study", "--levels", "4,8", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(run({"study", "--levels", "4,8", "--threads", "2", "--out", b.string()}).code, kExitOk);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(dir_ / "a.svg"), slurp(dir_ / "b.svg"));
}

TEST_F(CliFiles, SolveWritesThreeCsvFiles) {
  const auto prefix = dir_ / "run";
  const auto r = run({"solve", "--n", "4", "--steps", "4", "--out", prefix.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("kkt_residual: "), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "run_state.csv").substr(0, 29), "level,vertex_index,x,y,value\n");
  EXPECT_TRUE(slurp(dir_ / "run_costate.csv").starts_with("level,vertex_index,x,y,value\n"));
  EXPECT_TRUE(slurp(dir_ / "run_control.csv").starts_with("interval,triangle,centroid_x,centroid_y,value\n"));
}

TEST_F(CliFiles, MeshInfoWritesMesh) {
  const auto path = dir_ / "mesh.txt";
  ASSERT_EQ(run({"mesh-info", "--n", "2", "--out", path.string()}).code, kExitOk);
  EXPECT_TRUE(slurp(path).starts_with("mesh-v1\n8 6\n"));
}

TEST_F(CliFiles, ConfigFileWithFlagOverride) {
  const auto cfg = dir_ / "run.cfg";
  std::ofstream(cfg) << "# coarse check\nn = 8\nalpha=1\n";
  const auto r = run({"mesh-info", "--config", cfg.string()});
  EXPECT_NE(r.out.find("vertices: 65\n"), std::string::npos) << r.out << r.err;
  const auto o = run({"mesh-info", "--config", cfg.string(), "--n", "4"});
  EXPECT_NE(o.out.find("vertices: 21\n"), std::string::npos);
  EXPECT_EQ(run({"mesh-info", "--config", (dir_ / "missing.cfg").string()}).code, kExitValidation);
}

TEST(ParseConfig, EmptyGivesDefaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.bounds.lower, -0.5);
  EXPECT_EQ(c.bounds.upper, 0.1);
  EXPECT_EQ(c.tol, 1e-8);
  EXPECT_EQ(c.max_iter, 500);
  EXPECT_EQ(c.problem, "lshape-measure");
  EXPECT_EQ(c.levels, (std::vector<int>{4, 8, 16, 32}));
}

TEST(ParseConfig, SingleOverride) {
  const RunConfig c = parse_config("alpha=2.5\n");
  EXPECT_EQ(c.alpha, 2.5);
  EXPECT_EQ(c.tol, 1e-8);
  EXPECT_EQ(c.bounds.upper, 0.1);
}

TEST(ParseConfig, AllKeys) {
  const RunConfig c = parse_config(
      "command=study\nproblem=lshape-consistent\nn=6\nlevels=4, 8,16\nsteps=12\nalpha=0.5\nu_a=-1\nu_b=1\n"
      "step=0.25\ntol=1e-6\nmax_iter=20\nout=x.csv # trailing comment\nthreads=2\n");
  EXPECT_EQ(c.command, "study");
  EXPECT_EQ(c.problem, "lshape-consistent");
  EXPECT_EQ(c.n, 6);
  EXPECT_EQ(c.levels, (std::vector<int>{4, 8, 16}));
  EXPECT_EQ(c.steps, 12);
  EXPECT_EQ(c.bounds.lower, -1.0);
  EXPECT_EQ(c.step, 0.25);
  EXPECT_EQ(c.max_iter, 20);
  EXPECT_EQ(c.out, "x.csv");
  EXPECT_EQ(c.threads, 2u);
}

TEST(ParseConfig, InconsistentBounds) { EXPECT_THROW(parse_config("u_a=0.2\n"), ValidationError); }

TEST(ParseConfig, UnknownKey) {
  try {
    parse_config("alpha=1\nbeta=2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
}

TEST(ParseConfig, TypeMismatchNamesKey) {
  try {
    parse_config("max_iter=lots\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("max_iter"), std::string::npos);
  }
  EXPECT_THROW(parse_config("alpha=1.0x\n"), ParseError);
  EXPECT_THROW(parse_config("just a line\n"), ParseError);
}
