#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "confcov/io.hpp"
#include "confcov/linalg.hpp"
#include "test_support.hpp"

namespace confcov {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("confcov_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args) const {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string(CONFCOV_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " + err;
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, EstimateRsvpIsAProjection) {
  write_matrix(path("x.csv"), testing::gaussian(6, 40, 1));
  ASSERT_EQ(run("estimate --input " + path("x.csv") + " --output " + path("est.csv") + " --method rsvp").status, 0);
  const Matrix p = read_matrix(path("est.csv"));
  ASSERT_EQ(p.rows(), 40);
  EXPECT_EQ(p, p.transpose());
  EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(p.trace(), 5.0, 1e-8);
}

TEST_F(Cli, EstimateOtherMethods) {
  write_matrix(path("x.csv"), testing::gaussian(11, 60, 2));
  for (const std::string flags : {"--method rsvp-split --m 20 --seed 3", "--method rsvp-sub --m 20 --b 4",
                                  "--method pca-removal --ell 2", "--method pca-removal --ell bai-ng --kmax 4",
                                  "--method empirical"}) {
    const CliResult r = run("estimate --input " + path("x.csv") + " --output " + path("est.csv") + " " + flags);
    EXPECT_EQ(r.status, 0) << flags << ": " << r.err;
    EXPECT_EQ(read_matrix(path("est.csv")).rows(), 60) << flags;
  }
}

TEST_F(Cli, PcOnIdentityIsEmpty) {
  write_matrix(path("id.csv"), Matrix::Identity(5, 5));
  ASSERT_EQ(run("pc --input " + path("id.csv") + " --output " + path("g.csv") + " --tau 0.99").status, 0);
  EXPECT_EQ(slurp(path("g.csv")), "from,to,type\n");
}

TEST_F(Cli, PcOrientsCollider) {
  Matrix w = Matrix::Zero(3, 3);
  w(2, 0) = 0.8;
  w(2, 1) = 0.6;
  write_matrix(path("s.csv"), testing::sem_covariance(w).values());
  ASSERT_EQ(run("pc --input " + path("s.csv") + " --output " + path("g.csv") + " --tau 0.05").status, 0);
  EXPECT_EQ(slurp(path("g.csv")), "from,to,type\n0,2,directed\n1,2,directed\n");
}

TEST_F(Cli, GraphWritesEdgesAndProxy) {
  write_matrix(path("id.csv"), Matrix::Identity(4, 4));
  ASSERT_EQ(run("graph --input " + path("id.csv") + " --output " + path("e.csv") + " --precision " +
                path("prec.csv")).status, 0);
  EXPECT_EQ(slurp(path("e.csv")), "j,k\n");
  EXPECT_EQ(read_matrix(path("prec.csv")), Matrix::Identity(4, 4));
}

TEST_F(Cli, SimulateThenDiagnostics) {
  ASSERT_EQ(run("simulate --scenario toeplitz2 --p 30 --n 10 --nu 2 --seed 4 --out-dir " + path("sim")).status, 0);
  EXPECT_EQ(read_matrix(path("sim/X.csv")).rows(), 11);
  EXPECT_EQ(read_matrix(path("sim/gamma.csv")).cols(), 3);
  const Matrix sigma = read_matrix(path("sim/sigma.csv"));
  const Matrix omega = read_matrix(path("sim/omega.csv"));
  EXPECT_LT((sigma * omega - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-8);

  ASSERT_EQ(run("diagnostics --sigma " + path("sim/sigma.csv") + " --gamma " + path("sim/gamma.csv") +
                " --output " + path("d.json")).status, 0);
  const auto j = nlohmann::json::parse(slurp(path("d.json")));
  EXPECT_EQ(j.at("eta").size(), 30u);
  EXPECT_LE(j.at("rho1").get<double>(), j.at("sigma_u").get<double>() * (1 + 1e-12));
  EXPECT_FALSE(j.at("rank_deficient_loadings").get<bool>());
}

TEST_F(Cli, SimulateIsDeterministic) {
  ASSERT_EQ(run("simulate --scenario erdos_renyi --p 30 --n 8 --df1 3 --seed 9 --out-dir " + path("a")).status, 0);
  ASSERT_EQ(run("simulate --scenario erdos_renyi --p 30 --n 8 --df1 3 --seed 9 --out-dir " + path("b")).status, 0);
  EXPECT_EQ(slurp(path("a/X.csv")), slurp(path("b/X.csv")));
}

TEST_F(Cli, ExperimentMatchesGoldenFile) {
  const CliResult r = run(std::string("experiment --config ") + CONFCOV_SOURCE_DIR + "/configs/small.json --output " +
                          path("out.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(path("out.csv")), slurp(CONFCOV_SOURCE_DIR "/tests/golden/small_experiment.csv"));
}

TEST_F(Cli, ErrorsExitNonzeroWithMessage) {
  write_matrix(path("x.csv"), testing::gaussian(4, 10, 5));
  CliResult r = run("estimate --input " + path("x.csv") + " --output " + path("o.csv") + " --method magic");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("error: InvalidArgument"), std::string::npos) << r.err;

  std::ofstream(path("bad.csv")) << "1,2\n3\n";
  r = run("pc --input " + path("bad.csv") + " --output " + path("o.csv"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("ShapeError"), std::string::npos) << r.err;

  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("estimate --input /nonexistent.csv --output " + path("o.csv")).status, 0);

  std::ofstream(path("cfg.json")) << R"({"scenarios":["block"],"replications":1})";
  r = run("experiment --config " + path("cfg.json") + " --output " + path("o.csv"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("ConfigInvalid"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace confcov
