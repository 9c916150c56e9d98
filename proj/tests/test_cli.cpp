#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "ospca/csv.hpp"
#include "ospca/matrix.hpp"

namespace ospca {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ospca_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(OSPCA_CLI) + " " + args + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, DiagonalCovarianceGivesDominantAxis) {
  Matrix d = Matrix::Zero(4, 4);
  d.diagonal() << 1, 2, 7, 3;
  write_matrix_csv(path("cov.csv"), d);
  ASSERT_EQ(run("extract --cov " + path("cov.csv") + " --q 1 --rho 0 --out " + path("out")), 0);
  const Matrix u = read_matrix_csv(path("out/loadings.csv"));
  EXPECT_NEAR(std::abs(u(2, 0)), 1.0, 1e-12);
  const auto summary = nlohmann::json::parse(read("out/summary.json"));
  EXPECT_EQ(summary["cardinality"][0], 1);
}

TEST_F(Cli, DataAndGramPathwaysAgree) {
  ASSERT_EQ(run("gen-data --model angle --m 25 --n 30 --k 3 --seed 4 --out " + path("g")), 0);
  const Matrix a = read_matrix_csv(path("g/data.csv"));
  write_matrix_csv(path("gram.csv"), Matrix(a.transpose() * a));
  const std::string flags = " --q 2 --rho 50 --eps 0.01 --seed 1";
  ASSERT_EQ(run("extract --data " + path("g/data.csv") + flags + " --out " + path("d")), 0);
  ASSERT_EQ(run("extract --cov " + path("gram.csv") + flags + " --out " + path("c")), 0);
  const Matrix ud = read_matrix_csv(path("d/loadings.csv"));
  const Matrix uc = read_matrix_csv(path("c/loadings.csv"));
  EXPECT_LE((ud - uc).cwiseAbs().maxCoeff(), 1e-8);
  const auto sd = nlohmann::json::parse(read("d/summary.json"));
  const auto sc = nlohmann::json::parse(read("c/summary.json"));
  EXPECT_NEAR(sd["cpev"].get<double>(), sc["cpev"].get<double>(), 1e-8);
  EXPECT_EQ(sd["cardinality"], sc["cardinality"]);
}

TEST_F(Cli, TopVarianceSelectionWithHeader) {
  std::ofstream out(path("genes.csv"));
  out << "g1,g2,g3,g4\n";
  out << "1,10,0.1,5\n-1,-12,0.2,4\n2,11,-0.1,-6\n0,-9,0.0,5\n";
  out.close();
  ASSERT_EQ(run("extract --data " + path("genes.csv") +
                " --header --top-var 2 --q 1 --out " + path("o")),
            0);
  const auto s = nlohmann::json::parse(read("o/summary.json"));
  EXPECT_EQ(s["kept_columns"], nlohmann::json({1, 3}));
  EXPECT_EQ(read_matrix_csv(path("o/loadings.csv")).rows(), 2);
}

TEST_F(Cli, ExtractInputErrors) {
  EXPECT_EQ(run("extract"), 2);
  EXPECT_EQ(run("extract --data a.csv --cov b.csv"), 2);
  EXPECT_EQ(run("extract --data " + path("missing.csv")), 2);
  write_matrix_csv(path("rect.csv"), Matrix::Ones(2, 3));
  EXPECT_EQ(run("extract --cov " + path("rect.csv")), 2);
  write_matrix_csv(path("eye.csv"), Matrix::Identity(3, 3));
  EXPECT_EQ(run("extract --cov " + path("eye.csv") + " --q 5"), 2);
  EXPECT_EQ(run("extract --cov " + path("eye.csv") + " --p 3"), 2);
}

TEST_F(Cli, CovestReproducesSampleCovarianceWithoutPenalty) {
  ASSERT_EQ(run("gen-data --model angle --m 10 --n 80 --k 2 --seed 2 --out " + path("g")), 0);
  ASSERT_EQ(run("covest --data " + path("g/data.csv") + " --q 2 --rho 0 --out " + path("c")),
            0);
  const Matrix a = read_matrix_csv(path("g/data.csv"));
  const Matrix s = a.transpose() * a / static_cast<double>(a.rows());
  const Matrix sigma = read_matrix_csv(path("c/sigma.csv"));
  EXPECT_LE((sigma - s).norm() / s.norm(), 1e-5);
  EXPECT_EQ(read_matrix_csv(path("c/spectrum.csv")).cols(), 2);
}

TEST_F(Cli, CovestNeedsShrinkageWhenSamplesAreScarce) {
  ASSERT_EQ(run("gen-data --m 20 --n 8 --k 2 --out " + path("g")), 0);
  EXPECT_EQ(run("covest --data " + path("g/data.csv")), 2);
  EXPECT_NE(read("stderr.txt").find("--delta"), std::string::npos);
  EXPECT_EQ(run("covest --data " + path("g/data.csv") + " --delta 0.2 --out " + path("c")), 0);
  EXPECT_EQ(run("covest --data " + path("g/data.csv") +
                " --delta-grid 0.01,0.1,0.5 --out " + path("c2")),
            0);
  const auto s = nlohmann::json::parse(read("c2/summary.json"));
  EXPECT_TRUE(s["delta"].is_number());
}

TEST_F(Cli, CovestSingularSquareDataIsNumericalFailure) {
  // n = m but the data span only two directions.
  Matrix a = Matrix::Zero(4, 4);
  a(0, 0) = 1;
  a(1, 1) = 2;
  a(2, 0) = -1;
  a(3, 1) = 1;
  write_matrix_csv(path("a.csv"), a);
  EXPECT_EQ(run("covest --data " + path("a.csv")), 3);
  EXPECT_NE(read("stderr.txt").find("delta"), std::string::npos);
}

TEST_F(Cli, CovestBothAlgorithmsRecordMonotoneTraces) {
  ASSERT_EQ(run("gen-data --m 12 --n 30 --k 3 --seed 5 --out " + path("g")), 0);
  for (const std::string alg : {"aoce", "joce"}) {
    ASSERT_EQ(run("covest --data " + path("g/data.csv") + " --algorithm " + alg +
                  " --q 3 --rho 0.05 --eps 0.01 --seed 5 --out " + path(alg)),
              0);
    const auto s = nlohmann::json::parse(read(alg + "/summary.json"));
    const std::vector<double> obj = s["objective"].get<std::vector<double>>();
    ASSERT_GE(obj.size(), 2u);
    for (std::size_t i = 1; i < obj.size(); ++i) {
      EXPECT_LE(obj[i], obj[i - 1] + 1e-9 * std::max(1.0, std::abs(obj[i - 1])));
    }
  }
}

TEST_F(Cli, ExperimentIsByteIdenticalAcrossRuns) {
  const std::string args =
      "experiment --kind recovery_sweep --m 25 --n 15 --trials 3 --grid 0,0.3 --seed 9";
  ASSERT_EQ(run(args + " --out " + path("a.csv")), 0);
  ASSERT_EQ(run(args + " --threads 2 --out " + path("b.csv")), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  EXPECT_EQ(read("a.csv").rfind("spec_hash,trial,seed", 0), 0u);
  ASSERT_EQ(run(args + " --format json --out " + path("c.json")), 0);
  EXPECT_EQ(nlohmann::json::parse(read("c.json")).size(), 3u * 2u * 2u);
}

TEST_F(Cli, ExperimentConfigAndOverrides) {
  std::ofstream(path("spec.json"))
      << R"({"kind": "angle_sweep", "m": 20, "n": 10, "q": 2, "trials": 2, "grid": [0.0]})";
  ASSERT_EQ(run("experiment --config " + path("spec.json") + " --trials 1 --summary"), 0);
  const std::string out = read("stdout.txt");
  EXPECT_NE(out.find("min_angle"), std::string::npos);
  EXPECT_NE(out.find(",1\n"), std::string::npos);  // count column after override

  std::ofstream(path("bad.json")) << R"({"kind": "angle_sweep", "grid": [0, "x"]})";
  EXPECT_EQ(run("experiment --config " + path("bad.json")), 2);
  EXPECT_NE(read("stderr.txt").find("grid[1]"), std::string::npos);
  EXPECT_EQ(run("experiment"), 2);
  EXPECT_EQ(run("experiment --kind angle_sweep --q 1"), 2);
}

TEST_F(Cli, UnknownSubcommandIsConfigError) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--help"), 0);
}

}  // namespace
}  // namespace ospca
