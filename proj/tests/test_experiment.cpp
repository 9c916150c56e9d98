#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ospca/experiment.hpp"

namespace ospca {
namespace {

ExperimentSpec small_recovery() {
  ExperimentSpec spec = default_spec(ExperimentKind::kRecoverySweep);
  spec.m = 30;
  spec.n = 20;
  spec.trials = 5;
  spec.grid = {0.0, 0.1, 0.3, 1.0};
  return spec;
}

std::string csv_of(const std::vector<ResultRecord>& rows) {
  std::ostringstream out;
  write_records_csv(out, rows);
  return out.str();
}

std::size_t count_metric(const std::vector<ResultRecord>& rows, const std::string& metric) {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [&](const ResultRecord& r) { return r.metric == metric; }));
}

TEST(Experiment, RecoveryRowCount) {
  const std::vector<ResultRecord> rows = run(small_recovery());
  EXPECT_EQ(count_metric(rows, "recovery"), 5u * 4u);
  for (const ResultRecord& r : rows) {
    if (r.metric == "recovery") EXPECT_TRUE(r.value == 0.0 || r.value == 1.0);
    EXPECT_EQ(r.seed, static_cast<std::uint64_t>(r.trial));
  }
}

TEST(Experiment, AngleSweepSchema) {
  ExperimentSpec spec = default_spec(ExperimentKind::kAngleSweep);
  spec.m = 30;
  spec.n = 15;
  spec.q = 3;
  spec.trials = 2;
  spec.models = 2;
  spec.grid = {0.0, 0.2};
  const std::vector<ResultRecord> rows = run(spec);
  EXPECT_EQ(count_metric(rows, "min_angle"), 2u * 2u * 2u);
  for (const ResultRecord& r : rows) {
    if (r.metric == "min_angle") EXPECT_GE(r.value, 89.99);
  }
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  ExperimentSpec spec = small_recovery();
  spec.seed_base = 77;
  const std::string first = csv_of(run(spec));
  EXPECT_EQ(first, csv_of(run(spec)));
  spec.threads = 3;
  EXPECT_EQ(first, csv_of(run(spec)));
}

TEST(Experiment, TrialsAreIndependent) {
  const ExperimentSpec spec = small_recovery();
  const std::vector<ResultRecord> all = run(spec);
  std::vector<ResultRecord> reversed;
  for (int t = spec.trials - 1; t >= 0; --t) {
    const std::vector<ResultRecord> rows = run_trial(spec, t);
    reversed.insert(reversed.end(), rows.begin(), rows.end());
  }
  std::stable_sort(reversed.begin(), reversed.end(),
                   [](const ResultRecord& a, const ResultRecord& b) { return a.trial < b.trial; });
  EXPECT_EQ(csv_of(all), csv_of(reversed));
}

TEST(Experiment, RelmseCurveEmitsShrunkReference) {
  ExperimentSpec spec = default_spec(ExperimentKind::kRelmseCurve);
  spec.m = 15;
  spec.k = 3;
  spec.q = 3;
  spec.trials = 2;
  spec.grid = {10, 30};
  spec.gammas = {0.01};
  const std::vector<ResultRecord> rows = run(spec);
  std::size_t baseline = 0;
  std::size_t estimators = 0;
  for (const ResultRecord& r : rows) {
    if (r.metric != "rel_mse") continue;
    if (r.algorithm == Algorithm::kBaseline) ++baseline;
    else ++estimators;
  }
  EXPECT_EQ(baseline, 2u * 2u);
  EXPECT_EQ(estimators, 2u * 2u * 2u);
}

TEST(Experiment, CpevCurveIsMonotoneAndReachesOne) {
  ExperimentSpec spec = default_spec(ExperimentKind::kCpevCurve);
  spec.m = 20;
  spec.n = 20;
  spec.trials = 1;
  spec.grid.clear();
  for (int c = 1; c <= 20; ++c) spec.grid.push_back(2.0 * c);
  const std::vector<ResultRecord> rows = run(spec);
  std::vector<double> curve;
  for (const ResultRecord& r : rows) {
    if (r.algorithm == Algorithm::kImrp) curve.push_back(r.value);
  }
  ASSERT_EQ(curve.size(), 20u);
  EXPECT_TRUE(std::is_sorted(curve.begin(), curve.end()));
  EXPECT_NEAR(curve.back(), 1.0, 1e-9);
}

TEST(Experiment, SummarizeAverages) {
  std::vector<ResultRecord> rows(3);
  rows[0].metric = rows[1].metric = rows[2].metric = "x";
  rows[0].value = 1.0;
  rows[1].value = 2.0;
  rows[2].value = 6.0;
  rows[2].sweep_value = 1.0;
  const std::vector<MetricSummary> s = summarize(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0].mean, 1.5);
  EXPECT_EQ(s[0].count, 2);
  EXPECT_DOUBLE_EQ(s[1].max, 6.0);
}

TEST(ExperimentSpec, JsonRoundTripAndHash) {
  const ExperimentSpec spec = small_recovery();
  const ExperimentSpec back = ExperimentSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  EXPECT_EQ(back.hash(), spec.hash());
  ExperimentSpec other = spec;
  other.seed_base = 1;
  EXPECT_NE(other.hash(), spec.hash());
}

TEST(ExperimentSpec, ErrorsNameTheField) {
  auto path_of = [](const std::string& text) {
    try {
      ExperimentSpec::from_json(text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of("{\"kind\":\"angle_sweep\",\"grid\":[0,\"x\"]}"), "grid[1]");
  EXPECT_EQ(path_of("{\"kind\":\"angle_sweep\",\"grid\":[]}"), "grid");
  EXPECT_EQ(path_of("{\"kind\":\"angle_sweep\",\"trials\":0}"), "trials");
  EXPECT_EQ(path_of("{\"kind\":\"nope\"}"), "kind");
  EXPECT_EQ(path_of("{\"grid\":[1]}"), "kind");
  EXPECT_EQ(path_of("{\"kind\":\"angle_sweep\",\"bogus\":1}"), "bogus");
  EXPECT_EQ(path_of("{\"kind\":\"recovery_sweep\",\"algorithms\":[\"aoce\"]}"),
            "algorithms[0]");
  EXPECT_EQ(path_of("{\"kind\":\"covest\",\"delta_grid\":[0.1, 2]}"), "delta_grid[1]");
  EXPECT_EQ(path_of("{\"kind\":\"angle_sweep\",\"q\":1}"), "q");
  EXPECT_EQ(path_of("[1,2]"), "$");
  EXPECT_EQ(path_of("{"), "$");
}

}  // namespace
}  // namespace ospca
