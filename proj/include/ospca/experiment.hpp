#pragma once

// Monte-Carlo experiment harness. An ExperimentSpec describes one protocol on
// synthetic data; run() expands it into independent trials and returns
// long-form result rows, one per (trial, sweep point, algorithm, metric).
//
// Seeding: trial t of a spec draws its data with seed seed_base + t. Random
// model parts (support values, orthonormal completion) use model_seed(), so
// several datasets can share one covariance model.
//
// Penalty weights: for the extraction kinds the grid value gamma is scaled by
// the largest diagonal entry of S = A^T A (rho_j = gamma * max_i S_ii, same
// for every column). For the covariance kinds rho_j = gamma.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ospca/matrix.hpp"

namespace ospca {

enum class ExperimentKind {
  kAngleSweep,     // min off-diagonal angle of IMRP loadings per gamma
  kRecoverySweep,  // exact recovery of the two planted eigenvectors per gamma
  kCpevCurve,      // CPEV against cardinality, IMRP and simple thresholding
  kRelmseCurve,    // RelMSE of covariance estimates per sample size
  kExtract,        // IMRP summary metrics per gamma
  kCovest,         // covariance estimation summary metrics per gamma
};

enum class Algorithm { kImrp, kAoce, kJoce, kBaseline };

std::string to_string(ExperimentKind kind);
std::string to_string(Algorithm algorithm);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kAngleSweep;
  Index m = 200;
  Index n = 50;
  Index q = 2;
  Index k = 5;  // planted sparse eigenvectors in the angle model
  /// gamma values (sweeps, extract, covest), total cardinalities (cpev_curve)
  /// or sample counts (relmse_curve).
  std::vector<double> grid;
  /// Penalty levels tried at every grid point of cpev_curve and relmse_curve.
  std::vector<double> gammas;
  int trials = 1;  // datasets per model
  int models = 1;  // independent covariance models
  std::uint64_t seed_base = 0;
  std::vector<Algorithm> algorithms;
  double p = 0.1;
  double eps = 1e-2;
  double threshold = 1e-12;
  double tol = 1e-7;
  std::optional<int> max_iter;  // solver default when unset
  std::optional<double> delta;  // fixed shrinkage
  /// Shrinkage candidates; for n <= m the one closest to Sigma in Frobenius
  /// norm is used by the covariance kinds when `delta` is unset.
  std::vector<double> delta_grid{0.01, 0.05, 0.1, 0.2, 0.5};
  int threads = 1;
  bool timing = false;  // record wall time (makes output nondeterministic)

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::string to_json() const;
  /// Parses a JSON object. Unknown keys and wrong types are ConfigErrors.
  static ExperimentSpec from_json(const std::string& text);
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

/// Defaults per kind (grid, algorithms, sizes).
ExperimentSpec default_spec(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);
Algorithm parse_algorithm(const std::string& name);

struct ResultRecord {
  std::uint64_t spec_hash = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kImrp;
  double sweep_value = 0.0;
  double gamma = 0.0;  // penalty level, when not the sweep variable
  std::string metric;
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
  double wall_time = 0.0;
};

std::uint64_t model_seed(std::uint64_t seed_base, int model);

/// Runs every trial. Rows are ordered by trial, then by the order in which
/// the trial produced them, independent of `threads`.
std::vector<ResultRecord> run(const ExperimentSpec& spec);

/// Rows of one trial (trial = model * trials + dataset).
std::vector<ResultRecord> run_trial(const ExperimentSpec& spec, int trial);

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& rows);
void write_records_json(std::ostream& out, const std::vector<ResultRecord>& rows);

struct MetricSummary {
  Algorithm algorithm;
  double sweep_value;
  double gamma;
  std::string metric;
  double mean;
  double min;
  double max;
  int count;
};

/// Mean, min and max over trials for every (algorithm, sweep, gamma, metric),
/// sorted by that key.
std::vector<MetricSummary> summarize(const std::vector<ResultRecord>& rows);

}  // namespace ospca
