// ospca: sparse orthogonal eigenvectors and sparse-eigenvector covariance
// estimation from the command line.
//
//   ospca extract    --data A.csv | --cov S.csv  [--q --rho ...]  [--out DIR]
//   ospca covest     --data A.csv [--algorithm aoce|joce] [--delta | --delta-grid]
//   ospca gen-data   --model angle|recovery --m --n [--k] [--seed] [--out DIR]
//   ospca experiment [--config spec.json | --kind KIND] [overrides] [--out FILE]
//
// Exit status: 0 success, 2 configuration or input error, 3 numerical failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "ospca/covest.hpp"
#include "ospca/csv.hpp"
#include "ospca/experiment.hpp"
#include "ospca/imrp.hpp"
#include "ospca/metrics.hpp"
#include "ospca/synth.hpp"

namespace {

using namespace ospca;
using json = nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<Index> q;
  std::vector<double> rho;
  std::optional<double> p;
  std::optional<double> eps;
  std::optional<double> threshold;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> delta;
  std::string out;
  std::string format = "json";
  bool header = false;
  std::optional<Index> top_var;
};

void add_common(CLI::App* app, Common& c, bool solver = true) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory (file for experiment)");
  app->add_option("--format", c.format, "Summary / record format")
      ->check(CLI::IsMember({"csv", "json"}));
  if (!solver) return;
  app->add_option("--q", c.q, "Number of sparse eigenvectors")->check(CLI::PositiveNumber);
  app->add_option("--rho", c.rho, "Penalty weight, one value or one per eigenvector")
      ->delimiter(',');
  app->add_option("--p", c.p, "Curvature of the log penalty");
  app->add_option("--eps", c.eps, "Width of the quadratic core of the penalty");
  app->add_option("--threshold", c.threshold, "Hard threshold on final loadings");
  app->add_option("--tol", c.tol, "Relative objective tolerance");
  app->add_option("--max-iter", c.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  app->add_flag("--header", c.header, "Input CSV starts with a header row");
  app->add_option("--top-var", c.top_var,
                  "Keep only the variables with the largest variance")
      ->check(CLI::PositiveNumber);
}

std::vector<double> expand_rho(const std::vector<double>& rho, Index q) {
  if (rho.empty()) return std::vector<double>(static_cast<std::size_t>(q), 0.0);
  if (rho.size() == 1) return std::vector<double>(static_cast<std::size_t>(q), rho[0]);
  if (static_cast<Index>(rho.size()) != q) {
    throw ConfigError("--rho", fmt::format("expected 1 or {} values", q));
  }
  return rho;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir + "': " + ec.message());
}

/// Flat key/value summary in the requested format.
std::string render_summary(const json& summary, const std::string& format) {
  if (format == "json") return summary.dump(2) + "\n";
  std::ostringstream out;
  out << "key,value\n";
  for (const auto& [key, value] : summary.items()) {
    if (value.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) joined += ';';
        joined += value[i].dump();
      }
      out << key << ',' << joined << '\n';
    } else if (value.is_string()) {
      out << key << ',' << value.get<std::string>() << '\n';
    } else {
      out << key << ',' << value.dump() << '\n';
    }
  }
  return out.str();
}

/// Indices of the `keep` largest values, returned in increasing index order.
std::vector<Index> top_indices(const Vector& values, Index keep) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  idx.resize(static_cast<std::size_t>(std::min(keep, values.size())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---- extract ----------------------------------------------------------------

struct ExtractArgs {
  Common c;
  std::string data;
  std::string cov;
  bool center = false;
  std::string init = "leading";
};

int run_extract(const ExtractArgs& args) {
  const Common& c = args.c;
  std::optional<DataMatrix> data;
  SymmetricMatrix s;
  std::vector<Index> kept;
  if (!args.data.empty()) {
    Matrix a = read_matrix_csv(args.data, c.header);
    if (args.center) a.rowwise() -= a.colwise().mean();
    if (c.top_var) {
      const Vector var =
          (a.rowwise() - a.colwise().mean()).colwise().squaredNorm().transpose();
      kept = top_indices(var, *c.top_var);
      Matrix sub(a.rows(), static_cast<Index>(kept.size()));
      for (std::size_t j = 0; j < kept.size(); ++j) sub.col(static_cast<Index>(j)) = a.col(kept[j]);
      a = std::move(sub);
    }
    data.emplace(std::move(a));
    s = sample_covariance(*data, CovarianceMode::kScaledGram);
  } else {
    const Matrix raw = read_matrix_csv(args.cov, c.header);
    if (raw.rows() != raw.cols()) {
      throw ConfigError("--cov", fmt::format("expected a square matrix, got {} x {}",
                                             raw.rows(), raw.cols()));
    }
    if ((raw - raw.transpose()).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, raw.cwiseAbs().maxCoeff())) {
      throw ConfigError("--cov", "matrix is not symmetric");
    }
    Matrix m = raw;
    if (c.top_var) {
      kept = top_indices(raw.diagonal(), *c.top_var);
      m.resize(static_cast<Index>(kept.size()), static_cast<Index>(kept.size()));
      for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < kept.size(); ++j)
          m(static_cast<Index>(i), static_cast<Index>(j)) = raw(kept[i], kept[j]);
    }
    s = SymmetricMatrix(m);
  }

  const Index q = c.q.value_or(1);
  if (q > s.dim()) throw ConfigError("--q", fmt::format("must not exceed m = {}", s.dim()));
  ImrpConfig cfg = ImrpConfig::defaults(q);
  cfg.penalty.rho = expand_rho(c.rho, q);
  if (c.p) cfg.penalty.p = *c.p;
  if (c.eps) cfg.penalty.eps = *c.eps;
  if (c.threshold) cfg.penalty.threshold = *c.threshold;
  if (c.tol) cfg.tol = *c.tol;
  if (c.max_iter) cfg.max_iter = *c.max_iter;
  cfg.seed = c.seed.value_or(0);
  cfg.init = args.init == "random" ? InitKind::kRandomStiefel : InitKind::kLeadingEigs;
  try {
    cfg.validate(s.dim());
  } catch (const ParameterError& e) {
    throw ConfigError("extract", e.what());
  } catch (const DimensionError& e) {
    throw ConfigError("extract", e.what());
  }

  const ImrpResult r = imrp(s, cfg);
  const Matrix u = hard_threshold(r.frame.matrix(), cfg.penalty.threshold);

  json summary;
  summary["m"] = s.dim();
  summary["q"] = q;
  summary["iterations"] = r.trace.iterations;
  summary["converged"] = r.trace.converged;
  summary["objective"] = r.trace.objective.back();
  summary["cpev"] = data ? cpev(*data, u) : cpev_from_gram(s, u);
  std::vector<Index> card = column_cardinality(u);
  summary["cardinality"] = card;
  if (q >= 2) summary["min_angle"] = min_offdiag_angle(u);
  if (!kept.empty()) summary["kept_columns"] = kept;

  if (c.out.empty()) {
    write_matrix_csv(std::cout, u);
    std::cerr << render_summary(summary, c.format);
  } else {
    ensure_dir(c.out);
    write_matrix_csv(join_path(c.out, "loadings.csv"), u);
    write_text(join_path(c.out, c.format == "json" ? "summary.json" : "summary.csv"),
               render_summary(summary, c.format));
  }
  return 0;
}

// ---- covest -----------------------------------------------------------------

struct CovestArgs {
  Common c;
  std::string data;
  std::string algorithm = "aoce";
  std::vector<double> delta_grid;
  bool center = false;
};

double gaussian_nll(const SymmetricMatrix& sigma, const SymmetricMatrix& s_test) {
  const Eigen::LLT<Matrix> llt(sigma.matrix());
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Matrix l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return logdet + llt.solve(s_test.matrix()).trace();
}

/// Two-fold held-out likelihood over the delta grid.
double select_delta(const Matrix& a, const std::vector<double>& grid) {
  const Index half = a.rows() / 2;
  if (half < 1) throw ConfigError("--delta-grid", "needs at least two samples");
  const DataMatrix first(a.topRows(half));
  const DataMatrix second(a.bottomRows(a.rows() - half));
  const SymmetricMatrix s1 = sample_covariance(first, CovarianceMode::kMeanNormalized);
  const SymmetricMatrix s2 = sample_covariance(second, CovarianceMode::kMeanNormalized);
  double best = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double d : grid) {
    const double score = gaussian_nll(shrink(s1, d), s2) + gaussian_nll(shrink(s2, d), s1);
    if (score < best_score) {
      best_score = score;
      best = d;
    }
  }
  return best;
}

int run_covest(const CovestArgs& args) {
  const Common& c = args.c;
  Matrix a = read_matrix_csv(args.data, c.header);
  if (args.center) a.rowwise() -= a.colwise().mean();
  if (c.top_var) {
    const Vector var =
        (a.rowwise() - a.colwise().mean()).colwise().squaredNorm().transpose();
    const std::vector<Index> kept = top_indices(var, *c.top_var);
    Matrix sub(a.rows(), static_cast<Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) sub.col(static_cast<Index>(j)) = a.col(kept[j]);
    a = std::move(sub);
  }
  const Index n = a.rows();
  const Index m = a.cols();

  std::optional<double> delta = c.delta;
  if (!delta && !args.delta_grid.empty()) {
    for (double d : args.delta_grid) {
      if (!(d > 0.0 && d <= 1.0)) throw ConfigError("--delta-grid", "values must lie in (0, 1]");
    }
    delta = select_delta(a, args.delta_grid);
  }
  if (n < m && !delta) {
    throw ConfigError("--delta", fmt::format(
        "n = {} < m = {}: the sample covariance is singular; pass --delta or "
        "--delta-grid to shrink it toward the identity",
        n, m));
  }

  const Index q = c.q.value_or(1);
  if (q > m) throw ConfigError("--q", fmt::format("must not exceed m = {}", m));
  CovEstConfig cfg;
  cfg.q = q;
  cfg.rho = expand_rho(c.rho, q);
  if (c.p) cfg.p = *c.p;
  if (c.eps) cfg.eps = *c.eps;
  if (c.threshold) cfg.threshold = *c.threshold;
  if (c.tol) cfg.tol = *c.tol;
  if (c.max_iter) cfg.max_iter = *c.max_iter;
  cfg.delta = delta;
  cfg.seed = c.seed.value_or(0);
  try {
    cfg.validate(m);
  } catch (const ParameterError& e) {
    throw ConfigError("covest", e.what());
  } catch (const DimensionError& e) {
    throw ConfigError("covest", e.what());
  }

  const SymmetricMatrix s = sample_covariance(DataMatrix(a), CovarianceMode::kMeanNormalized);
  const CovEstResult r = args.algorithm == "joce" ? joce(s, cfg) : aoce(s, cfg);

  json summary;
  summary["algorithm"] = args.algorithm;
  summary["n"] = n;
  summary["m"] = m;
  summary["q"] = q;
  summary["delta"] = delta ? json(*delta) : json(nullptr);
  summary["iterations"] = r.trace.iterations;
  summary["converged"] = r.trace.converged;
  summary["lam_max"] = r.trace.lam_max;
  summary["objective"] = r.trace.objective;

  Matrix spectrum(m, 2);
  spectrum.col(0) = r.estimate.covariance_eigenvalues;
  spectrum.col(1) = r.estimate.precision.values();

  if (c.out.empty()) {
    write_matrix_csv(std::cout, r.estimate.sigma_hat.matrix());
    std::cerr << render_summary(summary, c.format);
  } else {
    ensure_dir(c.out);
    write_matrix_csv(join_path(c.out, "sigma.csv"), r.estimate.sigma_hat.matrix());
    write_matrix_csv(join_path(c.out, "spectrum.csv"), spectrum);
    write_matrix_csv(join_path(c.out, "eigenvectors.csv"), r.estimate.u.matrix());
    write_text(join_path(c.out, c.format == "json" ? "summary.json" : "summary.csv"),
               render_summary(summary, c.format));
  }
  return 0;
}

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  Common c;
  std::string model = "angle";
  Index m = 200;
  Index n = 50;
  Index k = 5;
};

int run_gen(const GenArgs& args) {
  const std::uint64_t seed = args.c.seed.value_or(0);
  CovModel model;
  try {
    model = args.model == "recovery" ? make_recovery_model(args.m, model_seed(seed, 0))
                                     : make_angle_model(args.m, args.k, model_seed(seed, 0));
  } catch (const ParameterError& e) {
    throw ConfigError("--m", e.what());
  } catch (const DimensionError& e) {
    throw ConfigError("--m", e.what());
  }
  const DataMatrix a = sample(model, args.n, seed);
  if (args.c.out.empty()) {
    write_matrix_csv(std::cout, a.matrix());
    return 0;
  }
  ensure_dir(args.c.out);
  write_matrix_csv(join_path(args.c.out, "data.csv"), a.matrix());
  write_matrix_csv(join_path(args.c.out, "sigma.csv"), model.sigma().matrix());
  write_matrix_csv(join_path(args.c.out, "eigenvectors.csv"), model.v);
  write_matrix_csv(join_path(args.c.out, "eigenvalues.csv"), model.lambda);
  return 0;
}

// ---- experiment -------------------------------------------------------------

struct ExperimentArgs {
  Common c;
  std::string config;
  std::string kind;
  std::optional<Index> m, n, k;
  std::optional<int> trials, models, threads;
  std::vector<double> grid, gammas, delta_grid;
  std::vector<std::string> algorithms;
  bool timing = false;
  bool summary = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_experiment(const ExperimentArgs& args) {
  const Common& c = args.c;
  ExperimentSpec spec;
  if (!args.config.empty()) {
    spec = ExperimentSpec::from_json(read_file(args.config));
    if (!args.kind.empty() && parse_kind(args.kind) != spec.kind) {
      throw ConfigError("--kind", "conflicts with the kind in the config file");
    }
  } else if (!args.kind.empty()) {
    spec = default_spec(parse_kind(args.kind));
  } else {
    throw ConfigError("--config", "either --config or --kind is required");
  }

  if (c.seed) spec.seed_base = *c.seed;
  if (c.q) spec.q = *c.q;
  if (args.m) spec.m = *args.m;
  if (args.n) spec.n = *args.n;
  if (args.k) spec.k = *args.k;
  if (args.trials) spec.trials = *args.trials;
  if (args.models) spec.models = *args.models;
  if (args.threads) spec.threads = *args.threads;
  if (!args.grid.empty()) spec.grid = args.grid;
  if (!c.rho.empty()) {
    // --rho names penalty levels, which are the grid only for the gamma sweeps
    const bool gamma_grid = spec.kind != ExperimentKind::kCpevCurve &&
                            spec.kind != ExperimentKind::kRelmseCurve;
    (gamma_grid ? spec.grid : spec.gammas) = c.rho;
  }
  if (!args.gammas.empty()) spec.gammas = args.gammas;
  if (!args.delta_grid.empty()) spec.delta_grid = args.delta_grid;
  if (!args.algorithms.empty()) {
    spec.algorithms.clear();
    for (const std::string& a : args.algorithms) spec.algorithms.push_back(parse_algorithm(a));
  }
  if (c.p) spec.p = *c.p;
  if (c.eps) spec.eps = *c.eps;
  if (c.threshold) spec.threshold = *c.threshold;
  if (c.tol) spec.tol = *c.tol;
  if (c.max_iter) spec.max_iter = *c.max_iter;
  if (c.delta) spec.delta = *c.delta;
  if (args.timing) spec.timing = true;
  spec.validate();

  const std::vector<ResultRecord> rows = run(spec);

  std::ostringstream text;
  if (args.summary) {
    const std::vector<MetricSummary> sums = summarize(rows);
    if (c.format == "json") {
      json arr = json::array();
      for (const MetricSummary& s : sums) {
        arr.push_back({{"algorithm", to_string(s.algorithm)},
                       {"sweep_value", s.sweep_value},
                       {"gamma", s.gamma},
                       {"metric", s.metric},
                       {"mean", s.mean},
                       {"min", s.min},
                       {"max", s.max},
                       {"count", s.count}});
      }
      text << arr.dump(1) << '\n';
    } else {
      text << "algorithm,sweep_value,gamma,metric,mean,min,max,count\n";
      for (const MetricSummary& s : sums) {
        text << fmt::format("{},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g},{}\n",
                            to_string(s.algorithm), s.sweep_value, s.gamma, s.metric,
                            s.mean, s.min, s.max, s.count);
      }
    }
  } else if (c.format == "json") {
    write_records_json(text, rows);
  } else {
    write_records_csv(text, rows);
  }

  if (c.out.empty()) {
    std::cout << text.str();
  } else {
    const std::filesystem::path parent = std::filesystem::path(c.out).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    write_text(c.out, text.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse orthogonal eigenvectors and covariance estimation"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Sparse eigenvectors of a data or covariance matrix");
  add_common(extract, ex.c);
  ex.c.format = "json";
  auto* data_opt = extract->add_option("--data", ex.data, "n x m data matrix CSV");
  auto* cov_opt = extract->add_option("--cov", ex.cov, "m x m covariance matrix CSV");
  data_opt->excludes(cov_opt);
  extract->add_flag("--center", ex.center, "Subtract column means from the data");
  extract->add_option("--init", ex.init, "Initial frame")
      ->check(CLI::IsMember({"leading", "random"}));

  CovestArgs cv;
  auto* covest = app.add_subcommand("covest", "Covariance estimate with sparse leading eigenvectors");
  add_common(covest, cv.c);
  covest->add_option("--data", cv.data, "n x m data matrix CSV")->required();
  covest->add_option("--algorithm", cv.algorithm, "Estimator")
      ->check(CLI::IsMember({"aoce", "joce"}));
  auto* delta_opt = covest->add_option("--delta", cv.c.delta, "Shrinkage toward the identity");
  auto* grid_opt = covest->add_option("--delta-grid", cv.delta_grid,
                                      "Shrinkage candidates, chosen by held-out likelihood")
                       ->delimiter(',');
  delta_opt->excludes(grid_opt);
  covest->add_flag("--center", cv.center, "Subtract column means from the data");

  GenArgs gen;
  auto* gen_data = app.add_subcommand("gen-data", "Sample from a synthetic spiked model");
  add_common(gen_data, gen.c, false);
  gen_data->add_option("--model", gen.model, "Covariance model")
      ->check(CLI::IsMember({"angle", "recovery"}));
  gen_data->add_option("--m", gen.m, "Variables")->check(CLI::PositiveNumber);
  gen_data->add_option("--n", gen.n, "Samples")->check(CLI::PositiveNumber);
  gen_data->add_option("--k", gen.k, "Sparse eigenvectors (angle model)")
      ->check(CLI::PositiveNumber);

  ExperimentArgs xa;
  auto* experiment = app.add_subcommand("experiment", "Run a Monte-Carlo protocol");
  add_common(experiment, xa.c);
  xa.c.format = "csv";
  experiment->add_option("--delta", xa.c.delta, "Fixed shrinkage");
  experiment->add_option("--config", xa.config, "JSON experiment spec");
  experiment->add_option("--kind", xa.kind, "Protocol when no config is given");
  experiment->add_option("--m", xa.m, "Variables");
  experiment->add_option("--n", xa.n, "Samples");
  experiment->add_option("--k", xa.k, "Planted sparse eigenvectors");
  experiment->add_option("--trials", xa.trials, "Datasets per model");
  experiment->add_option("--models", xa.models, "Covariance models");
  experiment->add_option("--threads", xa.threads, "Worker threads");
  experiment->add_option("--grid", xa.grid, "Sweep grid")->delimiter(',');
  experiment->add_option("--gammas", xa.gammas, "Penalty levels")->delimiter(',');
  experiment->add_option("--delta-grid", xa.delta_grid, "Shrinkage candidates")->delimiter(',');
  experiment->add_option("--algorithms", xa.algorithms, "Algorithms")->delimiter(',');
  experiment->add_flag("--timing", xa.timing, "Record wall time per row");
  experiment->add_flag("--summary", xa.summary, "Emit per-point means instead of rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*extract) {
      if (ex.data.empty() && ex.cov.empty()) {
        throw ConfigError("extract", "exactly one of --data or --cov is required");
      }
      return run_extract(ex);
    }
    if (*covest) return run_covest(cv);
    if (*gen_data) return run_gen(gen);
    if (*experiment) return run_experiment(xa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
