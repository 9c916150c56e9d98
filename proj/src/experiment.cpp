#include "ospca/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"
#include "ospca/covest.hpp"
#include "ospca/imrp.hpp"
#include "ospca/metrics.hpp"
#include "ospca/synth.hpp"

namespace ospca {

namespace {

using json = nlohmann::json;

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::kAngleSweep, "angle_sweep"},
    {ExperimentKind::kRecoverySweep, "recovery_sweep"},
    {ExperimentKind::kCpevCurve, "cpev_curve"},
    {ExperimentKind::kRelmseCurve, "relmse_curve"},
    {ExperimentKind::kExtract, "extract"},
    {ExperimentKind::kCovest, "covest"},
};

constexpr std::pair<Algorithm, const char*> kAlgorithmNames[] = {
    {Algorithm::kImrp, "imrp"},
    {Algorithm::kAoce, "aoce"},
    {Algorithm::kJoce, "joce"},
    {Algorithm::kBaseline, "baseline"},
};

bool is_covariance_kind(ExperimentKind kind) {
  return kind == ExperimentKind::kRelmseCurve || kind == ExperimentKind::kCovest;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

struct TrialContext {
  const ExperimentSpec& spec;
  int trial;
  std::uint64_t seed;
  std::uint64_t hash;
  std::vector<ResultRecord>& rows;

  void emit(Algorithm alg, double sweep, double gamma, std::string metric,
            double value, int iterations = 0, bool converged = true,
            double wall = 0.0) {
    rows.push_back(ResultRecord{hash, trial, seed, alg, sweep, gamma,
                                std::move(metric), value, iterations, converged,
                                wall});
  }
};

ImrpConfig imrp_config(const ExperimentSpec& spec, double rho) {
  ImrpConfig cfg = ImrpConfig::defaults(spec.q);
  cfg.penalty.rho.assign(static_cast<std::size_t>(spec.q), rho);
  cfg.penalty.p = spec.p;
  cfg.penalty.eps = spec.eps;
  cfg.penalty.threshold = spec.threshold;
  cfg.tol = spec.tol;
  if (spec.max_iter) cfg.max_iter = *spec.max_iter;
  return cfg;
}

CovEstConfig covest_config(const ExperimentSpec& spec, double gamma,
                           std::optional<double> delta) {
  CovEstConfig cfg;
  cfg.q = spec.q;
  cfg.rho.assign(static_cast<std::size_t>(spec.q), gamma);
  cfg.p = spec.p;
  cfg.eps = spec.eps;
  cfg.threshold = spec.threshold;
  cfg.tol = spec.tol;
  if (spec.max_iter) cfg.max_iter = *spec.max_iter;
  cfg.delta = delta;
  return cfg;
}

double max_diagonal(const SymmetricMatrix& s) {
  return s.matrix().diagonal().maxCoeff();
}

CovModel trial_model(const ExperimentSpec& spec, int trial) {
  const int model = trial / spec.trials;
  const std::uint64_t seed = model_seed(spec.seed_base, model);
  if (spec.kind == ExperimentKind::kRecoverySweep) {
    return make_recovery_model(spec.m, seed);
  }
  return make_angle_model(spec.m, spec.k, seed);
}

void angle_or_recovery(TrialContext& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const CovModel model = trial_model(spec, ctx.trial);
  const DataMatrix a = sample(model, spec.n, ctx.seed);
  const SymmetricMatrix s = sample_covariance(a, CovarianceMode::kScaledGram);
  const double scale = max_diagonal(s);
  for (double gamma : spec.grid) {
    Stopwatch clock(spec.timing);
    const ImrpResult r = imrp(s, imrp_config(spec, gamma * scale));
    const Matrix u = hard_threshold(r.frame.matrix(), spec.threshold);
    const double wall = clock.seconds();
    const int it = r.trace.iterations;
    const bool conv = r.trace.converged;
    if (spec.kind == ExperimentKind::kAngleSweep) {
      ctx.emit(Algorithm::kImrp, gamma, gamma, "min_angle", min_offdiag_angle(u), it,
               conv, wall);
      ctx.emit(Algorithm::kImrp, gamma, gamma, "orthogonality_error",
               orthogonality_error(r.frame.matrix()), it, conv, wall);
    } else {
      const Matrix v = model.v.leftCols(2);
      const std::vector<double> ov = recovery_overlaps(u, v);
      ctx.emit(Algorithm::kImrp, gamma, gamma, "recovery",
               exact_recovery(u, v) ? 1.0 : 0.0, it, conv, wall);
      ctx.emit(Algorithm::kImrp, gamma, gamma, "min_overlap",
               *std::min_element(ov.begin(), ov.end()), it, conv, wall);
    }
  }
}

void extract_trial(TrialContext& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const CovModel model = trial_model(spec, ctx.trial);
  const DataMatrix a = sample(model, spec.n, ctx.seed);
  const SymmetricMatrix s = sample_covariance(a, CovarianceMode::kScaledGram);
  const double scale = max_diagonal(s);
  for (double gamma : spec.grid) {
    Stopwatch clock(spec.timing);
    const ImrpResult r = imrp(s, imrp_config(spec, gamma * scale));
    const Matrix u = hard_threshold(r.frame.matrix(), spec.threshold);
    const double wall = clock.seconds();
    const int it = r.trace.iterations;
    const bool conv = r.trace.converged;
    ctx.emit(Algorithm::kImrp, gamma, gamma, "objective", r.trace.objective.back(),
             it, conv, wall);
    ctx.emit(Algorithm::kImrp, gamma, gamma, "cpev", cpev(a, u), it, conv, wall);
    ctx.emit(Algorithm::kImrp, gamma, gamma, "adjusted_variance",
             adjusted_variance(a, u), it, conv, wall);
    const std::vector<Index> card = column_cardinality(u);
    double total = 0.0;
    for (Index c : card) total += static_cast<double>(c);
    ctx.emit(Algorithm::kImrp, gamma, gamma, "cardinality", total, it, conv, wall);
    if (spec.q >= 2) {
      ctx.emit(Algorithm::kImrp, gamma, gamma, "min_angle", min_offdiag_angle(u), it,
               conv, wall);
    }
  }
}

void cpev_curve_trial(TrialContext& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const CovModel model = trial_model(spec, ctx.trial);
  const DataMatrix a = sample(model, spec.n, ctx.seed);
  const SymmetricMatrix s = sample_covariance(a, CovarianceMode::kScaledGram);
  const double scale = max_diagonal(s);
  const double full = cpev(a, sym_eig(s).vectors.leftCols(spec.q));
  const bool want_imrp = std::count(spec.algorithms.begin(), spec.algorithms.end(),
                                    Algorithm::kImrp) > 0;
  const bool want_base = std::count(spec.algorithms.begin(), spec.algorithms.end(),
                                    Algorithm::kBaseline) > 0;

  if (want_imrp) {
    struct Point {
      double card;
      double value;
    };
    std::vector<Point> points;
    int iterations = 0;
    bool all_converged = true;
    Stopwatch clock(spec.timing);
    for (double gamma : spec.gammas) {
      const ImrpResult r = imrp(s, imrp_config(spec, gamma * scale));
      // The unpenalized run is plain PCA and is kept dense.
      const Matrix u = hard_threshold(r.frame.matrix(), gamma > 0.0 ? spec.threshold : 0.0);
      const std::vector<Index> card = column_cardinality(u);
      double total = 0.0;
      for (Index c : card) total += static_cast<double>(c);
      points.push_back({total, cpev(a, u) / full});
      iterations += r.trace.iterations;
      all_converged = all_converged && r.trace.converged;
    }
    std::vector<double> curve;
    for (double target : spec.grid) {
      double best = 0.0;
      for (const Point& pt : points) {
        if (pt.card <= target) best = std::max(best, pt.value);
      }
      curve.push_back(best);
    }
    curve = cpev_monotone(std::move(curve));
    const double wall = clock.seconds();
    for (std::size_t i = 0; i < curve.size(); ++i) {
      ctx.emit(Algorithm::kImrp, spec.grid[i], 0.0, "cpev", curve[i], iterations,
               all_converged, wall);
    }
  }
  if (want_base) {
    for (double target : spec.grid) {
      Stopwatch clock(spec.timing);
      const Index per_column = std::clamp<Index>(
          static_cast<Index>(std::floor(target / static_cast<double>(spec.q))), 1,
          spec.m);
      const Matrix u = simple_thresholding_baseline(s, spec.q, per_column);
      ctx.emit(Algorithm::kBaseline, target, 0.0, "cpev", cpev(a, u) / full, 0, true,
               clock.seconds());
    }
  }
}

std::optional<double> choose_delta(const ExperimentSpec& spec, const SymmetricMatrix& s,
                                   const SymmetricMatrix& sigma, Index n) {
  if (spec.delta) return spec.delta;
  if (n > spec.m) return std::nullopt;
  std::optional<double> best;
  double best_err = std::numeric_limits<double>::infinity();
  for (double d : spec.delta_grid) {
    const double err = (shrink(s, d).matrix() - sigma.matrix()).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best = d;
    }
  }
  return best;
}

void covariance_trial(TrialContext& ctx) {
  const ExperimentSpec& spec = ctx.spec;
  const CovModel model = trial_model(spec, ctx.trial);
  const SymmetricMatrix sigma = model.sigma();

  std::vector<double> sizes;
  if (spec.kind == ExperimentKind::kRelmseCurve) {
    sizes = spec.grid;
  } else {
    sizes.push_back(static_cast<double>(spec.n));
  }
  for (double size : sizes) {
    const Index n = static_cast<Index>(size);
    const DataMatrix a = sample(model, n, ctx.seed);
    const SymmetricMatrix s = sample_covariance(a, CovarianceMode::kMeanNormalized);
    const std::optional<double> delta = choose_delta(spec, s, sigma, n);
    const double sweep_n = static_cast<double>(n);

    if (std::count(spec.algorithms.begin(), spec.algorithms.end(),
                   Algorithm::kBaseline)) {
      const SymmetricMatrix ref = delta ? shrink(s, *delta) : s;
      const double sweep = spec.kind == ExperimentKind::kRelmseCurve ? sweep_n : 0.0;
      ctx.emit(Algorithm::kBaseline, sweep, 0.0, "rel_mse", rel_mse(ref, s, sigma));
      ctx.emit(Algorithm::kBaseline, sweep, 0.0, "delta", delta.value_or(0.0));
    }

    const std::vector<double>& gammas =
        spec.kind == ExperimentKind::kRelmseCurve ? spec.gammas : spec.grid;
    for (Algorithm alg : spec.algorithms) {
      if (alg != Algorithm::kAoce && alg != Algorithm::kJoce) continue;
      for (double gamma : gammas) {
        const double sweep = spec.kind == ExperimentKind::kRelmseCurve ? sweep_n : gamma;
        Stopwatch clock(spec.timing);
        const CovEstConfig cfg = covest_config(spec, gamma, delta);
        CovEstResult r;
        try {
          r = alg == Algorithm::kAoce ? aoce(s, cfg) : joce(s, cfg);
        } catch (const DegenerateInputError&) {
          ctx.emit(alg, sweep, gamma, "rel_mse",
                   std::numeric_limits<double>::quiet_NaN(), 0, false);
          continue;
        }
        const double wall = clock.seconds();
        const int it = r.trace.iterations;
        const bool conv = r.trace.converged;
        ctx.emit(alg, sweep, gamma, "rel_mse", rel_mse(r.estimate.sigma_hat, s, sigma),
                 it, conv, wall);
        if (spec.kind == ExperimentKind::kCovest) {
          ctx.emit(alg, sweep, gamma, "objective", r.trace.objective.back(), it, conv,
                   wall);
          bool monotone = true;
          const std::vector<double>& obj = r.trace.objective;
          for (std::size_t i = 1; i < obj.size(); ++i) {
            if (obj[i] > obj[i - 1] + 1e-9 * std::max(1.0, std::abs(obj[i - 1]))) {
              monotone = false;
            }
          }
          ctx.emit(alg, sweep, gamma, "monotone", monotone ? 1.0 : 0.0, it, conv, wall);
        }
      }
    }
  }
}

// ---- JSON -----------------------------------------------------------------

template <typename T>
T read_field(const json& j, const std::string& path);

template <>
double read_field<double>(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

template <>
std::int64_t read_field<std::int64_t>(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<std::int64_t>();
}

template <>
std::uint64_t read_field<std::uint64_t>(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  throw ConfigError(path, "expected a nonnegative integer");
}

template <>
bool read_field<bool>(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

template <>
std::string read_field<std::string>(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> read_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_field<double>(j[i], fmt::format("{}[{}]", path, i)));
  }
  return out;
}

void check_grid(const std::vector<double>& grid, const std::string& path) {
  if (grid.empty()) throw ConfigError(path, "must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) {
      throw ConfigError(fmt::format("{}[{}]", path, i), "must be finite");
    }
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string to_string(Algorithm algorithm) {
  for (const auto& [a, name] : kAlgorithmNames) {
    if (a == algorithm) return name;
  }
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw ConfigError("kind", "unknown experiment kind '" + name + "'");
}

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& [a, n] : kAlgorithmNames) {
    if (name == n) return a;
  }
  throw ConfigError("algorithms", "unknown algorithm '" + name + "'");
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  const std::vector<double> gammas{0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
  switch (kind) {
    case ExperimentKind::kAngleSweep:
      spec.m = 200;
      spec.n = 50;
      spec.q = 5;
      spec.grid = gammas;
      spec.algorithms = {Algorithm::kImrp};
      break;
    case ExperimentKind::kRecoverySweep:
      spec.m = 500;
      spec.n = 50;
      spec.q = 2;
      spec.grid = gammas;
      spec.algorithms = {Algorithm::kImrp};
      break;
    case ExperimentKind::kCpevCurve:
      spec.m = 50;
      spec.n = 50;
      spec.q = 2;
      for (int c = 1; c <= 50; ++c) spec.grid.push_back(2.0 * c);
      // 60 log-spaced values over [1e-6, 10] plus the unpenalized run.
      spec.gammas = {0.0};
      for (int i = 0; i < 60; ++i) spec.gammas.push_back(std::pow(10.0, -6.0 + 7.0 * i / 59.0));
      // Entries inside the quadratic core of the penalty are treated as zeros.
      spec.threshold = spec.eps;
      spec.algorithms = {Algorithm::kImrp, Algorithm::kBaseline};
      break;
    case ExperimentKind::kRelmseCurve:
      spec.m = 50;
      spec.q = 5;
      spec.grid = {25, 50, 100, 200};
      spec.gammas = {0.003, 0.01, 0.03};
      spec.algorithms = {Algorithm::kAoce, Algorithm::kJoce, Algorithm::kBaseline};
      break;
    case ExperimentKind::kExtract:
      spec.m = 200;
      spec.n = 50;
      spec.q = 5;
      spec.grid = gammas;
      spec.algorithms = {Algorithm::kImrp};
      break;
    case ExperimentKind::kCovest:
      spec.m = 50;
      spec.n = 50;
      spec.q = 5;
      spec.grid = {0.0, 0.01, 0.03};
      spec.algorithms = {Algorithm::kAoce, Algorithm::kJoce, Algorithm::kBaseline};
      break;
  }
  return spec;
}

void ExperimentSpec::validate() const {
  if (m < 1) throw ConfigError("m", "must be positive");
  if (n < 1) throw ConfigError("n", "must be positive");
  if (q < 1 || q > m) throw ConfigError("q", "must lie in [1, m]");
  if (trials < 1) throw ConfigError("trials", "must be at least 1");
  if (models < 1) throw ConfigError("models", "must be at least 1");
  if (threads < 1) throw ConfigError("threads", "must be at least 1");
  if (algorithms.empty()) throw ConfigError("algorithms", "must not be empty");
  check_grid(grid, "grid");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p", "must lie in (0, 1]");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps", "must lie in (0, 1)");
  if (!(threshold >= 0.0)) throw ConfigError("threshold", "must be nonnegative");
  if (!(tol >= 0.0)) throw ConfigError("tol", "must be nonnegative");
  if (max_iter && *max_iter < 1) throw ConfigError("max_iter", "must be positive");
  if (delta && !(*delta > 0.0 && *delta <= 1.0)) {
    throw ConfigError("delta", "must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!(delta_grid[i] > 0.0 && delta_grid[i] <= 1.0)) {
      throw ConfigError(fmt::format("delta_grid[{}]", i), "must lie in (0, 1]");
    }
  }

  const bool extraction = !is_covariance_kind(kind);
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    const Algorithm a = algorithms[i];
    const bool ok =
        extraction ? (a == Algorithm::kImrp ||
                      (a == Algorithm::kBaseline && kind == ExperimentKind::kCpevCurve))
                   : a != Algorithm::kImrp;
    if (!ok) {
      throw ConfigError(fmt::format("algorithms[{}]", i),
                        to_string(a) + " does not apply to " + to_string(kind));
    }
  }

  const bool uses_angle_model = kind != ExperimentKind::kRecoverySweep;
  if (uses_angle_model) {
    if (m < 10) throw ConfigError("m", "the angle model needs m >= 10");
    if (k < 1 || k > 10) throw ConfigError("k", "must lie in [1, 10]");
  } else {
    if (m < 20) throw ConfigError("m", "the recovery model needs m >= 20");
    if (q < 2) throw ConfigError("q", "recovery needs q >= 2");
  }
  if (kind == ExperimentKind::kAngleSweep && q < 2) {
    throw ConfigError("q", "angles need q >= 2");
  }

  auto nonnegative = [](const std::vector<double>& g, const char* name) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < 0.0) {
        throw ConfigError(fmt::format("{}[{}]", name, i), "must be nonnegative");
      }
    }
  };
  switch (kind) {
    case ExperimentKind::kCpevCurve:
      check_grid(gammas, "gammas");
      nonnegative(gammas, "gammas");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 1.0 || (i > 0 && grid[i] <= grid[i - 1])) {
          throw ConfigError(fmt::format("grid[{}]", i),
                            "cardinalities must be >= 1 and strictly increasing");
        }
      }
      break;
    case ExperimentKind::kRelmseCurve:
      check_grid(gammas, "gammas");
      nonnegative(gammas, "gammas");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 1.0 || grid[i] != std::floor(grid[i])) {
          throw ConfigError(fmt::format("grid[{}]", i),
                            "sample counts must be positive integers");
        }
        if (grid[i] <= static_cast<double>(m) && !delta && delta_grid.empty()) {
          throw ConfigError(fmt::format("grid[{}]", i),
                            "n <= m needs delta or delta_grid");
        }
      }
      break;
    default:
      nonnegative(grid, "grid");
      if (kind == ExperimentKind::kCovest && n <= m && !delta && delta_grid.empty()) {
        throw ConfigError("n", "n <= m needs delta or delta_grid");
      }
      break;
  }
}

std::string ExperimentSpec::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["m"] = m;
  j["n"] = n;
  j["q"] = q;
  j["k"] = k;
  j["grid"] = grid;
  j["gammas"] = gammas;
  j["trials"] = trials;
  j["models"] = models;
  j["seed_base"] = seed_base;
  std::vector<std::string> algs;
  for (Algorithm a : algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  j["p"] = p;
  j["eps"] = eps;
  j["threshold"] = threshold;
  j["tol"] = tol;
  j["max_iter"] = max_iter ? json(*max_iter) : json(nullptr);
  j["delta"] = delta ? json(*delta) : json(nullptr);
  j["delta_grid"] = delta_grid;
  return j.dump();
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("$", "expected a JSON object");
  if (!j.contains("kind")) throw ConfigError("kind", "is required");
  ExperimentSpec spec =
      default_spec(parse_kind(read_field<std::string>(j["kind"], "kind")));

  auto positive_int = [](const json& v, const std::string& path) {
    const std::int64_t x = read_field<std::int64_t>(v, path);
    if (x < 1) throw ConfigError(path, "must be positive");
    return x;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") continue;
    if (key == "m") spec.m = positive_int(value, key);
    else if (key == "n") spec.n = positive_int(value, key);
    else if (key == "q") spec.q = positive_int(value, key);
    else if (key == "k") spec.k = positive_int(value, key);
    else if (key == "grid") spec.grid = read_numbers(value, key);
    else if (key == "gammas") spec.gammas = read_numbers(value, key);
    else if (key == "trials") spec.trials = static_cast<int>(positive_int(value, key));
    else if (key == "models") spec.models = static_cast<int>(positive_int(value, key));
    else if (key == "threads") spec.threads = static_cast<int>(positive_int(value, key));
    else if (key == "seed_base") spec.seed_base = read_field<std::uint64_t>(value, key);
    else if (key == "p") spec.p = read_field<double>(value, key);
    else if (key == "eps") spec.eps = read_field<double>(value, key);
    else if (key == "threshold") spec.threshold = read_field<double>(value, key);
    else if (key == "tol") spec.tol = read_field<double>(value, key);
    else if (key == "timing") spec.timing = read_field<bool>(value, key);
    else if (key == "max_iter") {
      if (value.is_null()) spec.max_iter.reset();
      else spec.max_iter = static_cast<int>(positive_int(value, key));
    } else if (key == "delta") {
      if (value.is_null()) spec.delta.reset();
      else spec.delta = read_field<double>(value, key);
    } else if (key == "delta_grid") {
      spec.delta_grid = read_numbers(value, key);
    } else if (key == "algorithms") {
      if (!value.is_array()) throw ConfigError(key, "expected an array of names");
      spec.algorithms.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string path = fmt::format("algorithms[{}]", i);
        try {
          spec.algorithms.push_back(parse_algorithm(read_field<std::string>(value[i], path)));
        } catch (const ConfigError& e) {
          if (e.path() == path) throw;
          throw ConfigError(path, "unknown algorithm");
        }
      }
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  spec.validate();
  return spec;
}

std::uint64_t ExperimentSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t model_seed(std::uint64_t seed_base, int model) {
  return seed_base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(model + 1);
}

std::vector<ResultRecord> run_trial(const ExperimentSpec& spec, int trial) {
  std::vector<ResultRecord> rows;
  TrialContext ctx{spec, trial, spec.seed_base + static_cast<std::uint64_t>(trial),
                   spec.hash(), rows};
  switch (spec.kind) {
    case ExperimentKind::kAngleSweep:
    case ExperimentKind::kRecoverySweep:
      angle_or_recovery(ctx);
      break;
    case ExperimentKind::kCpevCurve:
      cpev_curve_trial(ctx);
      break;
    case ExperimentKind::kExtract:
      extract_trial(ctx);
      break;
    case ExperimentKind::kRelmseCurve:
    case ExperimentKind::kCovest:
      covariance_trial(ctx);
      break;
  }
  return rows;
}

std::vector<ResultRecord> run(const ExperimentSpec& spec) {
  spec.validate();
  const int total = spec.trials * spec.models;
  std::vector<std::vector<ResultRecord>> per_trial(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int t = next++; t < total; t = next++) {
      try {
        per_trial[static_cast<std::size_t>(t)] = run_trial(spec, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int workers = std::min(spec.threads, total);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRecord> rows;
  for (auto& chunk : per_trial) {
    rows.insert(rows.end(), std::make_move_iterator(chunk.begin()),
                std::make_move_iterator(chunk.end()));
  }
  return rows;
}

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& rows) {
  out << "spec_hash,trial,seed,algorithm,sweep_value,gamma,metric,value,iterations,"
         "converged,wall_time\n";
  for (const ResultRecord& r : rows) {
    out << fmt::format("{:016x},{},{},{},{:.17g},{:.17g},{},{:.17g},{},{},{:.6f}\n",
                       r.spec_hash, r.trial, r.seed, to_string(r.algorithm),
                       r.sweep_value, r.gamma, r.metric, r.value, r.iterations,
                       r.converged ? 1 : 0, r.wall_time);
  }
}

void write_records_json(std::ostream& out, const std::vector<ResultRecord>& rows) {
  json arr = json::array();
  for (const ResultRecord& r : rows) {
    json j;
    j["spec_hash"] = fmt::format("{:016x}", r.spec_hash);
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["algorithm"] = to_string(r.algorithm);
    j["sweep_value"] = r.sweep_value;
    j["gamma"] = r.gamma;
    j["metric"] = r.metric;
    j["value"] = std::isfinite(r.value) ? json(r.value) : json(nullptr);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["wall_time"] = r.wall_time;
    arr.push_back(std::move(j));
  }
  out << arr.dump(1) << '\n';
}

std::vector<MetricSummary> summarize(const std::vector<ResultRecord>& rows) {
  using Key = std::tuple<int, double, double, std::string>;
  std::map<Key, MetricSummary> acc;
  for (const ResultRecord& r : rows) {
    const Key key{static_cast<int>(r.algorithm), r.sweep_value, r.gamma, r.metric};
    auto it = acc.find(key);
    if (it == acc.end()) {
      acc.emplace(key, MetricSummary{r.algorithm, r.sweep_value, r.gamma, r.metric,
                                     r.value, r.value, r.value, 1});
      continue;
    }
    MetricSummary& s = it->second;
    s.mean += r.value;
    s.min = std::min(s.min, r.value);
    s.max = std::max(s.max, r.value);
    ++s.count;
  }
  std::vector<MetricSummary> out;
  for (auto& [key, s] : acc) {
    s.mean /= s.count;
    out.push_back(s);
  }
  return out;
}

}  // namespace ospca
