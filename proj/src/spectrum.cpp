#include "ospca/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <fmt/format.h>

namespace ospca {

namespace {

// Pooling works on keys oriented so that a feasible parameter vector has
// keys nonincreasing along the chain and every tail key <= the pivot key.
// kLambda uses key = z; kPhi uses key = -alpha.
double to_key(double param, SpectrumKind kind) {
  return kind == SpectrumKind::kLambda ? param : -param;
}

struct Block {
  Index first = 0;            // chain coordinates [first, last]
  Index last = 0;
  std::vector<Index> tails;   // fan coordinates pooled into this block
  double sum = 0.0;           // sum of member keys
  Index count = 0;

  double mean() const { return sum / static_cast<double>(count); }
};

// Indices of `candidates` sorted from mildest to strongest violation.
std::vector<Index> sorted_by_key(const std::vector<double>& keys,
                                 std::vector<Index> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Index a, Index b) { return keys[a] < keys[b]; });
  return candidates;
}

// Length of the largest suffix of `sorted` (ascending keys) that passes the
// running-average test: member i joins if key_i >= mean of the run plus every
// stronger violator.
std::size_t active_suffix_length(const std::vector<double>& keys,
                                 const std::vector<Index>& sorted,
                                 double run_sum, Index run_count) {
  double sum = run_sum;
  Index count = run_count;
  std::size_t taken = 0;
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    if (keys[*it] >= sum / static_cast<double>(count)) {
      sum += keys[*it];
      ++count;
      ++taken;
    } else {
      break;
    }
  }
  return taken;
}

struct PoolingOutcome {
  std::vector<Block> chain;
  std::vector<Index> free_tails;
  int rounds = 0;
};

std::vector<double> pooled_keys(const std::vector<double>& keys,
                                const PoolingOutcome& state) {
  std::vector<double> out(keys);
  for (const Block& b : state.chain) {
    const double mean = b.mean();
    for (Index i = b.first; i <= b.last; ++i) out[i] = mean;
    for (Index t : b.tails) out[t] = mean;
  }
  return out;
}

Block merge(const std::vector<Block>& chain, std::size_t from, std::size_t to) {
  Block out = chain[from];
  for (std::size_t b = from + 1; b <= to; ++b) {
    out.last = chain[b].last;
    out.tails.insert(out.tails.end(), chain[b].tails.begin(), chain[b].tails.end());
    out.sum += chain[b].sum;
    out.count += chain[b].count;
  }
  return out;
}

PoolingOutcome pool(const std::vector<double>& keys, Index q,
                    const std::function<void(const std::vector<double>&)>& on_round) {
  const Index m = static_cast<Index>(keys.size());
  PoolingOutcome state;
  for (Index i = 0; i < q; ++i) state.chain.push_back(Block{i, i, {}, keys[i], 1});
  for (Index c = q; c < m; ++c) state.free_tails.push_back(c);
  on_round(pooled_keys(keys, state));

  while (true) {
    const std::size_t nb = state.chain.size();
    std::vector<double> means(nb);
    for (std::size_t b = 0; b < nb; ++b) means[b] = state.chain[b].mean();

    const double pivot = means.back();
    bool tail_violation = false;
    for (Index c : state.free_tails) tail_violation |= keys[c] > pivot;
    bool chain_violation = false;
    for (std::size_t b = 0; b + 1 < nb; ++b) chain_violation |= means[b] < means[b + 1];
    if (!tail_violation && !chain_violation) break;

    std::vector<Block> next;
    std::vector<Index> next_free = state.free_tails;
    std::size_t b = 0;
    while (b < nb) {
      // Maximal run of blocks with nondecreasing keys.
      std::size_t e = b;
      bool strict = false;
      while (e + 1 < nb && means[e] <= means[e + 1]) {
        strict |= means[e] < means[e + 1];
        ++e;
      }
      const bool ends_at_pivot = e + 1 == nb;
      if (ends_at_pivot && tail_violation) {
        Block run = merge(state.chain, b, e);
        std::vector<Index> violators;
        for (Index c : state.free_tails)
          if (keys[c] >= pivot) violators.push_back(c);
        violators = sorted_by_key(keys, std::move(violators));
        const std::size_t taken =
            active_suffix_length(keys, violators, run.sum, run.count);
        std::vector<Index> joined(violators.end() - static_cast<std::ptrdiff_t>(taken),
                                  violators.end());
        for (Index c : joined) {
          run.tails.push_back(c);
          run.sum += keys[c];
          ++run.count;
        }
        std::sort(run.tails.begin(), run.tails.end());
        std::erase_if(next_free, [&](Index c) {
          return std::find(joined.begin(), joined.end(), c) != joined.end();
        });
        next.push_back(std::move(run));
      } else if (strict) {
        next.push_back(merge(state.chain, b, e));
      } else {
        for (std::size_t k = b; k <= e; ++k) next.push_back(state.chain[k]);
      }
      b = e + 1;
    }
    state.chain = std::move(next);
    state.free_tails = std::move(next_free);
    ++state.rounds;
    on_round(pooled_keys(keys, state));
  }
  return state;
}

void check_q(Index m, Index q) {
  if (m < 1) throw DimensionError("spectrum parameters are empty");
  if (q < 1 || q > m) {
    throw ParameterError(fmt::format("q must lie in [1, {}], got {}", m, q));
  }
}

double gradient(double x, double param, SpectrumKind kind, double lam_max) {
  if (kind == SpectrumKind::kLambda) return param - 1.0 / x;
  return lam_max - 1.0 / x - param / (x * x);
}

SpectrumSolution solve(const Vector& params, Index q, SpectrumKind kind,
                       double lam_max) {
  const Index m = params.size();
  std::vector<double> keys(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) keys[i] = to_key(params(i), kind);

  auto map_value = [&](double key) {
    return kind == SpectrumKind::kLambda ? 1.0 / key
                                         : phi_closed_form(-key, lam_max);
  };
  auto values_of = [&](const std::vector<double>& pooled) {
    Vector v(m);
    for (Index i = 0; i < m; ++i) v(i) = map_value(pooled[i]);
    return v;
  };

  SpectrumSolution sol;
  const PoolingOutcome outcome = pool(keys, q, [&](const std::vector<double>& pooled) {
    sol.round_objectives.push_back(
        spectrum_objective(values_of(pooled), params, kind, lam_max));
  });

  const std::vector<double> pooled = pooled_keys(keys, outcome);
  sol.rounds = outcome.rounds;
  sol.pooling.params.assign(params.data(), params.data() + m);
  for (const Block& b : outcome.chain) {
    std::vector<Index> members;
    for (Index i = b.first; i <= b.last; ++i) members.push_back(i);
    members.insert(members.end(), b.tails.begin(), b.tails.end());
    sol.pooling.blocks.push_back(std::move(members));
  }
  for (Index c : outcome.free_tails) sol.pooling.blocks.push_back({c});
  sol.pooling.pooled.resize(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    sol.pooling.pooled[i] = kind == SpectrumKind::kLambda ? pooled[i] : -pooled[i];
  }
  sol.spectrum = OrderedSpectrum(values_of(pooled), q);
  return sol;
}

}  // namespace

std::vector<std::pair<Index, Index>> ordering_violations(const Vector& values,
                                                         Index q, double tol) {
  check_q(values.size(), q);
  std::vector<std::pair<Index, Index>> out;
  auto violates = [&](Index i, Index j) {
    const double scale = std::max(std::abs(values(i)), std::abs(values(j)));
    return values(i) > values(j) + tol * scale;
  };
  for (Index i = 0; i + 1 < q; ++i)
    if (violates(i, i + 1)) out.emplace_back(i, i + 1);
  for (Index c = q; c < values.size(); ++c)
    if (violates(q - 1, c)) out.emplace_back(q - 1, c);
  return out;
}

OrderedSpectrum::OrderedSpectrum(Vector values, Index q)
    : values_(std::move(values)), q_(q) {
  check_q(values_.size(), q_);
  for (Index i = 0; i < values_.size(); ++i) {
    if (!(values_(i) > 0.0) || !std::isfinite(values_(i))) {
      throw DegenerateInputError(
          fmt::format("spectrum entry {} is not a positive finite number", i));
    }
  }
  const auto bad = ordering_violations(values_, q_);
  if (!bad.empty()) {
    std::string msg = "spectrum violates the ordering constraints at";
    for (const auto& [i, j] : bad) msg += fmt::format(" ({}>{})", i, j);
    throw FeasibilityError(msg);
  }
}

double phi_closed_form(double alpha, double lam_max) {
  return (1.0 + std::sqrt(1.0 + 4.0 * lam_max * alpha)) / (2.0 * lam_max);
}

SpectrumSolution solve_lambda(const Vector& z, Index q) {
  check_q(z.size(), q);
  for (Index i = 0; i < z.size(); ++i) {
    if (!(z(i) > 0.0) || !std::isfinite(z(i))) {
      throw DegenerateInputError(fmt::format(
          "z[{}] = {} is not positive; the covariance is singular along this "
          "direction, shrink it toward the identity first",
          i, z(i)));
    }
  }
  return solve(z, q, SpectrumKind::kLambda, 0.0);
}

SpectrumSolution solve_phi(const Vector& alpha, double lam_max, Index q) {
  check_q(alpha.size(), q);
  if (!(lam_max > 0.0) || !std::isfinite(lam_max)) {
    throw ParameterError("lam_max must be positive and finite");
  }
  for (Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha(i) >= 0.0) || !std::isfinite(alpha(i))) {
      throw ParameterError(
          fmt::format("alpha[{}] = {} must be finite and nonnegative", i, alpha(i)));
    }
  }
  return solve(alpha, q, SpectrumKind::kPhi, lam_max);
}

std::vector<Index> active_set(const Vector& params, Index q, Index run_length,
                              std::span<const Index> violators,
                              SpectrumKind kind) {
  check_q(params.size(), q);
  if (violators.empty()) throw ParameterError("active_set needs a nonempty violator set");
  if (run_length < 0 || run_length > q - 1) {
    throw ParameterError("run length must lie in [0, q-1]");
  }
  std::vector<double> keys(static_cast<std::size_t>(params.size()));
  for (Index i = 0; i < params.size(); ++i) keys[i] = to_key(params(i), kind);
  double run_sum = 0.0;
  for (Index i = q - 1 - run_length; i <= q - 1; ++i) run_sum += keys[i];
  for (Index c : violators) {
    if (c < q || c >= params.size()) {
      throw ParameterError(fmt::format("violator index {} is not a tail index", c));
    }
  }
  const std::vector<Index> sorted =
      sorted_by_key(keys, std::vector<Index>(violators.begin(), violators.end()));
  const std::size_t taken = active_suffix_length(keys, sorted, run_sum, run_length + 1);
  std::vector<Index> out(sorted.end() - static_cast<std::ptrdiff_t>(taken), sorted.end());
  std::sort(out.begin(), out.end());
  return out;
}

double spectrum_objective(const Vector& values, const Vector& params,
                          SpectrumKind kind, double lam_max) {
  if (values.size() != params.size()) {
    throw DimensionError("spectrum and parameter lengths differ");
  }
  double total = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double x = values(i);
    total += -std::log(x);
    total += kind == SpectrumKind::kLambda ? params(i) * x
                                           : params(i) / x + lam_max * x;
  }
  return total;
}

double kkt_residual(const OrderedSpectrum& spectrum, const Vector& params,
                    SpectrumKind kind, double lam_max) {
  const Vector& x = spectrum.values();
  const Index m = x.size();
  const Index q = spectrum.q();
  if (params.size() != m) throw DimensionError("spectrum and parameter lengths differ");

  double residual = 0.0;
  // Fan multipliers: stationarity of each tail coordinate gives nu_c = grad_c.
  double nu_sum = 0.0;
  for (Index c = q; c < m; ++c) {
    const double nu = gradient(x(c), params(c), kind, lam_max);
    nu_sum += nu;
    residual = std::max(residual, std::max(0.0, -nu));
    residual = std::max(residual, std::abs(nu * (x(q - 1) - x(c))));
  }
  // Chain multipliers from the forward recursion mu_i = mu_{i-1} - grad_i.
  double mu_prev = 0.0;
  for (Index i = 0; i + 1 < q; ++i) {
    const double mu = mu_prev - gradient(x(i), params(i), kind, lam_max);
    residual = std::max(residual, std::max(0.0, -mu));
    residual = std::max(residual, std::abs(mu * (x(i) - x(i + 1))));
    mu_prev = mu;
  }
  const double pivot =
      gradient(x(q - 1), params(q - 1), kind, lam_max) - mu_prev + nu_sum;
  return std::max(residual, std::abs(pivot));
}

double kkt_residual(const Vector& values, Index q, const Vector& params,
                    SpectrumKind kind, double lam_max) {
  return kkt_residual(OrderedSpectrum(values, q), params, kind, lam_max);
}

}  // namespace ospca
