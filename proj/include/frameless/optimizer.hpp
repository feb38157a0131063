#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "frameless/analysis.hpp"
#include "frameless/model.hpp"
#include "frameless/rng.hpp"

namespace frameless {

/// Maximize F_t over (m^(1..k), beta^(1..k)) for fixed n, m, k, t.
struct OptimizationProblem {
  int users = 0;        // n
  int total_slots = 0;  // m, candidate class slot counts always sum to this
  int class_count = 1;  // k
  int target = 0;       // t

  int starts = 8;
  std::uint64_t seed = 1;
  int max_evals_per_start = 400;
  double tol_x = 1e-4;
  double tol_f = 1e-6;
  double search_prune = 1e-13;  // pruning threshold while searching
  double final_prune = 1e-15;   // tightened re-evaluation of the winner
  int jobs = 1;

  void validate() const {
    if (users < 1) throw std::domain_error("problem.users: must be positive");
    if (total_slots < 0) throw std::domain_error("problem.total_slots: must be nonnegative");
    if (class_count < 1) throw std::domain_error("problem.class_count: must be >= 1");
    if (target < 1 || target > users) throw std::domain_error("problem.target: must lie in [1, users]");
    if (starts < 1) throw std::domain_error("problem.starts: must be >= 1");
    if (max_evals_per_start < 1) throw std::domain_error("problem.max_evals_per_start: must be >= 1");
  }
};

/// Bijection between configurations and an unconstrained real vector:
/// [0..k) hold ln beta^(h); [k..2k-1) hold log-ratios of slot-count shares
/// (class k's share is the reference). Decoding maps shares to a continuous
/// composition of m and rounds by largest remainder, so every decoded
/// candidate satisfies the slot-sum constraint exactly and integer-feasible
/// compositions survive an encode/decode round trip.
class ParamCodec {
 public:
  ParamCodec(int users, int total_slots, int class_count)
      : users_(users), total_slots_(total_slots), class_count_(class_count) {
    if (users < 1 || total_slots < 0 || class_count < 1)
      throw std::domain_error("ParamCodec: invalid problem dimensions");
  }

  int dim() const { return 2 * class_count_ - 1; }

  SystemConfig decode(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::domain_error("ParamCodec::decode: wrong vector length");
    SystemConfig config;
    config.users = users_;
    config.classes.resize(class_count_);
    for (int h = 0; h < class_count_; ++h)
      config.classes[h].mean_degree =
          std::min(std::exp(std::min(x[h], 700.0)), static_cast<double>(users_));
    const std::vector<int> counts = decode_composition(x);
    for (int h = 0; h < class_count_; ++h) config.classes[h].slot_count = counts[h];
    return config;
  }

  std::vector<double> encode(const SystemConfig& config) const {
    if (config.users != users_ || config.class_count() != class_count_ ||
        config.total_slots() != total_slots_)
      throw std::domain_error("ParamCodec::encode: configuration does not match problem shape");
    std::vector<double> x(dim());
    for (int h = 0; h < class_count_; ++h)
      x[h] = std::log(std::max(config.classes[h].mean_degree, 1e-300));
    const double ref = static_cast<double>(config.classes[class_count_ - 1].slot_count) + kShareDelta;
    for (int h = 0; h + 1 < class_count_; ++h)
      x[class_count_ + h] =
          std::log((static_cast<double>(config.classes[h].slot_count) + kShareDelta) / ref);
    return x;
  }

  std::vector<int> decode_composition(const std::vector<double>& x) const {
    const int k = class_count_;
    std::vector<double> share(k, 1.0);
    double total = 1.0;
    for (int h = 0; h + 1 < k; ++h) {
      share[h] = std::exp(std::clamp(x[k + h], -60.0, 60.0));
      total += share[h];
    }
    std::vector<int> counts(k, 0);
    std::vector<std::pair<double, int>> remainder(k);
    int assigned = 0;
    for (int h = 0; h < k; ++h) {
      const double t = static_cast<double>(total_slots_) * share[h] / total;
      counts[h] = static_cast<int>(std::floor(t));
      assigned += counts[h];
      remainder[h] = {t - counts[h], h};
    }
    // Largest remainder first; ties to the lower class index.
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int i = 0; i < total_slots_ - assigned; ++i) ++counts[remainder[i].second];
    return counts;
  }

 private:
  static constexpr double kShareDelta = 1e-9;  // lets zero-slot classes encode

  int users_;
  int total_slots_;
  int class_count_;
};

struct NelderMeadOptions {
  double tol_x = 1e-4;  // simplex diameter (infinity norm)
  double tol_f = 1e-6;  // objective spread across the simplex
  int max_evals = 400;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). Terminates when
/// both the simplex diameter and the objective spread fall under the
/// tolerances, or when the evaluation budget runs out (flagged unconverged).
template <typename Objective>
NelderMeadResult nelder_mead(Objective&& objective, const std::vector<double>& start,
                             const NelderMeadOptions& options = {}) {
  const int d = static_cast<int>(start.size());
  if (d < 1) throw std::domain_error("nelder_mead: empty start vector");

  NelderMeadResult out;
  std::vector<std::vector<double>> xs(d + 1, start);
  std::vector<double> fs(d + 1);
  for (int i = 1; i <= d; ++i) xs[i][i - 1] += options.initial_step;
  // The initial simplex is always evaluated in full; max_evals is a soft cap.
  for (int i = 0; i <= d; ++i) {
    fs[i] = objective(xs[i]);
    ++out.evals;
  }

  std::vector<int> order(d + 1);
  auto sort_order = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
  };
  auto diameter = [&] {
    double dia = 0.0;
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j < d; ++j) dia = std::max(dia, std::fabs(xs[i][j] - xs[order[0]][j]));
    return dia;
  };

  sort_order();
  while (out.evals < options.max_evals) {
    if (diameter() <= options.tol_x && fs[order[d]] - fs[order[0]] <= options.tol_f) {
      out.converged = true;
      break;
    }
    const int worst = order[d];
    std::vector<double> centroid(d, 0.0);
    for (int i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (int j = 0; j < d; ++j) centroid[j] += xs[i][j];
    }
    for (int j = 0; j < d; ++j) centroid[j] /= d;

    auto blend = [&](double coeff) {
      std::vector<double> p(d);
      for (int j = 0; j < d; ++j) p[j] = centroid[j] + coeff * (xs[worst][j] - centroid[j]);
      return p;
    };

    const std::vector<double> reflected = blend(-1.0);
    const double f_reflected = objective(reflected);
    ++out.evals;
    if (f_reflected < fs[order[0]]) {
      if (out.evals < options.max_evals) {
        const std::vector<double> expanded = blend(-2.0);
        const double f_expanded = objective(expanded);
        ++out.evals;
        if (f_expanded < f_reflected) {
          xs[worst] = expanded;
          fs[worst] = f_expanded;
        } else {
          xs[worst] = reflected;
          fs[worst] = f_reflected;
        }
      } else {
        xs[worst] = reflected;
        fs[worst] = f_reflected;
      }
    } else if (f_reflected < fs[order[d - 1]]) {
      xs[worst] = reflected;
      fs[worst] = f_reflected;
    } else if (out.evals < options.max_evals) {
      const bool outside = f_reflected < fs[worst];
      const std::vector<double> contracted = blend(outside ? -0.5 : 0.5);
      const double f_contracted = objective(contracted);
      ++out.evals;
      if (f_contracted < std::min(f_reflected, fs[worst])) {
        xs[worst] = contracted;
        fs[worst] = f_contracted;
      } else {
        // Shrink toward the best vertex.
        for (int i = 0; i <= d && out.evals < options.max_evals; ++i) {
          if (i == order[0]) continue;
          for (int j = 0; j < d; ++j) xs[i][j] = xs[order[0]][j] + 0.5 * (xs[i][j] - xs[order[0]][j]);
          fs[i] = objective(xs[i]);
          ++out.evals;
        }
      }
    }
    sort_order();
  }
  sort_order();
  out.x = xs[order[0]];
  out.value = fs[order[0]];
  return out;
}

/// F_t objective over the encoded space: decode, run the exact analysis,
/// negate for minimization. Evaluations are memoized on the decoded
/// parameters (identical decoded candidates always yield identical F_t).
class ReliabilityObjective {
 public:
  ReliabilityObjective(const OptimizationProblem& problem, double prune)
      : problem_(problem), codec_(problem.users, problem.total_slots, problem.class_count),
        options_{prune} {}

  double operator()(const std::vector<double>& x) {
    const SystemConfig config = codec_.decode(x);
    std::vector<double> key;
    key.reserve(2 * config.classes.size());
    for (const auto& c : config.classes) {
      key.push_back(static_cast<double>(c.slot_count));
      key.push_back(c.mean_degree);
    }
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    const ReliabilityProfile profile = unresolved_pmf(config, options_);
    const double value = -profile.reliability[problem_.target];
    memo_.emplace(std::move(key), value);
    ++analysis_evals_;
    return value;
  }

  const ParamCodec& codec() const { return codec_; }
  long analysis_evals() const { return analysis_evals_; }

 private:
  OptimizationProblem problem_;
  ParamCodec codec_;
  AnalysisOptions options_;
  std::map<std::vector<double>, double> memo_;
  long analysis_evals_ = 0;
};

struct StartRecord {
  int index = 0;
  SystemConfig start_config;
  SystemConfig best_config;
  double best_reliability = 0.0;  // F_t at search pruning
  int evals = 0;
  bool converged = false;
};

struct OptimizationResult {
  SystemConfig best_config;
  double best_reliability = 0.0;         // tightened re-evaluation of the winner
  double best_reliability_search = 0.0;  // value seen during the search
  double leaked_mass = 0.0;              // of the tightened re-evaluation
  int best_start = 0;
  long total_evals = 0;
  std::vector<StartRecord> starts;
};

namespace detail {

/// Start point: beta^(h) log-uniform on [1, n/2], slot shares uniform on the
/// simplex (exponential spacings).
inline std::vector<double> random_start(const OptimizationProblem& problem, SplitMix64& rng) {
  const int k = problem.class_count;
  std::vector<double> x(2 * k - 1);
  const double log_hi = std::log(std::max(static_cast<double>(problem.users) / 2.0, 1.5));
  for (int h = 0; h < k; ++h) x[h] = rng.next_double() * log_hi;
  std::vector<double> spacing(k);
  for (int h = 0; h < k; ++h) {
    double v = rng.next_double();
    while (v <= 0.0) v = rng.next_double();
    spacing[h] = -std::log(v);
  }
  for (int h = 0; h + 1 < k; ++h) x[k + h] = std::log(spacing[h] / spacing[k - 1]);
  return x;
}

}  // namespace detail

/// Repeated Nelder-Mead searches from deterministic seeded random starts;
/// returns the best solution with every run recorded. The winner is
/// re-evaluated at the tight pruning threshold. Ties between starts break
/// toward fewer evaluations, then the lower start index.
inline OptimizationResult multistart_optimize(const OptimizationProblem& problem) {
  problem.validate();
  OptimizationResult result;
  result.starts.resize(problem.starts);

  const auto run_start = [&](int s) {
    ReliabilityObjective objective(problem, problem.search_prune);
    SplitMix64 rng(derive_seed(problem.seed, static_cast<std::uint64_t>(s)));
    const std::vector<double> start = detail::random_start(problem, rng);
    NelderMeadOptions options;
    options.tol_x = problem.tol_x;
    options.tol_f = problem.tol_f;
    options.max_evals = problem.max_evals_per_start;
    const NelderMeadResult nm = nelder_mead(objective, start, options);
    StartRecord record;
    record.index = s;
    record.start_config = objective.codec().decode(start);
    record.best_config = objective.codec().decode(nm.x);
    record.best_reliability = -nm.value;
    record.evals = nm.evals;
    record.converged = nm.converged;
    result.starts[s] = std::move(record);
  };

  if (problem.jobs <= 1) {
    for (int s = 0; s < problem.starts; ++s) run_start(s);
  } else {
    const int workers = std::min(problem.jobs, problem.starts);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int s = w; s < problem.starts; s += workers) run_start(s);
      });
    for (auto& t : pool) t.join();
  }

  int best = 0;
  for (int s = 1; s < problem.starts; ++s) {
    const auto& a = result.starts[s];
    const auto& b = result.starts[best];
    if (a.best_reliability > b.best_reliability ||
        (a.best_reliability == b.best_reliability &&
         (a.evals < b.evals || (a.evals == b.evals && a.index < b.index))))
      best = s;
  }
  result.best_start = best;
  result.best_config = result.starts[best].best_config;
  result.best_reliability_search = result.starts[best].best_reliability;
  for (const auto& r : result.starts) result.total_evals += r.evals;

  const ReliabilityProfile tight =
      unresolved_pmf(result.best_config, AnalysisOptions{problem.final_prune});
  result.best_reliability = tight.reliability[problem.target];
  result.leaked_mass = tight.leaked_mass;
  return result;
}

}  // namespace frameless
