#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "frameless/model.hpp"
#include "frameless/rng.hpp"

namespace frameless {

/// One generated contention period: per-slot lists of transmitting users.
struct ActivationMatrix {
  int users = 0;
  std::vector<std::vector<int>> slot_users;  // ascending user ids per slot
  std::vector<int> slot_class;               // class index per slot
};

/// Independent Bernoulli(beta^(h)/n) draw per (user, slot); slots laid out
/// class by class in declaration order. Deterministic given the seed: slots
/// are drawn in order, users in ascending order within a slot.
inline ActivationMatrix generate_trial(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  ActivationMatrix matrix;
  matrix.users = config.users;
  matrix.slot_users.reserve(config.total_slots());
  matrix.slot_class.reserve(config.total_slots());
  SplitMix64 rng(seed);
  for (int h = 0; h < config.class_count(); ++h) {
    const double p = config.classes[h].mean_degree / config.users;
    for (int s = 0; s < config.classes[h].slot_count; ++s) {
      std::vector<int> active;
      for (int uid = 0; uid < config.users; ++uid)
        if (rng.bernoulli(p)) active.push_back(uid);
      matrix.slot_users.push_back(std::move(active));
      matrix.slot_class.push_back(h);
    }
  }
  return matrix;
}

struct PeelResult {
  std::vector<std::uint8_t> resolved;  // per user
  int resolved_count = 0;
};

/// One iteration of the traced reception process: the state before the
/// resolution plus how many slots left the ripple (a) and left each cloud
/// (b per class).
struct PeelStep {
  int stage_u = 0;  // unresolved users before this resolution
  int ripple = 0;
  int cloud = 0;
  std::vector<int> cloud_by_class;
  int departures = 0;  // slots leaving the ripple, including the selected one
  std::vector<int> exits_by_class;  // slots leaving each cloud for the ripple
};

struct PeelTrace {
  PeelResult result;
  std::vector<PeelStep> steps;
};

/// Work-queue peeling decoder over slots added one at a time. Replicas of
/// already-resolved users are cancelled on arrival, so a slot's degree
/// counts unresolved transmitters only. Degrees only decrease, so each slot
/// enters the ripple at most once and total work is linear in replicas.
class IncrementalDecoder {
 public:
  void reset(int users, int expected_slots, int class_count = 0) {
    users_ = users;
    resolved_.assign(users, 0);
    resolved_count_ = 0;
    user_slots_.resize(users);
    for (auto& v : user_slots_) v.clear();
    slot_degree_.clear();
    slot_degree_.reserve(expected_slots);
    slot_xor_.clear();
    slot_xor_.reserve(expected_slots);
    slot_class_.clear();
    slot_class_.reserve(expected_slots);
    ripple_.clear();
    ripple_head_ = 0;
    ripple_count_ = 0;
    cloud_count_ = 0;
    cloud_by_class_.assign(std::max(class_count, 1), 0);
  }

  /// Adds a slot; transmitters already resolved are dropped immediately.
  int add_slot(const std::vector<int>& transmitters, int slot_class = 0) {
    const int slot = static_cast<int>(slot_degree_.size());
    int degree = 0;
    std::uint32_t x = 0;
    for (int uid : transmitters) {
      if (resolved_[uid]) continue;
      ++degree;
      x ^= static_cast<std::uint32_t>(uid);
      user_slots_[uid].push_back(slot);
    }
    slot_degree_.push_back(degree);
    slot_xor_.push_back(x);
    slot_class_.push_back(slot_class);
    if (degree == 1) {
      ripple_.push_back(slot);
      ++ripple_count_;
    } else if (degree >= 2) {
      ++cloud_count_;
      ++cloud_by_class_[slot_class];
    }
    return slot;
  }

  /// Peels to the fixed point, consuming ripple slots in FIFO order.
  void drain() {
    while (ripple_head_ < ripple_.size()) {
      const int slot = ripple_[ripple_head_++];
      if (slot_degree_[slot] != 1) continue;  // stale entry, already emptied
      resolve_from_slot(slot, nullptr);
    }
  }

  /// Peels to the fixed point picking a ripple slot uniformly at random each
  /// iteration, recording one PeelStep per resolution.
  void drain_traced(SplitMix64& rng, std::vector<PeelStep>& steps) {
    for (;;) {
      // Uniform pick with lazy removal of stale (no longer degree-1) slots.
      int slot = -1;
      while (ripple_head_ < ripple_.size()) {
        const std::size_t live = ripple_.size() - ripple_head_;
        const std::size_t i = ripple_head_ + static_cast<std::size_t>(rng.next_below(live));
        if (slot_degree_[ripple_[i]] != 1) {
          std::swap(ripple_[i], ripple_.back());
          ripple_.pop_back();
          continue;
        }
        slot = ripple_[i];
        break;
      }
      if (slot < 0) return;
      PeelStep step;
      step.stage_u = users_ - resolved_count_;
      step.ripple = ripple_count_;
      step.cloud = cloud_count_;
      step.cloud_by_class = cloud_by_class_;
      step.exits_by_class.assign(cloud_by_class_.size(), 0);
      resolve_from_slot(slot, &step);
      steps.push_back(std::move(step));
    }
  }

  bool is_resolved(int uid) const { return resolved_[uid] != 0; }
  int resolved_count() const { return resolved_count_; }
  int ripple_count() const { return ripple_count_; }
  int cloud_count() const { return cloud_count_; }
  const std::vector<std::uint8_t>& resolved() const { return resolved_; }

 private:
  void resolve_from_slot(int slot, PeelStep* step) {
    const int uid = static_cast<int>(slot_xor_[slot]);
    resolved_[uid] = 1;
    ++resolved_count_;
    for (int t : user_slots_[uid]) {
      const int degree = slot_degree_[t]--;
      slot_xor_[t] ^= static_cast<std::uint32_t>(uid);
      if (degree == 1) {
        --ripple_count_;
        if (step) ++step->departures;
      } else if (degree == 2) {
        --cloud_count_;
        --cloud_by_class_[slot_class_[t]];
        ++ripple_count_;
        ripple_.push_back(t);
        if (step) ++step->exits_by_class[slot_class_[t]];
      }
    }
    user_slots_[uid].clear();
  }

  int users_ = 0;
  std::vector<std::uint8_t> resolved_;
  int resolved_count_ = 0;
  std::vector<std::vector<int>> user_slots_;
  std::vector<int> slot_degree_;
  std::vector<std::uint32_t> slot_xor_;
  std::vector<int> slot_class_;
  std::vector<int> ripple_;
  std::size_t ripple_head_ = 0;
  int ripple_count_ = 0;
  int cloud_count_ = 0;
  std::vector<int> cloud_by_class_;
};

/// Peeling decode of a whole contention period. The resolved set does not
/// depend on the order ripple slots are consumed, so the deterministic FIFO
/// order is used.
inline PeelResult peel(const ActivationMatrix& matrix) {
  IncrementalDecoder decoder;
  decoder.reset(matrix.users, static_cast<int>(matrix.slot_users.size()));
  for (std::size_t s = 0; s < matrix.slot_users.size(); ++s)
    decoder.add_slot(matrix.slot_users[s], matrix.slot_class.empty() ? 0 : matrix.slot_class[s]);
  decoder.drain();
  return PeelResult{decoder.resolved(), decoder.resolved_count()};
}

/// Peeling decode with uniformly random ripple picks and a per-iteration
/// state trace, for validating the analytical transition statistics.
inline PeelTrace peel_traced(const ActivationMatrix& matrix, std::uint64_t seed) {
  int classes = 1;
  for (int c : matrix.slot_class) classes = std::max(classes, c + 1);
  IncrementalDecoder decoder;
  decoder.reset(matrix.users, static_cast<int>(matrix.slot_users.size()), classes);
  for (std::size_t s = 0; s < matrix.slot_users.size(); ++s)
    decoder.add_slot(matrix.slot_users[s], matrix.slot_class.empty() ? 0 : matrix.slot_class[s]);
  SplitMix64 rng(seed);
  PeelTrace trace;
  decoder.drain_traced(rng, trace.steps);
  trace.result = PeelResult{decoder.resolved(), decoder.resolved_count()};
  return trace;
}

/// One simulated contention period.
struct TrialOutcome {
  int resolved_count = 0;
  /// resolution_slot_trace[l] = users resolvable from the first l slots
  /// (present when requested).
  std::vector<int> resolution_slot_trace;
  std::uint64_t seed = 0;
};

/// Simulates one contention period, decoding incrementally slot by slot.
/// Identical activations (and final resolved count) to
/// peel(generate_trial(config, seed)).
inline TrialOutcome run_trial(const SystemConfig& config, std::uint64_t seed,
                              bool with_slot_trace = false) {
  config.validate();
  IncrementalDecoder decoder;
  decoder.reset(config.users, config.total_slots(), config.class_count());
  SplitMix64 rng(seed);
  TrialOutcome outcome;
  outcome.seed = seed;
  if (with_slot_trace) outcome.resolution_slot_trace.push_back(0);
  std::vector<int> active;
  for (int h = 0; h < config.class_count(); ++h) {
    const double p = config.classes[h].mean_degree / config.users;
    for (int s = 0; s < config.classes[h].slot_count; ++s) {
      active.clear();
      for (int uid = 0; uid < config.users; ++uid)
        if (rng.bernoulli(p)) active.push_back(uid);
      decoder.add_slot(active, h);
      decoder.drain();
      if (with_slot_trace) outcome.resolution_slot_trace.push_back(decoder.resolved_count());
    }
  }
  outcome.resolved_count = decoder.resolved_count();
  return outcome;
}

/// Aggregate of independent simulated contention periods.
struct EmpiricalPmf {
  int users = 0;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> unresolved_counts;  // histogram over u = 0..n

  double p_hat(int u) const {
    return static_cast<double>(unresolved_counts[u]) / static_cast<double>(trials);
  }

  /// Empirical F_t = fraction of trials with at least t users resolved.
  std::vector<double> reliability_hat() const {
    std::vector<double> f(static_cast<std::size_t>(users) + 1, 0.0);
    double cum = 0.0;
    for (int t = users; t >= 0; --t) {
      cum += static_cast<double>(unresolved_counts[users - t]);
      f[t] = cum / static_cast<double>(trials);
    }
    return f;
  }
};

namespace detail {

template <typename PerTrial>
inline void for_each_trial(std::uint64_t trials, int jobs, PerTrial&& body) {
  if (jobs <= 1) {
    for (std::uint64_t i = 0; i < trials; ++i) body(i, 0);
    return;
  }
  const int workers = std::min<std::uint64_t>(jobs, trials ? trials : 1);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::uint64_t i = w; i < trials; i += workers) body(i, w);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Runs independent contention periods; per-trial seeds derive from
/// (master seed, trial index), so the histogram is identical for any job
/// count. Trials may run on several threads; the merge is a sum of integer
/// counts.
inline EmpiricalPmf run_trials(const SystemConfig& config, std::uint64_t trials,
                               std::uint64_t seed, int jobs = 1) {
  config.validate();
  if (trials < 1) throw std::domain_error("run_trials: trials must be >= 1");
  const int n = config.users;
  const int workers = jobs <= 1 ? 1 : jobs;
  std::vector<std::vector<std::uint64_t>> hists(
      workers, std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));

  struct Worker {
    IncrementalDecoder decoder;
    std::vector<int> active;
  };
  std::vector<Worker> state(workers);

  detail::for_each_trial(trials, workers, [&](std::uint64_t i, int w) {
    Worker& ws = state[w];
    ws.decoder.reset(n, config.total_slots(), config.class_count());
    SplitMix64 rng(derive_seed(seed, i));
    for (int h = 0; h < config.class_count(); ++h) {
      const double p = config.classes[h].mean_degree / n;
      for (int s = 0; s < config.classes[h].slot_count; ++s) {
        ws.active.clear();
        for (int uid = 0; uid < n; ++uid)
          if (rng.bernoulli(p)) ws.active.push_back(uid);
        ws.decoder.add_slot(ws.active, h);
      }
    }
    ws.decoder.drain();
    ++hists[w][n - ws.decoder.resolved_count()];
  });

  EmpiricalPmf pmf;
  pmf.users = n;
  pmf.trials = trials;
  pmf.master_seed = seed;
  pmf.unresolved_counts.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& h : hists)
    for (std::size_t u = 0; u < h.size(); ++u) pmf.unresolved_counts[u] += h[u];
  return pmf;
}

/// Slot-access mean degree of the adaptive heuristic,
/// beta = (n/u) (1 + (beta* - 1) (m - (n-u) - c_u) / m), clamped so the
/// per-slot access probability beta/n stays in [0, 1].
inline double adaptive_beta(int n, int u, int m, int c_u, double beta_star) {
  if (n < 1) throw std::domain_error("adaptive_beta: n must be positive");
  if (u < 1 || u > n) throw std::domain_error("adaptive_beta: u outside [1, n]");
  if (m < 1) throw std::domain_error("adaptive_beta: m must be positive");
  if (c_u < 0 || c_u > m) throw std::domain_error("adaptive_beta: c_u outside [0, m]");
  if (!(beta_star > 0.0)) throw std::domain_error("adaptive_beta: beta_star must be positive");
  const double fill = static_cast<double>(m - (n - u) - c_u) / static_cast<double>(m);
  const double beta = (static_cast<double>(n) / u) * (1.0 + (beta_star - 1.0) * fill);
  return std::clamp(beta, 0.0, static_cast<double>(n));
}

/// Outcome of the adaptive single-class scheme over many periods.
struct AdaptiveResult {
  int users = 0;
  int slots = 0;
  double beta_star = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> unresolved_counts;
  std::uint64_t failure_count = 0;  // periods with at least one unresolved user

  double failure_rate() const {
    return static_cast<double>(failure_count) / static_cast<double>(trials);
  }

  std::vector<double> reliability_hat() const {
    EmpiricalPmf view;
    view.users = users;
    view.trials = trials;
    view.unresolved_counts = unresolved_counts;
    return view.reliability_hat();
  }
};

/// Simulates the adaptive scheme: before every slot, beta is recomputed from
/// the current unresolved count u and the pooled cloud cardinality (elapsed
/// slots of reduced degree >= 2), each unresolved user transmits with
/// probability beta/n, and peeling runs to its fixed point. Resolved users'
/// later replicas carry no information (they are cancelled on arrival), so
/// their transmissions are not drawn.
inline AdaptiveResult run_adaptive(int n, int m, double beta_star, std::uint64_t trials,
                                   std::uint64_t seed, int jobs = 1) {
  if (n < 1) throw std::domain_error("run_adaptive: n must be positive");
  if (m < 0) throw std::domain_error("run_adaptive: m must be nonnegative");
  if (!(beta_star > 0.0)) throw std::domain_error("run_adaptive: beta_star must be positive");
  if (trials < 1) throw std::domain_error("run_adaptive: trials must be >= 1");
  const int workers = jobs <= 1 ? 1 : jobs;
  std::vector<std::vector<std::uint64_t>> hists(
      workers, std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));

  struct Worker {
    IncrementalDecoder decoder;
    std::vector<int> active;
  };
  std::vector<Worker> state(workers);

  detail::for_each_trial(trials, workers, [&](std::uint64_t i, int w) {
    Worker& ws = state[w];
    ws.decoder.reset(n, m);
    SplitMix64 rng(derive_seed(seed, i));
    for (int s = 0; s < m; ++s) {
      const int u = n - ws.decoder.resolved_count();
      if (u == 0) break;
      const double beta = adaptive_beta(n, u, m, ws.decoder.cloud_count(), beta_star);
      const double p = beta / n;
      ws.active.clear();
      for (int uid = 0; uid < n; ++uid) {
        if (ws.decoder.is_resolved(uid)) continue;
        if (rng.bernoulli(p)) ws.active.push_back(uid);
      }
      ws.decoder.add_slot(ws.active);
      ws.decoder.drain();
    }
    ++hists[w][n - ws.decoder.resolved_count()];
  });

  AdaptiveResult result;
  result.users = n;
  result.slots = m;
  result.beta_star = beta_star;
  result.trials = trials;
  result.master_seed = seed;
  result.unresolved_counts.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& h : hists)
    for (std::size_t u = 0; u < h.size(); ++u) result.unresolved_counts[u] += h[u];
  for (std::size_t u = 1; u < result.unresolved_counts.size(); ++u)
    result.failure_count += result.unresolved_counts[u];
  return result;
}

}  // namespace frameless
