#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "frameless/combinatorics.hpp"
#include "frameless/model.hpp"

namespace frameless {

struct AnalysisOptions {
  /// States whose probability falls below this are dropped at stage
  /// boundaries and their mass accumulated in leaked_mass. Zero disables
  /// pruning.
  double prune_threshold = 1e-15;
};

/// Receiver state at a reception stage: cloud cardinalities c^(1..k) and the
/// ripple cardinality r.
struct DecoderState {
  std::vector<int> cloud_sizes;
  int ripple_size = 0;

  friend auto operator<=>(const DecoderState&, const DecoderState&) = default;
};

/// Probability of a class-h cloud slot leaving the cloud (reduced degree
/// 2 -> 1) when one of the u unresolved users becomes resolved.
struct CloudExitProb {
  double value = 0.0;
  /// False when no slot of this spectrum can be in the cloud at stage u
  /// (denominator zero); value is 0 by convention and no reachable state
  /// carries cloud slots.
  bool cloud_possible = false;
};

inline CloudExitProb cloud_exit_prob(int n, int u, const DegreeSpectrum& spectrum) {
  if (n < 1) throw std::domain_error("cloud_exit_prob: n must be positive");
  if (u < 1 || u > n) throw std::domain_error("cloud_exit_prob: u outside [1, n]");
  const int dmax = std::min(spectrum.max_degree(), n);
  double num = 0.0;
  double den = 0.0;
  for (int d = 2; d <= dmax; ++d) {
    const double w = spectrum.probs[d];
    if (w == 0.0) continue;
    // Resolved user is in the slot (d/n) and exactly one of its other d-1
    // users is among the u-1 remaining unresolved ones.
    num += w * (static_cast<double>(d) / n) * static_cast<double>(u - 1) *
           std::exp(log_choose(n - u, d - 2) - log_choose(n - 1, d - 1));
    // Slot is in the cloud: reduced degree >= 2. Direct tail sum rather than
    // 1 minus the head, to keep accuracy when the cloud is improbable.
    const double log_nd = log_choose(n, d);
    double tail = 0.0;
    for (int j = 2; j <= std::min(d, u); ++j)
      tail += std::exp(log_choose(u, j) + log_choose(n - u, d - j) - log_nd);
    den += w * tail;
  }
  if (den < DBL_MIN) return CloudExitProb{0.0, false};
  return CloudExitProb{std::clamp(num / den, 0.0, 1.0), true};
}

/// Algebraically equivalent numerator written from the unresolved-pair
/// perspective, (2/u) C(u,2) C(n-u,d-2) / C(n,d). Kept as an independent
/// route for cross-checking cloud_exit_prob.
inline CloudExitProb cloud_exit_prob_pair_form(int n, int u, const DegreeSpectrum& spectrum) {
  if (n < 1) throw std::domain_error("cloud_exit_prob_pair_form: n must be positive");
  if (u < 1 || u > n) throw std::domain_error("cloud_exit_prob_pair_form: u outside [1, n]");
  const int dmax = std::min(spectrum.max_degree(), n);
  double num = 0.0;
  double den = 0.0;
  for (int d = 2; d <= dmax; ++d) {
    const double w = spectrum.probs[d];
    if (w == 0.0) continue;
    const double log_nd = log_choose(n, d);
    num += w * (2.0 / u) * std::exp(log_choose(u, 2) + log_choose(n - u, d - 2) - log_nd);
    double tail = 0.0;
    for (int j = 2; j <= std::min(d, u); ++j)
      tail += std::exp(log_choose(u, j) + log_choose(n - u, d - j) - log_nd);
    den += w * tail;
  }
  if (den < DBL_MIN) return CloudExitProb{0.0, false};
  return CloudExitProb{std::clamp(num / den, 0.0, 1.0), true};
}

/// Law of the number of slots A_u leaving the ripple when one of u users is
/// resolved from a ripple of size r: the selected slot always leaves, each of
/// the other r-1 contains the resolved user with probability 1/u. Returned
/// over a = 1..r (index a-1).
inline std::vector<double> ripple_departure_pmf(int r, int u) {
  if (r < 1) throw std::domain_error("ripple_departure_pmf: empty ripple is terminal, r must be >= 1");
  if (u < 1) throw std::domain_error("ripple_departure_pmf: u must be positive");
  return binomial_pmf(r - 1, 1.0 / u);
}

/// Sparse probability mass over decoder states at one stage u, plus the mass
/// pruned away so far. Stored internally as a flat mixed-radix array
/// (ripple coordinate fastest) so stage transitions are tight loops; only
/// strictly positive entries are observable.
class StatePmf {
 public:
  StatePmf(std::vector<int> cloud_caps, int ripple_cap, int stage)
      : cloud_caps_(std::move(cloud_caps)), ripple_cap_(ripple_cap), stage_(stage) {
    std::uint64_t cells = static_cast<std::uint64_t>(ripple_cap_) + 1;
    for (int cap : cloud_caps_) {
      if (cap < 0) throw std::domain_error("StatePmf: negative cloud capacity");
      cells *= static_cast<std::uint64_t>(cap) + 1;
      if (cells > kMaxCells) throw std::domain_error("StatePmf: state space too large");
    }
    buf_.assign(cells, 0.0);
    strides_.assign(cloud_caps_.size(), 0);
    std::uint64_t stride = static_cast<std::uint64_t>(ripple_cap_) + 1;
    for (std::size_t h = cloud_caps_.size(); h-- > 0;) {
      strides_[h] = stride;
      stride *= static_cast<std::uint64_t>(cloud_caps_[h]) + 1;
    }
  }

  static StatePmf from_entries(const SystemConfig& config, int stage,
                               const std::vector<std::pair<DecoderState, double>>& entries,
                               double leaked_mass = 0.0) {
    std::vector<int> caps;
    caps.reserve(config.classes.size());
    for (const auto& c : config.classes) caps.push_back(c.slot_count);
    StatePmf pmf(std::move(caps), config.total_slots(), stage);
    for (const auto& [state, prob] : entries) {
      int occupied = state.ripple_size;
      for (int c : state.cloud_sizes) occupied += c;
      if (occupied > pmf.ripple_cap_)
        throw std::domain_error("StatePmf: cloud and ripple sizes exceed the slot count");
      pmf.buf_[pmf.index_of(state)] += prob;
    }
    pmf.leaked_ = leaked_mass;
    return pmf;
  }

  int stage() const { return stage_; }
  double leaked_mass() const { return leaked_; }
  int class_count() const { return static_cast<int>(cloud_caps_.size()); }
  const std::vector<int>& cloud_caps() const { return cloud_caps_; }
  int ripple_cap() const { return ripple_cap_; }

  double prob(const DecoderState& state) const { return buf_[index_of(state)]; }

  double total_mass() const {
    double s = 0.0;
    for (double v : buf_) s += v;
    return s;
  }

  /// Strictly positive entries in lexicographic state order.
  std::vector<std::pair<DecoderState, double>> entries() const {
    std::vector<std::pair<DecoderState, double>> out;
    for (std::uint64_t idx = 0; idx < buf_.size(); ++idx)
      if (buf_[idx] > 0.0) out.emplace_back(state_of(idx), buf_[idx]);
    return out;
  }

  std::uint64_t index_of(const DecoderState& state) const {
    if (state.cloud_sizes.size() != cloud_caps_.size())
      throw std::domain_error("StatePmf: state has wrong number of cloud classes");
    std::uint64_t idx = 0;
    for (std::size_t h = 0; h < cloud_caps_.size(); ++h) {
      const int c = state.cloud_sizes[h];
      if (c < 0 || c > cloud_caps_[h]) throw std::domain_error("StatePmf: cloud size out of range");
      idx += static_cast<std::uint64_t>(c) * strides_[h];
    }
    if (state.ripple_size < 0 || state.ripple_size > ripple_cap_)
      throw std::domain_error("StatePmf: ripple size out of range");
    return idx + static_cast<std::uint64_t>(state.ripple_size);
  }

  DecoderState state_of(std::uint64_t idx) const {
    DecoderState s;
    s.cloud_sizes.resize(cloud_caps_.size());
    for (std::size_t h = 0; h < cloud_caps_.size(); ++h) {
      s.cloud_sizes[h] = static_cast<int>(idx / strides_[h]);
      idx %= strides_[h];
    }
    s.ripple_size = static_cast<int>(idx);
    return s;
  }

 private:
  static constexpr std::uint64_t kMaxCells = 1ull << 26;  // 512 MiB of doubles

  std::vector<int> cloud_caps_;  // m^(h)
  int ripple_cap_;               // m
  int stage_;
  double leaked_ = 0.0;
  std::vector<double> buf_;
  std::vector<std::uint64_t> strides_;

  friend class AnalysisEngine;
};

/// Reliability profile of one configuration: pmf of the unresolved-user
/// count, the reliability table F_t, the expected per-user packet error
/// probability and the throughput.
struct ReliabilityProfile {
  SystemConfig config;
  std::vector<double> pmf;          // P_u, u = 0..n
  std::vector<double> reliability;  // F_t, t = 0..n
  double expected_per = 0.0;        // P
  double throughput = 0.0;          // T = n(1-P)/m
  bool throughput_defined = false;  // false iff m = 0
  double leaked_mass = 0.0;

  double expected_resolved() const {
    return static_cast<double>(config.users) * (1.0 - expected_per);
  }
};

/// Precomputed tables and buffers for running the state-machine recursion on
/// one configuration. Stateless across calls except for scratch space; all
/// loops run in a fixed order, so results are bit-for-bit reproducible.
class AnalysisEngine {
 public:
  AnalysisEngine(const SystemConfig& config, const AnalysisOptions& options = {})
      : config_(config), options_(options) {
    config_.validate();
    if (options_.prune_threshold < 0.0)
      throw std::domain_error("AnalysisOptions.prune_threshold: must be nonnegative");
    n_ = config_.users;
    k_ = config_.class_count();
    m_ = config_.total_slots();
    log_factorial_.resize(static_cast<std::size_t>(std::max(n_, m_)) + 2);
    for (std::size_t i = 0; i < log_factorial_.size(); ++i)
      log_factorial_[i] = std::lgamma(static_cast<double>(i) + 1.0);
    spectra_.reserve(k_);
    for (const auto& cls : config_.classes) spectra_.push_back(slot_degree_pmf(n_, cls.mean_degree));
    // q_u^(h) for u = 1..n.
    q_.assign(static_cast<std::size_t>(n_) + 1, std::vector<double>(k_, 0.0));
    for (int u = 1; u <= n_; ++u)
      for (int h = 0; h < k_; ++h) q_[u][h] = exit_prob(u, spectra_[h]);
  }

  const SystemConfig& config() const { return config_; }
  const DegreeSpectrum& spectrum(int h) const { return spectra_[h]; }
  double exit_probability(int u, int h) const { return q_[u][h]; }

  /// Initial state distribution at stage u = n: per class an independent
  /// trinomial over (cloud, ripple, degree-0) slots, ripple counts summed
  /// across classes.
  StatePmf initial_state() {
    std::vector<int> caps;
    caps.reserve(k_);
    for (const auto& cls : config_.classes) caps.push_back(cls.slot_count);
    StatePmf pmf(std::move(caps), m_, n_);

    // Progressive convolution over classes; partial shape (c^(1..h), r).
    std::vector<double> cur = trinomial_plane(0);
    const std::uint64_t ripple_dim = static_cast<std::uint64_t>(m_) + 1;
    for (int h = 1; h < k_; ++h) {
      const std::vector<double> plane = trinomial_plane(h);
      const std::uint64_t class_dim = static_cast<std::uint64_t>(config_.classes[h].slot_count) + 1;
      std::vector<double> next(cur.size() * class_dim, 0.0);
      for (std::uint64_t idx = 0; idx < cur.size(); ++idx) {
        const double v = cur[idx];
        if (v == 0.0) continue;
        const std::uint64_t prefix = idx / ripple_dim;
        const std::uint64_t r = idx % ripple_dim;
        for (std::uint64_t c = 0; c < class_dim; ++c)
          for (std::uint64_t rh = 0; rh + c <= static_cast<std::uint64_t>(config_.classes[h].slot_count); ++rh) {
            const double t = plane[c * ripple_dim + rh];
            if (t == 0.0) continue;
            next[(prefix * class_dim + c) * ripple_dim + (r + rh)] += v * t;
          }
      }
      cur = std::move(next);
    }
    pmf.buf_ = std::move(cur);
    prune(pmf);
    return pmf;
  }

  /// One reception step: removes the mass of empty-ripple states (the
  /// terminal mass at the current stage u) and fans the rest out to stage
  /// u-1. The fan-out factorizes into the ripple-departure convolution
  /// followed by one binomial convolution per cloud class.
  double step(StatePmf& pmf) {
    const int u = pmf.stage_;
    if (u < 1) throw std::domain_error("AnalysisEngine::step: stage must be >= 1");
    if (u > n_) throw std::domain_error("AnalysisEngine::step: stage exceeds user count");
    if (pmf.class_count() != k_ || pmf.ripple_cap_ != m_)
      throw std::domain_error("AnalysisEngine::step: state pmf shape does not match the configuration");
    for (int h = 0; h < k_; ++h)
      if (pmf.cloud_caps_[h] != config_.classes[h].slot_count)
        throw std::domain_error("AnalysisEngine::step: state pmf shape does not match the configuration");
    std::vector<double>& buf = pmf.buf_;
    const std::uint64_t size = buf.size();
    const std::uint64_t ripple_dim = static_cast<std::uint64_t>(pmf.ripple_cap_) + 1;

    double terminal = 0.0;
    for (std::uint64_t idx = 0; idx < size; idx += ripple_dim) {
      terminal += buf[idx];
      buf[idx] = 0.0;
    }

    // Ripple departures: r -> r - a, a = 1..r, weight Binom(a-1; r-1, 1/u).
    rows_.build(pmf.ripple_cap_ > 0 ? pmf.ripple_cap_ - 1 : 0, 1.0 / u);
    scratch_.assign(size, 0.0);
    for (std::uint64_t idx = 0; idx < size; ++idx) {
      const double v = buf[idx];
      if (v == 0.0) continue;
      const int r = static_cast<int>(idx % ripple_dim);
      const double* row = rows_.row(r - 1);
      for (int a = 1; a <= r; ++a) scratch_[idx - a] += v * row[a - 1];
    }
    buf.swap(scratch_);

    // Cloud exits, one class at a time: c -> c - b, r -> r + b, weight
    // Binom(b; c, q_u^(h)). Identity when the class is empty or q = 0.
    for (int h = 0; h < k_; ++h) {
      const int cap = pmf.cloud_caps_[h];
      const double q = q_[u][h];
      if (cap == 0 || q == 0.0) continue;
      rows_.build(cap, q);
      const std::uint64_t stride = pmf.strides_[h];
      const std::uint64_t class_dim = static_cast<std::uint64_t>(cap) + 1;
      scratch_.assign(size, 0.0);
      for (std::uint64_t idx = 0; idx < size; ++idx) {
        const double v = buf[idx];
        if (v == 0.0) continue;
        const int c = static_cast<int>((idx / stride) % class_dim);
        if (c == 0) {
          scratch_[idx] += v;
          continue;
        }
        const double* row = rows_.row(c);
        std::uint64_t dst = idx;
        scratch_[dst] += v * row[0];
        for (int b = 1; b <= c; ++b) {
          dst -= stride - 1;  // c down one, r up one
          scratch_[dst] += v * row[b];
        }
      }
      buf.swap(scratch_);
    }

    pmf.stage_ = u - 1;
    prune(pmf);
    return terminal;
  }

 private:
  /// Triangle of binomial pmf rows: row(t) holds Binom(.; t, p) over 0..t.
  struct RowTriangle {
    std::vector<double> data;
    std::vector<std::size_t> offset;

    void build(int max_trials, double p) {
      offset.resize(static_cast<std::size_t>(max_trials) + 1);
      std::size_t total = 0;
      for (int t = 0; t <= max_trials; ++t) {
        offset[t] = total;
        total += static_cast<std::size_t>(t) + 1;
      }
      data.assign(total, 0.0);
      for (int t = 0; t <= max_trials; ++t) {
        double* row = data.data() + offset[t];
        if (t == 0) {
          row[0] = 1.0;
        } else if (p <= 0.0) {
          row[0] = 1.0;
        } else if (p >= 1.0) {
          row[t] = 1.0;
        } else if (p <= 0.5) {
          row[0] = std::exp(t * std::log1p(-p));
          const double ratio = p / (1.0 - p);
          for (int b = 0; b < t; ++b)
            row[b + 1] = row[b] * ratio * static_cast<double>(t - b) / static_cast<double>(b + 1);
        } else {
          row[t] = std::exp(t * std::log(p));
          const double ratio = (1.0 - p) / p;
          for (int b = t; b > 0; --b)
            row[b - 1] = row[b] * ratio * static_cast<double>(b) / static_cast<double>(t - b + 1);
        }
      }
    }

    const double* row(int t) const { return data.data() + offset[t]; }
  };

  double log_choose_fast(int n, int k) const {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return log_factorial_[n] - log_factorial_[k] - log_factorial_[n - k];
  }

  double exit_prob(int u, const DegreeSpectrum& spectrum) const {
    const int dmax = std::min(spectrum.max_degree(), n_);
    double num = 0.0;
    double den = 0.0;
    for (int d = 2; d <= dmax; ++d) {
      const double w = spectrum.probs[d];
      if (w == 0.0) continue;
      num += w * (static_cast<double>(d) / n_) * static_cast<double>(u - 1) *
             std::exp(log_choose_fast(n_ - u, d - 2) - log_choose_fast(n_ - 1, d - 1));
      const double log_nd = log_choose_fast(n_, d);
      double tail = 0.0;
      for (int j = 2; j <= std::min(d, u); ++j)
        tail += std::exp(log_choose_fast(u, j) + log_choose_fast(n_ - u, d - j) - log_nd);
      den += w * tail;
    }
    if (den < DBL_MIN) return 0.0;
    return std::clamp(num / den, 0.0, 1.0);
  }

  /// Trinomial over (cloud, ripple) counts of one class, flattened as
  /// c * (m+1) + r with the full-configuration ripple dimension.
  std::vector<double> trinomial_plane(int h) const {
    const int slots = config_.classes[h].slot_count;
    const std::uint64_t ripple_dim = static_cast<std::uint64_t>(m_) + 1;
    std::vector<double> plane((static_cast<std::uint64_t>(slots) + 1) * ripple_dim, 0.0);
    const DegreeSpectrum& omega = spectra_[h];
    const double p_zero = omega.probs[0];
    const double p_ripple = omega.max_degree() >= 1 ? omega.probs[1] : 0.0;
    const double p_cloud = std::max(0.0, 1.0 - p_zero - p_ripple);
    const double log_m = log_factorial_[slots];
    for (int c = 0; c <= slots; ++c) {
      if (p_cloud == 0.0 && c > 0) continue;
      for (int r = 0; r + c <= slots; ++r) {
        if (p_ripple == 0.0 && r > 0) continue;
        const int z = slots - c - r;
        if (p_zero == 0.0 && z > 0) continue;
        double log_v = log_m - log_factorial_[c] - log_factorial_[r] - log_factorial_[z];
        if (c > 0) log_v += c * std::log(p_cloud);
        if (r > 0) log_v += r * std::log(p_ripple);
        if (z > 0) log_v += z * std::log(p_zero);
        plane[static_cast<std::uint64_t>(c) * ripple_dim + r] = std::exp(log_v);
      }
    }
    return plane;
  }

  void prune(StatePmf& pmf) {
    const double threshold = options_.prune_threshold;
    if (threshold <= 0.0) return;
    for (double& v : pmf.buf_) {
      if (v != 0.0 && v < threshold) {
        pmf.leaked_ += v;
        v = 0.0;
      }
    }
  }

  SystemConfig config_;
  AnalysisOptions options_;
  int n_ = 0, k_ = 0, m_ = 0;
  std::vector<double> log_factorial_;
  std::vector<DegreeSpectrum> spectra_;
  std::vector<std::vector<double>> q_;
  RowTriangle rows_;
  std::vector<double> scratch_;
};

/// Initial state distribution at stage u = n.
inline StatePmf initial_state_pmf(const SystemConfig& config, const AnalysisOptions& options = {}) {
  AnalysisEngine engine(config, options);
  return engine.initial_state();
}

/// One state transition u -> u-1. Returns the advanced pmf and the terminal
/// mass collected at stage u (states whose ripple was empty).
inline std::pair<StatePmf, double> transition(StatePmf pmf, const SystemConfig& config,
                                              const AnalysisOptions& options = {}) {
  AnalysisEngine engine(config, options);
  const double terminal = engine.step(pmf);
  return {std::move(pmf), terminal};
}

/// Full recursion: pmf of the number of unresolved users after the
/// contention period, with the reliability table, expected packet error
/// probability and throughput.
inline ReliabilityProfile unresolved_pmf(const SystemConfig& config,
                                         const AnalysisOptions& options = {}) {
  AnalysisEngine engine(config, options);
  const int n = config.users;
  StatePmf state = engine.initial_state();
  ReliabilityProfile profile;
  profile.config = config;
  profile.pmf.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int u = n; u >= 1; --u) profile.pmf[u] = engine.step(state);
  profile.pmf[0] = state.total_mass();
  profile.leaked_mass = state.leaked_mass();

  profile.reliability.assign(static_cast<std::size_t>(n) + 1, 0.0);
  double cum = 0.0;
  for (int t = n; t >= 0; --t) {
    cum += profile.pmf[n - t];
    profile.reliability[t] = cum;  // F_t = sum_{u=0}^{n-t} P_u
  }
  double per = 0.0;
  for (int u = 1; u <= n; ++u) per += (static_cast<double>(u) / n) * profile.pmf[u];
  profile.expected_per = per;
  const int m = config.total_slots();
  profile.throughput_defined = m > 0;
  profile.throughput = m > 0 ? n * (1.0 - per) / m : 0.0;
  return profile;
}

/// Classes in declaration order, each class' slots in one contiguous batch.
inline std::vector<int> batched_slot_order(const SystemConfig& config) {
  std::vector<int> order;
  order.reserve(config.total_slots());
  for (int h = 0; h < config.class_count(); ++h)
    order.insert(order.end(), config.classes[h].slot_count, h);
  return order;
}

/// Mean number of resolved users n_r after each slot prefix of the given
/// order (entry l covers the first l slots; entry 0 is 0). The order must
/// contain exactly m^(h) entries of each class h.
inline std::vector<double> intermediate_profile(const SystemConfig& config,
                                                const std::vector<int>& slot_order,
                                                const AnalysisOptions& options = {}) {
  config.validate();
  const int m = config.total_slots();
  if (static_cast<int>(slot_order.size()) != m)
    throw std::domain_error("intermediate_profile: slot_order length differs from total slots");
  std::vector<int> counts(config.class_count(), 0);
  for (int cls : slot_order) {
    if (cls < 0 || cls >= config.class_count())
      throw std::domain_error("intermediate_profile: slot_order names an unknown class");
    ++counts[cls];
  }
  for (int h = 0; h < config.class_count(); ++h)
    if (counts[h] != config.classes[h].slot_count)
      throw std::domain_error("intermediate_profile: slot_order is inconsistent with class slot counts");

  std::vector<double> resolved(static_cast<std::size_t>(m) + 1, 0.0);
  SystemConfig prefix = config;
  for (auto& cls : prefix.classes) cls.slot_count = 0;
  for (int len = 1; len <= m; ++len) {
    ++prefix.classes[slot_order[len - 1]].slot_count;
    const ReliabilityProfile profile = unresolved_pmf(prefix, options);
    resolved[len] = profile.expected_resolved();
  }
  return resolved;
}

}  // namespace frameless
