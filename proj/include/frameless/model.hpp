#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "frameless/combinatorics.hpp"

namespace frameless {

/// One slot class: m^(h) slots sharing the slot-access probability
/// p_a = mean_degree / n.
struct SlotClass {
  int slot_count = 0;        // m^(h)
  double mean_degree = 0.0;  // beta^(h), expected transmissions per slot
};

/// A contention-period configuration: n contending users and an ordered list
/// of slot classes.
struct SystemConfig {
  int users = 0;  // n
  std::vector<SlotClass> classes;

  int class_count() const { return static_cast<int>(classes.size()); }

  int total_slots() const {
    int m = 0;
    for (const auto& c : classes) m += c.slot_count;
    return m;
  }

  /// Throws std::domain_error naming the offending field.
  void validate() const {
    if (users < 1) throw std::domain_error("config.users: must be a positive integer");
    if (classes.empty()) throw std::domain_error("config.classes: at least one slot class is required");
    for (std::size_t h = 0; h < classes.size(); ++h) {
      const auto& c = classes[h];
      const std::string field = "config.classes[" + std::to_string(h) + "]";
      if (c.slot_count < 0) throw std::domain_error(field + ".slot_count: must be nonnegative");
      if (!(c.mean_degree >= 0.0) || !std::isfinite(c.mean_degree))
        throw std::domain_error(field + ".mean_degree: must be a finite nonnegative real");
      if (c.mean_degree > static_cast<double>(users))
        throw std::domain_error(field + ".mean_degree: exceeds users (slot-access probability would exceed 1)");
    }
  }
};

/// Initial slot degree pmf Omega for one class, indexed by degree j = 0..n.
struct DegreeSpectrum {
  std::vector<double> probs;

  int max_degree() const { return static_cast<int>(probs.size()) - 1; }

  double sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

  double mean() const {
    double m = 0.0;
    for (std::size_t j = 1; j < probs.size(); ++j) m += static_cast<double>(j) * probs[j];
    return m;
  }
};

/// Degree distribution induced by per-slot access probability beta/n:
/// Omega_j = C(n,j) (beta/n)^j (1-beta/n)^(n-j).
inline DegreeSpectrum slot_degree_pmf(int n, double beta) {
  if (n < 1) throw std::domain_error("slot_degree_pmf: n must be positive");
  if (!(beta >= 0.0 && beta <= static_cast<double>(n)))
    throw std::domain_error("slot_degree_pmf: beta outside [0, n]");
  std::vector<double> probs(static_cast<std::size_t>(n) + 1, 0.0);
  const double p = beta / static_cast<double>(n);
  if (p == 0.0) {
    probs[0] = 1.0;
  } else if (p == 1.0) {
    probs[n] = 1.0;
  } else {
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    for (int j = 0; j <= n; ++j)
      probs[j] = std::exp(log_choose(n, j) + j * log_p + (n - j) * log_q);
  }
  return DegreeSpectrum{std::move(probs)};
}

}  // namespace frameless
