#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace frameless {

/// ln C(n, k) through log-gamma. Out-of-range k (k < 0 or k > n) returns
/// -infinity, the log of a zero coefficient, so callers can exponentiate
/// without branching.
inline double log_choose(long n, long k) {
  if (n < 0) throw std::domain_error("log_choose: n must be nonnegative");
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// Binomial pmf over 0..trials. Evaluated by the ratio recurrence from the
/// low-entropy end (forward for p <= 1/2, backward otherwise) so every entry
/// is accurate to a few ulps without under/overflow for the sizes used here.
inline std::vector<double> binomial_pmf(int trials, double p) {
  if (trials < 0) throw std::domain_error("binomial_pmf: trials must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_pmf: p outside [0, 1]");
  std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
  if (trials == 0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[trials] = 1.0;
    return pmf;
  }
  if (p <= 0.5) {
    pmf[0] = std::exp(static_cast<double>(trials) * std::log1p(-p));
    const double ratio = p / (1.0 - p);
    for (int b = 0; b < trials; ++b)
      pmf[b + 1] = pmf[b] * ratio * static_cast<double>(trials - b) / static_cast<double>(b + 1);
  } else {
    pmf[trials] = std::exp(static_cast<double>(trials) * std::log(p));
    const double ratio = (1.0 - p) / p;
    for (int b = trials; b > 0; --b)
      pmf[b - 1] = pmf[b] * ratio * static_cast<double>(b) / static_cast<double>(trials - b + 1);
  }
  return pmf;
}

/// Hypergeometric law of the reduced slot degree: probability that a slot of
/// initial degree d keeps exactly j of its users when u of the n users are
/// still unresolved, Pr{j} = C(u,j) C(n-u,d-j) / C(n,d). Returned as a dense
/// vector over j = 0..min(d,u); entries below the support floor
/// max(0, d-(n-u)) are zero.
inline std::vector<double> reduced_degree_pmf(int n, int u, int d) {
  if (n < 1) throw std::domain_error("reduced_degree_pmf: n must be positive");
  if (u < 0 || u > n) throw std::domain_error("reduced_degree_pmf: u outside [0, n]");
  if (d < 0 || d > n) throw std::domain_error("reduced_degree_pmf: d outside [0, n]");
  const int lo = std::max(0, d - (n - u));
  const int hi = std::min(d, u);
  std::vector<double> pmf(static_cast<std::size_t>(hi) + 1, 0.0);
  const double log_total = log_choose(n, d);
  for (int j = lo; j <= hi; ++j)
    pmf[j] = std::exp(log_choose(u, j) + log_choose(n - u, d - j) - log_total);
  return pmf;
}

}  // namespace frameless
