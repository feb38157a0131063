#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace frameless {

namespace detail {

/// Continued fraction for the regularized incomplete beta function
/// (modified Lentz method, as in Numerical Recipes' betacf).
inline double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("reg_inc_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(log_front) * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - std::exp(log_front) * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

namespace detail {

/// Quantile of Beta(a, b) by bisection on I_x(a, b).
inline double beta_quantile(double a, double b, double prob) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (reg_inc_beta(a, b, mid) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Two-sided Clopper-Pearson interval for a binomial proportion at the given
/// confidence level (e.g. 0.997). Exact and conservative, so it behaves
/// sensibly for counts of 0 or 1 where the normal approximation breaks down.
inline ConfidenceInterval clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                                          double confidence) {
  if (trials == 0) throw std::domain_error("clopper_pearson: trials must be positive");
  if (successes > trials) throw std::domain_error("clopper_pearson: successes exceed trials");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::domain_error("clopper_pearson: confidence outside (0, 1)");
  const double alpha = 1.0 - confidence;
  const double x = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  ConfidenceInterval ci;
  ci.lo = (successes == 0) ? 0.0 : detail::beta_quantile(x, n - x + 1.0, alpha / 2.0);
  ci.hi = (successes == trials) ? 1.0 : detail::beta_quantile(x + 1.0, n - x, 1.0 - alpha / 2.0);
  return ci;
}

/// Standard error of an empirical proportion.
inline double binomial_std_error(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) throw std::domain_error("binomial_std_error: trials must be positive");
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace frameless
