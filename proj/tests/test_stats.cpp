#include <catch2/catch.hpp>

#include <cmath>

#include "frameless/stats.hpp"

using namespace frameless;

TEST_CASE("regularized incomplete beta identities", "[stats]") {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.93, 1.0}) {
    CHECK(reg_inc_beta(1.0, 1.0, x) == Approx(x).margin(1e-12));
    CHECK(reg_inc_beta(3.0, 1.0, x) == Approx(x * x * x).margin(1e-12));
    CHECK(reg_inc_beta(1.0, 4.0, x) == Approx(1.0 - std::pow(1.0 - x, 4.0)).margin(1e-12));
  }
  for (double x : {0.12, 0.5, 0.77})
    CHECK(reg_inc_beta(2.5, 7.0, x) == Approx(1.0 - reg_inc_beta(7.0, 2.5, 1.0 - x)).margin(1e-12));
  CHECK_THROWS_AS(reg_inc_beta(0.0, 1.0, 0.5), std::domain_error);
}

TEST_CASE("clopper_pearson textbook value and edge counts", "[stats]") {
  const auto ci = clopper_pearson(5, 10, 0.95);
  CHECK(ci.lo == Approx(0.1871).margin(5e-4));
  CHECK(ci.hi == Approx(0.8129).margin(5e-4));

  const auto none = clopper_pearson(0, 100, 0.997);
  CHECK(none.lo == 0.0);
  CHECK(none.hi > 0.0);
  const auto all = clopper_pearson(100, 100, 0.997);
  CHECK(all.hi == 1.0);
  CHECK(all.lo < 1.0);
}

TEST_CASE("clopper_pearson contains the point estimate and nests by confidence", "[stats]") {
  for (std::uint64_t count : {0ull, 1ull, 17ull, 500ull, 1000ull}) {
    const double p = static_cast<double>(count) / 1000.0;
    const auto narrow = clopper_pearson(count, 1000, 0.9);
    const auto wide = clopper_pearson(count, 1000, 0.997);
    CHECK(narrow.lo <= p);
    CHECK(p <= narrow.hi);
    CHECK(wide.lo <= narrow.lo);
    CHECK(narrow.hi <= wide.hi);
  }
  CHECK_THROWS_AS(clopper_pearson(2, 0, 0.95), std::domain_error);
  CHECK_THROWS_AS(clopper_pearson(3, 2, 0.95), std::domain_error);
}

TEST_CASE("binomial standard error", "[stats]") {
  CHECK(binomial_std_error(250, 1000) == Approx(std::sqrt(0.25 * 0.75 / 1000.0)).margin(1e-15));
  CHECK(binomial_std_error(0, 1000) == 0.0);
}
