#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "frameless/combinatorics.hpp"
#include "oracles.hpp"

using namespace frameless;

TEST_CASE("log_choose on small exact values", "[combinatorics]") {
  CHECK(log_choose(5, 2) == Approx(std::log(10.0)).margin(1e-12));
  CHECK(log_choose(0, 0) == 0.0);
  for (int n : {1, 7, 50, 200}) {
    CHECK(log_choose(n, 0) == 0.0);
    CHECK(log_choose(n, n) == 0.0);
  }
}

TEST_CASE("log_choose matches exact big-integer coefficients", "[combinatorics]") {
  // Pascal's triangle in exact integer arithmetic as the oracle.
  CHECK(oracle::choose(50, 25) == 126410606437752ull);
  for (int n : {10, 31, 50}) {
    for (int k = 0; k <= n; ++k) {
      const double expected = std::log(static_cast<double>(oracle::choose(n, k)));
      CHECK(log_choose(n, k) == Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("log_choose out-of-range convention", "[combinatorics]") {
  CHECK(log_choose(5, 6) == -std::numeric_limits<double>::infinity());
  CHECK(log_choose(5, -1) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(log_choose(-1, 0), std::domain_error);
}

TEST_CASE("binomial_pmf endpoints and normalization", "[combinatorics]") {
  const auto zero = binomial_pmf(6, 0.0);
  CHECK(zero[0] == 1.0);
  const auto one = binomial_pmf(6, 1.0);
  CHECK(one[6] == 1.0);
  for (double p : {0.03, 0.4, 0.5, 0.82, 0.99}) {
    const auto pmf = binomial_pmf(37, p);
    double sum = 0.0;
    for (double v : pmf) sum += v;
    CHECK(sum == Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(binomial_pmf(3, 1.5), std::domain_error);
  CHECK_THROWS_AS(binomial_pmf(-1, 0.5), std::domain_error);
}

TEST_CASE("binomial_pmf against long-double direct products", "[combinatorics]") {
  for (double p : {0.07, 0.37, 0.91}) {
    const auto pmf = binomial_pmf(10, p);
    for (int j = 0; j <= 10; ++j) {
      const double expected = static_cast<double>(oracle::binomial_term(10, j, p));
      CHECK(pmf[j] == Approx(expected).margin(1e-14));
    }
  }
}

TEST_CASE("reduced_degree_pmf hand cases", "[combinatorics]") {
  SECTION("all users unresolved keeps the full degree") {
    const auto pmf = reduced_degree_pmf(4, 4, 2);
    REQUIRE(pmf.size() == 3);
    CHECK(pmf[2] == Approx(1.0).margin(1e-14));
    CHECK(pmf[0] == 0.0);
  }
  SECTION("no users unresolved empties every slot") {
    const auto pmf = reduced_degree_pmf(4, 0, 2);
    REQUIRE(pmf.size() == 1);
    CHECK(pmf[0] == Approx(1.0).margin(1e-14));
  }
  SECTION("half unresolved gives the 1/6, 2/3, 1/6 split") {
    const auto pmf = reduced_degree_pmf(4, 2, 2);
    REQUIRE(pmf.size() == 3);
    CHECK(pmf[0] == Approx(1.0 / 6.0).margin(1e-14));
    CHECK(pmf[1] == Approx(2.0 / 3.0).margin(1e-14));
    CHECK(pmf[2] == Approx(1.0 / 6.0).margin(1e-14));
  }
}

TEST_CASE("reduced_degree_pmf matches exact rational arithmetic for n <= 8", "[combinatorics]") {
  for (int n = 1; n <= 8; ++n)
    for (int u = 0; u <= n; ++u)
      for (int d = 0; d <= n; ++d) {
        const auto pmf = reduced_degree_pmf(n, u, d);
        long double sum = 0.0L;
        for (std::size_t j = 0; j < pmf.size(); ++j) {
          const long double exact =
              static_cast<long double>(oracle::choose(u, static_cast<int>(j))) *
              static_cast<long double>(oracle::choose(n - u, d - static_cast<int>(j))) /
              static_cast<long double>(oracle::choose(n, d));
          CHECK(pmf[j] == Approx(static_cast<double>(exact)).margin(1e-12));
          sum += pmf[j];
        }
        CHECK(static_cast<double>(sum) == Approx(1.0).margin(1e-12));
      }
}

TEST_CASE("reduced_degree_pmf rejects out-of-range arguments", "[combinatorics]") {
  CHECK_THROWS_AS(reduced_degree_pmf(4, 5, 2), std::domain_error);
  CHECK_THROWS_AS(reduced_degree_pmf(4, 2, 5), std::domain_error);
  CHECK_THROWS_AS(reduced_degree_pmf(0, 0, 0), std::domain_error);
}
