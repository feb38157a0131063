#include <catch2/catch.hpp>

#include <string>

#include "frameless/model.hpp"

using namespace frameless;

TEST_CASE("slot_degree_pmf hand cases", "[model]") {
  SECTION("n=2, beta=1 is the fair binomial") {
    const auto omega = slot_degree_pmf(2, 1.0);
    REQUIRE(omega.probs.size() == 3);
    CHECK(omega.probs[0] == Approx(0.25).margin(1e-15));
    CHECK(omega.probs[1] == Approx(0.5).margin(1e-15));
    CHECK(omega.probs[2] == Approx(0.25).margin(1e-15));
  }
  SECTION("beta=0 puts all mass on empty slots") {
    const auto omega = slot_degree_pmf(5, 0.0);
    CHECK(omega.probs[0] == 1.0);
    for (int j = 1; j <= 5; ++j) CHECK(omega.probs[j] == 0.0);
  }
  SECTION("beta=n forces every user into the slot") {
    const auto omega = slot_degree_pmf(5, 5.0);
    CHECK(omega.probs[5] == 1.0);
    CHECK(omega.sum() == Approx(1.0));
  }
}

TEST_CASE("slot_degree_pmf at n=50, beta=2.68", "[model]") {
  // Frozen from an independent long-double product evaluation of the
  // binomial terms.
  const auto omega = slot_degree_pmf(50, 2.68);
  CHECK(omega.probs[0] == Approx(6.3640939308801824810e-02).margin(1e-15));
  CHECK(omega.probs[1] == Approx(1.8021736828781581841e-01).margin(1e-15));
  CHECK(omega.probs[2] == Approx(2.5006492818634798466e-01).margin(1e-15));
}

TEST_CASE("slot_degree_pmf normalization and mean over a wide grid", "[model]") {
  for (int n : {1, 7, 50, 200}) {
    for (double beta = 0.0; beta <= n; beta += 0.5) {
      const auto omega = slot_degree_pmf(n, beta);
      CHECK(omega.sum() == Approx(1.0).margin(1e-12));
      CHECK(omega.mean() == Approx(beta).margin(1e-10));
    }
  }
}

TEST_CASE("slot_degree_pmf domain errors", "[model]") {
  CHECK_THROWS_AS(slot_degree_pmf(5, -0.1), std::domain_error);
  CHECK_THROWS_AS(slot_degree_pmf(5, 5.1), std::domain_error);
  CHECK_THROWS_AS(slot_degree_pmf(0, 0.0), std::domain_error);
}

TEST_CASE("SystemConfig validation names the offending field", "[model]") {
  SystemConfig ok{4, {{3, 1.5}, {0, 2.0}}};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.total_slots() == 3);

  SystemConfig bad_users{0, {{3, 1.5}}};
  CHECK_THROWS_WITH(bad_users.validate(), Catch::Contains("users"));

  SystemConfig no_classes{4, {}};
  CHECK_THROWS_WITH(no_classes.validate(), Catch::Contains("classes"));

  SystemConfig bad_count{4, {{-1, 1.0}}};
  CHECK_THROWS_WITH(bad_count.validate(), Catch::Contains("classes[0].slot_count"));

  SystemConfig beta_high{4, {{2, 1.0}, {2, 4.5}}};
  CHECK_THROWS_WITH(beta_high.validate(), Catch::Contains("classes[1].mean_degree"));

  SystemConfig beta_neg{4, {{2, -0.5}}};
  CHECK_THROWS_WITH(beta_neg.validate(), Catch::Contains("mean_degree"));
}
