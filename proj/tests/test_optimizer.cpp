#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "frameless/optimizer.hpp"
#include "frameless/rng.hpp"

using namespace frameless;

TEST_CASE("codec fixes the slot count for a single class", "[optimizer]") {
  ParamCodec codec(50, 100, 1);
  CHECK(codec.dim() == 1);
  const auto config = codec.decode({std::log(2.9)});
  CHECK(config.classes[0].slot_count == 100);
  CHECK(config.classes[0].mean_degree == Approx(2.9).margin(1e-12));
}

TEST_CASE("codec round-trips integer compositions", "[optimizer]") {
  SECTION("the (88, 12) composition") {
    ParamCodec codec(50, 100, 2);
    SystemConfig config{50, {{88, 2.4}, {12, 12.94}}};
    const auto decoded = codec.decode(codec.encode(config));
    CHECK(decoded.classes[0].slot_count == 88);
    CHECK(decoded.classes[1].slot_count == 12);
    CHECK(decoded.classes[0].mean_degree == Approx(2.4).epsilon(1e-12));
    CHECK(decoded.classes[1].mean_degree == Approx(12.94).epsilon(1e-12));
  }
  SECTION("random compositions of 100 into 3 parts, including empty parts") {
    ParamCodec codec(50, 100, 3);
    SplitMix64 rng(8675309);
    auto check_roundtrip = [&](int a, int b, int c) {
      SystemConfig config{50, {{a, 1.5}, {b, 2.5}, {c, 9.0}}};
      const auto decoded = codec.decode(codec.encode(config));
      CHECK(decoded.classes[0].slot_count == a);
      CHECK(decoded.classes[1].slot_count == b);
      CHECK(decoded.classes[2].slot_count == c);
    };
    check_roundtrip(100, 0, 0);
    check_roundtrip(0, 100, 0);
    check_roundtrip(0, 0, 100);
    check_roundtrip(1, 1, 98);
    for (int i = 0; i < 300; ++i) {
      const int a = static_cast<int>(rng.next_below(101));
      const int b = static_cast<int>(rng.next_below(101 - a));
      check_roundtrip(a, b, 100 - a - b);
    }
  }
}

TEST_CASE("every decoded candidate is feasible", "[optimizer]") {
  ParamCodec codec(50, 100, 3);
  SplitMix64 rng(424242);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(codec.dim());
    for (double& v : x) v = (rng.next_double() - 0.5) * 100.0;  // wild range
    const auto config = codec.decode(x);
    CHECK(config.total_slots() == 100);
    for (const auto& cls : config.classes) {
      CHECK(cls.slot_count >= 0);
      CHECK(cls.mean_degree >= 0.0);
      CHECK(cls.mean_degree <= 50.0);
    }
    CHECK_NOTHROW(config.validate());
  }
}

TEST_CASE("nelder_mead minimizes a quadratic", "[optimizer]") {
  const std::vector<double> target{1.25, -2.0, 0.5};
  auto objective = [&](const std::vector<double>& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) v += (x[i] - target[i]) * (x[i] - target[i]);
    return v;
  };
  NelderMeadOptions options;
  options.max_evals = 2000;
  options.tol_x = 1e-6;
  options.tol_f = 1e-12;
  const auto result = nelder_mead(objective, {0.0, 0.0, 0.0}, options);
  CHECK(result.converged);
  for (std::size_t i = 0; i < target.size(); ++i)
    CHECK(result.x[i] == Approx(target[i]).margin(1e-3));
}

TEST_CASE("nelder_mead flags an exhausted budget", "[optimizer]") {
  auto objective = [](const std::vector<double>& x) { return x[0] * x[0]; };
  NelderMeadOptions options;
  options.max_evals = 5;
  const auto result = nelder_mead(objective, {10.0}, options);
  CHECK_FALSE(result.converged);
  CHECK(result.evals <= 5);
}

TEST_CASE("objective evaluations are memoized", "[optimizer]") {
  OptimizationProblem problem;
  problem.users = 6;
  problem.total_slots = 8;
  problem.class_count = 1;
  problem.target = 5;
  ReliabilityObjective objective(problem, 1e-13);
  const std::vector<double> x{std::log(2.0)};
  const double a = objective(x);
  const double b = objective(x);
  CHECK(a == b);
  CHECK(objective.analysis_evals() == 1);
}

TEST_CASE("a search seeded at a known optimum keeps its value", "[optimizer][slow]") {
  OptimizationProblem problem;
  problem.users = 50;
  problem.total_slots = 100;
  problem.class_count = 1;
  problem.target = 48;
  ReliabilityObjective objective(problem, problem.search_prune);
  const auto start = objective.codec().encode(SystemConfig{50, {{100, 2.9}}});
  NelderMeadOptions options;
  options.max_evals = 120;
  const auto result = nelder_mead(objective, start, options);
  CHECK(-result.value >= 0.9985 - 1e-4);
}

TEST_CASE("multistart matches a fine grid on a one-dimensional problem", "[optimizer][slow]") {
  OptimizationProblem problem;
  problem.users = 6;
  problem.total_slots = 8;
  problem.class_count = 1;
  problem.target = 5;
  problem.starts = 6;
  problem.seed = 3;
  const auto result = multistart_optimize(problem);

  double grid_best = 0.0;
  for (double beta = 0.05; beta <= 4.0 + 1e-9; beta += 0.01) {
    SystemConfig config{6, {{8, beta}}};
    const auto profile = unresolved_pmf(config, AnalysisOptions{1e-13});
    grid_best = std::max(grid_best, profile.reliability[5]);
  }
  CHECK(result.best_reliability == Approx(grid_best).margin(1e-4));
  CHECK(result.best_config.total_slots() == 8);
}

TEST_CASE("multistart is reproducible bit for bit", "[optimizer][slow]") {
  OptimizationProblem problem;
  problem.users = 6;
  problem.total_slots = 8;
  problem.class_count = 2;
  problem.target = 5;
  problem.starts = 4;
  problem.seed = 17;
  problem.max_evals_per_start = 150;
  const auto a = multistart_optimize(problem);
  const auto b = multistart_optimize(problem);
  CHECK(a.best_reliability == b.best_reliability);
  CHECK(a.best_start == b.best_start);
  CHECK(a.total_evals == b.total_evals);
  REQUIRE(a.starts.size() == b.starts.size());
  for (std::size_t s = 0; s < a.starts.size(); ++s) {
    CHECK(a.starts[s].best_reliability == b.starts[s].best_reliability);
    CHECK(a.starts[s].evals == b.starts[s].evals);
  }
  // Parallel starts reproduce the sequential result.
  OptimizationProblem par = problem;
  par.jobs = 2;
  const auto c = multistart_optimize(par);
  CHECK(c.best_reliability == a.best_reliability);
  CHECK(c.best_start == a.best_start);
}

TEST_CASE("an extra class can only help", "[optimizer][slow]") {
  OptimizationProblem one;
  one.users = 6;
  one.total_slots = 8;
  one.class_count = 1;
  one.target = 6;
  one.starts = 6;
  one.seed = 5;
  OptimizationProblem two = one;
  two.class_count = 2;
  two.starts = 10;
  const auto best_one = multistart_optimize(one);
  const auto best_two = multistart_optimize(two);
  CHECK(best_two.best_reliability >= best_one.best_reliability - 1e-6);
}

TEST_CASE("problem validation", "[optimizer]") {
  OptimizationProblem problem;
  problem.users = 10;
  problem.total_slots = 20;
  problem.class_count = 1;
  problem.target = 11;
  CHECK_THROWS_AS(problem.validate(), std::domain_error);
  problem.target = 0;
  CHECK_THROWS_AS(problem.validate(), std::domain_error);
  problem.target = 10;
  problem.starts = 0;
  CHECK_THROWS_AS(problem.validate(), std::domain_error);
}
