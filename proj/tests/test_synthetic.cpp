#include "structrates/error.hpp"
#include "structrates/synthetic.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

using namespace structrates;

TEST_CASE("regression functions") {
  const auto power = SyntheticProblem::power_margin(0.5);
  CHECK(power.regression(0.5) == doctest::Approx(0.25));
  CHECK(power.regression(-0.5) == doctest::Approx(-0.25));
  CHECK(power.regression(0.0) == 0.0);
  CHECK_THROWS_AS(power.regression(1.5), ContractViolation);

  const auto stairs = SyntheticProblem::staircase();
  CHECK(stairs.regression(0.0) == 1.0);
  CHECK(stairs.regression(0.004) == 1.0);
  CHECK(stairs.regression(-0.004) == 1.0);
  CHECK(stairs.regression(0.01) == -1.0);
  CHECK(stairs.regression(0.5 + 0.003) == 1.0);
  CHECK(stairs.regression(-0.71) == -1.0);

  const auto separated = SyntheticProblem::separated_support(2.0);
  CHECK(separated.regression(0.75) == doctest::Approx(0.0625));
  CHECK(separated.regression(-0.6) == doctest::Approx(-0.16));
  CHECK_THROWS_AS(separated.regression(0.0), ContractViolation);

  CHECK_THROWS_AS(SyntheticProblem::three_class_simplex().regression(0.5), ContractViolation);
  CHECK_THROWS_AS(SyntheticProblem::power_margin(0.0), ContractViolation);
}

TEST_CASE("conditional laws are probability vectors") {
  for (const auto& problem : {SyntheticProblem::power_margin(1.0), SyntheticProblem::separated_support(1.0),
                              SyntheticProblem::three_class_simplex(), SyntheticProblem::staircase()}) {
    for (const double x : problem.regular_grid(37)) {
      const auto law = problem.conditional(x);
      CHECK(law.weights.minCoeff() >= 0.0);
      CHECK(law.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("three-class path visits every decision region") {
  const auto problem = SyntheticProblem::three_class_simplex();
  const auto center = problem.conditional(0.5);
  CHECK(center.weights[0] == doctest::Approx(1.0 / 3.0));
  CHECK(center.weights[1] == doctest::Approx(1.0 / 3.0));
  CHECK(problem.bayes_predict(0.5) == 0);
  std::set<std::size_t> labels;
  std::size_t switches = 0;
  std::size_t previous = problem.bayes_predict(0.0);
  for (const double x : problem.regular_grid(1000)) {
    const std::size_t z = problem.bayes_predict(x);
    labels.insert(z);
    switches += z != previous;
    previous = z;
  }
  CHECK(labels.size() == 3);
  CHECK(switches == 2);
}

TEST_CASE("bayes_predict") {
  CHECK(SyntheticProblem::power_margin(1.0).bayes_predict(0.3) == 1);
  CHECK(SyntheticProblem::power_margin(1.0).bayes_predict(-0.3) == 0);
  CHECK(SyntheticProblem::separated_support(1.0).bayes_predict(-0.7) == 0);
  CHECK_THROWS_AS(SyntheticProblem::separated_support(1.0).bayes_predict(0.2), ContractViolation);
  // Binary f* agrees with decoding the exact conditional law under 0-1 loss.
  const auto problem = SyntheticProblem::power_margin(0.3);
  for (const double x : problem.regular_grid(101)) {
    CHECK(problem.bayes_predict(x) == decode(problem.loss(), problem.conditional(x)));
  }
}

TEST_CASE("regular grids") {
  const auto grid = SyntheticProblem::power_margin(1.0).regular_grid(100);
  CHECK(grid.front() == doctest::Approx(-0.99));
  CHECK(grid.back() == doctest::Approx(0.99));
  const auto split = SyntheticProblem::separated_support(1.0).regular_grid(100);
  std::size_t negative = 0;
  for (const double x : split) {
    CHECK(SyntheticProblem::separated_support(1.0).in_support(x));
    negative += x < 0.0;
  }
  CHECK(negative == 50);
  CHECK(split[0] == doctest::Approx(-0.995));
  CHECK(split[50] == doctest::Approx(0.505));
}

TEST_CASE("sample") {
  SUBCASE("power margin label balance") {
    const auto problem = SyntheticProblem::power_margin(1.0);
    const std::size_t n = 10000;
    const auto data = problem.sample(n, 12345);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = data.labels()[i] == 1 ? 1.0 : -1.0;
      sum += y * (data.point(i)[0] > 0.0 ? 1.0 : -1.0);
    }
    CHECK(std::abs(sum / static_cast<double>(n) - 0.5) <= 3.0 / std::sqrt(static_cast<double>(n)));
  }

  SUBCASE("single pair, determinism, support") {
    for (const auto& problem : {SyntheticProblem::staircase(), SyntheticProblem::separated_support(1.0),
                                SyntheticProblem::three_class_simplex()}) {
      const auto one = problem.sample(1, 9);
      CHECK(one.size() == 1);
      CHECK(problem.in_support(one.point(0)[0]));
      CHECK(one.labels()[0] < problem.loss().num_observations());
      const auto a = problem.sample(500, 77);
      const auto b = problem.sample(500, 77);
      const auto c = problem.sample(500, 78);
      CHECK(a.inputs() == b.inputs());
      CHECK(a.labels() == b.labels());
      CHECK(a.inputs() != c.inputs());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(problem.in_support(a.point(i)[0]));
    }
  }

  SUBCASE("staircase labels are deterministic given x") {
    const auto problem = SyntheticProblem::staircase();
    const auto data = problem.sample(2000, 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(data.labels()[i] == problem.bayes_predict(data.point(i)[0]));
    }
  }

  SUBCASE("three-class label frequencies follow the conditional law") {
    const auto problem = SyntheticProblem::three_class_simplex();
    const std::size_t n = 20000;
    const auto data = problem.sample(n, 5);
    // E over X ~ U[0,1] of the law: mass_a integrates to 1/6, b and c split the rest.
    std::vector<double> counts(3, 0.0);
    for (const auto y : data.labels()) counts[y] += 1.0;
    CHECK(std::abs(counts[0] / n - 1.0 / 6.0) < 4.0 * std::sqrt(0.25 / n));
    CHECK(std::abs(counts[1] / n - 5.0 / 12.0) < 4.0 * std::sqrt(0.25 / n));
  }
}

TEST_CASE("excess_risk") {
  const auto problem = SyntheticProblem::power_margin(1.0);
  const auto grid = problem.regular_grid(100);

  SUBCASE("Bayes predictions cost nothing") {
    for (const auto& p : {problem, SyntheticProblem::three_class_simplex(), SyntheticProblem::separated_support(1.0)}) {
      const auto g = p.regular_grid(100);
      std::vector<std::size_t> best;
      for (const double x : g) best.push_back(p.bayes_predict(x));
      CHECK(excess_risk(best, p, g) == 0.0);
    }
  }

  SUBCASE("constant +1 on the identity margin problem") {
    const std::vector<std::size_t> plus(100, 1);
    double oracle = 0.0;
    for (const double x : grid) {
      if (x < 0.0) oracle += -x;
    }
    oracle /= 100.0;
    CHECK(oracle == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(excess_risk(plus, problem, grid) == doctest::Approx(oracle).epsilon(1e-14));
  }

  SUBCASE("binary formula matches per-point loss differences") {
    const auto hard = SyntheticProblem::power_margin(0.4);
    const auto g = hard.regular_grid(64);
    std::vector<std::size_t> preds;
    for (std::size_t i = 0; i < g.size(); ++i) preds.push_back((i * 7 + 3) % 2);
    double brute = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p_plus = (1.0 + hard.regression(g[i])) / 2.0;
      auto risk = [&](std::size_t z) { return z == 1 ? 1.0 - p_plus : p_plus; };
      brute += risk(preds[i]) - std::min(risk(0), risk(1));
    }
    brute /= static_cast<double>(g.size());
    CHECK(excess_risk(preds, hard, g) == doctest::Approx(brute).epsilon(1e-12));
  }

  SUBCASE("three-class uses the loss gap") {
    const auto p = SyntheticProblem::three_class_simplex();
    const std::vector<double> g{0.5};
    const std::vector<std::size_t> b{1};
    CHECK(excess_risk(b, p, g) == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("non-negative for arbitrary predictions") {
    const auto p = SyntheticProblem::three_class_simplex();
    const auto g = p.regular_grid(50);
    for (std::size_t shift = 0; shift < 3; ++shift) {
      std::vector<std::size_t> preds;
      for (std::size_t i = 0; i < g.size(); ++i) preds.push_back((i + shift) % 3);
      CHECK(excess_risk(preds, p, g) >= 0.0);
    }
  }

  SUBCASE("length mismatch") {
    const std::vector<std::size_t> short_preds(10, 0);
    CHECK_THROWS_AS(excess_risk(short_preds, problem, grid), ContractViolation);
  }
}

TEST_CASE("margins and exponents") {
  CHECK(SyntheticProblem::power_margin(0.5).frontier_distance(-0.25) == doctest::Approx(0.0625));
  CHECK(SyntheticProblem::staircase().frontier_distance(0.37) == 1.0);
  CHECK(SyntheticProblem::three_class_simplex().frontier_distance(0.5) == doctest::Approx(1.0 / (3.0 * std::sqrt(3.0))));
  CHECK(*SyntheticProblem::power_margin(0.1).margin_exponent() == 0.1);
  CHECK(*SyntheticProblem::separated_support(2.0).margin_exponent() == 0.5);
  CHECK_FALSE(SyntheticProblem::staircase().margin_exponent().has_value());
}

TEST_CASE("problem json") {
  const auto p = SyntheticProblem::from_json({{"kind", "power_margin"}, {"alpha", 0.1}});
  CHECK(p.kind() == ProblemKind::power_margin);
  CHECK(p.parameter() == 0.1);
  CHECK(SyntheticProblem::from_json(p.to_json()).parameter() == 0.1);
  CHECK(SyntheticProblem::from_json({{"kind", "staircase"}}).parameter() == 1.0 / 50.0);
  CHECK_THROWS_AS(SyntheticProblem::from_json({{"kind", "power_margin"}}), ContractViolation);
  CHECK_THROWS_AS(SyntheticProblem::from_json({{"kind", "power_margin"}, {"alpha", 1}, {"alhpa", 2}}), ContractViolation);
  CHECK_THROWS_AS(SyntheticProblem::from_json({{"kind", "spiral"}}), ContractViolation);
}
