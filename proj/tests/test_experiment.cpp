#include "structrates/error.hpp"
#include "structrates/experiment.hpp"
#include "structrates/random.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

using namespace structrates;

TEST_CASE("log_spaced_sizes") {
  CHECK(log_spaced_sizes(100, 10000, 8) == std::vector<std::size_t>{100, 193, 373, 720, 1389, 2683, 5179, 10000});
  CHECK(log_spaced_sizes(1, 3, 10) == std::vector<std::size_t>{1, 2, 3});
  const auto grid = default_n_grid();
  CHECK(grid.front() == 10);
  CHECK(grid.back() == 100000);
  CHECK(grid.size() == 13);
}

TEST_CASE("fit_slope") {
  std::vector<std::size_t> ns;
  std::vector<double> risks;
  for (std::size_t n = 100; n <= 100000; n *= 2) {
    ns.push_back(n);
    risks.push_back(3.0 * std::pow(static_cast<double>(n), -2.0 / 3.0));
  }

  SUBCASE("exact power law") {
    const auto fit = fit_slope(ns, risks, SlopeWindow{10.0, std::nullopt});
    CHECK(fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));
    CHECK(fit.constant == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.points_used == ns.size());
  }

  SUBCASE("all zero") {
    const std::vector<double> zeros(ns.size(), 0.0);
    CHECK_THROWS_AS(fit_slope(ns, zeros), ExponentialRegime);
  }

  SUBCASE("two regimes, tail window") {
    std::vector<double> two = risks;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      two[i] = ns[i] < 5000 ? 0.05 : 0.05 * std::pow(static_cast<double>(ns[i]) / 5000.0, -0.5);
    }
    const auto tail = fit_slope(ns, two);
    CHECK(tail.n_lo >= 5000);
    CHECK(tail.slope == doctest::Approx(-0.5).epsilon(1e-9));
    const auto whole = fit_slope(ns, two, SlopeWindow{10.0, std::nullopt});
    CHECK(whole.slope > -0.4);
  }

  SUBCASE("zero-risk points are excluded and reported") {
    std::vector<double> holes = risks;
    holes[holes.size() - 2] = 0.0;
    const auto fit = fit_slope(ns, holes, SlopeWindow{2.0, std::nullopt});
    CHECK(fit.zero_risk_excluded == std::vector<std::size_t>{ns[ns.size() - 2]});
    CHECK(fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));
  }

  SUBCASE("explicit range") {
    const auto fit = fit_slope(ns, risks, SlopeWindow{1.0, std::make_pair<std::size_t, std::size_t>(100, 1000)});
    CHECK(fit.n_hi <= 1000);
    CHECK(fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));
  }
}

TEST_CASE("theoretical slopes") {
  CHECK(*theoretical_slope(SyntheticProblem::power_margin(1.0), KnnSchedule{1.0, 1.0}) == doctest::Approx(-2.0 / 3.0));
  CHECK(*theoretical_slope(SyntheticProblem::power_margin(0.1), KnnSchedule{1.0, 1.0}) ==
        doctest::Approx(-1.1 / 3.0));
  KrrSchedule krr;
  krr.q = 1.0;
  krr.p = 0.5;
  krr.sigma = 1.0;
  CHECK(*theoretical_slope(SyntheticProblem::separated_support(1.0), krr) == doctest::Approx(-1.0 / 3.0));
  CHECK_FALSE(theoretical_slope(SyntheticProblem::staircase(), KnnSchedule{}).has_value());
  CHECK_FALSE(theoretical_slope(SyntheticProblem::power_margin(1.0), FixedKnn{3}).has_value());
}

TEST_CASE("trial seeds are independent of execution order") {
  CHECK(trial_seed(1, 2, 3) == trial_seed(1, 2, 3));
  CHECK(trial_seed(1, 2, 3) != trial_seed(1, 3, 2));
  CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
}

TEST_CASE("rate_experiment") {
  RateExperimentConfig config;
  config.problem = SyntheticProblem::power_margin(1.0);
  config.estimator = KnnSchedule{1.0, 1.0};
  config.n_grid = {20, 60, 200, 600};
  config.trials = 6;
  config.eval_grid_size = 40;
  config.master_seed = 314;

  SUBCASE("bit-identical across runs and worker counts") {
    const auto a = rate_experiment(config, 1);
    const auto b = rate_experiment(config, 4);
    std::ostringstream ca, cb, sa, sb;
    write_trials_csv(ca, a);
    write_trials_csv(cb, b);
    write_summary_csv(sa, a);
    write_summary_csv(sb, b);
    CHECK(ca.str() == cb.str());
    CHECK(sa.str() == sb.str());
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  }

  SUBCASE("report contents") {
    const auto report = rate_experiment(config, 2);
    REQUIRE(report.per_n.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& p = report.per_n[i];
      CHECK(p.mean >= 0.0);
      CHECK(p.hyperparameter == static_cast<double>(knn_schedule(p.n, 1.0, 1.0)));
      double mean = 0.0;
      for (const double r : report.trial_risks[i]) mean += r;
      CHECK(p.mean == doctest::Approx(mean / 6.0));
      // Each trial's risk is recomputable on its own.
      CHECK(report.trial_risks[i][3] == run_trial(config, p.n, trial_seed(314, i, 3)).excess_risk);
    }
    CHECK(*report.theoretical_slope == doctest::Approx(-2.0 / 3.0));
    const auto j = report_to_json(report);
    CHECK(j.at("config").at("n_grid").size() == 4);
    CHECK(j.at("per_n").at(0).contains("zero_count"));
    std::ostringstream trials;
    write_trials_csv(trials, report);
    CHECK(trials.str().rfind("n,trial,excess_risk\n20,0,", 0) == 0);
  }

  SUBCASE("kernel ridge and three classes") {
    config.problem = SyntheticProblem::three_class_simplex();
    KrrSchedule krr;
    krr.kernel = KernelSpec(KernelFamily::gaussian, 0.1);
    config.estimator = krr;
    const auto report = rate_experiment(config, 1);
    for (const auto& p : report.per_n) {
      CHECK(p.mean >= 0.0);
      CHECK(p.hyperparameter == krr_schedule(p.n, 1.0, 0.5, 1.0));
    }
  }

  SUBCASE("exponential regime is reported, not fitted") {
    config.problem = SyntheticProblem::staircase(0.5);
    config.estimator = FixedKnn{1};
    config.n_grid = {5000, 10000, 20000};
    config.eval_grid_size = 20;
    const auto report = rate_experiment(config, 1);
    CHECK_FALSE(report.fit.has_value());
    CHECK(report.regime_note.find("exponential regime") != std::string::npos);
    CHECK(report.per_n.back().zero_count == config.trials);
  }

  SUBCASE("invalid configurations are rejected before running") {
    config.n_grid = {50, 20};
    CHECK_THROWS_AS(rate_experiment(config), ContractViolation);
    config.n_grid = {5, 50};
    config.estimator = FixedKnn{10};
    CHECK_THROWS_AS(rate_experiment(config), ContractViolation);
    CHECK_THROWS_AS(run_trial(config, 5, 1), ContractViolation);
  }
}

TEST_CASE("rate config json") {
  const nlohmann::json j = {
      {"problem", {{"kind", "power_margin"}, {"alpha", 1.0}}},
      {"estimator", {{"type", "knn"}, {"k0", 1.0}, {"beta", 1.0}}},
      {"n_grid", {{"min", 100}, {"max", 10000}, {"points", 8}}},
      {"trials", 20},
      {"master_seed", 18446744073709551615ULL},
  };
  const auto config = rate_config_from_json(j);
  CHECK(config.n_grid.size() == 8);
  CHECK(config.trials == 20);
  CHECK(config.eval_grid_size == 100);
  CHECK(config.master_seed == 18446744073709551615ULL);
  const auto echoed = rate_config_to_json(config);
  CHECK(rate_config_to_json(rate_config_from_json(echoed)) == echoed);

  auto typo = j;
  typo["trails"] = 3;
  CHECK_THROWS_AS(rate_config_from_json(typo), ContractViolation);
  auto bad_estimator = j;
  bad_estimator["estimator"]["bandwidth"] = 0.1;
  CHECK_THROWS_AS(rate_config_from_json(bad_estimator), ContractViolation);
  auto krr = j;
  krr["estimator"] = {{"type", "krr"}, {"bandwidth", 0.1}, {"q", 0.5}, {"sigma", 1.0}, {"lambda0", 2.0}};
  const auto parsed = rate_config_from_json(krr);
  REQUIRE(std::holds_alternative<KrrSchedule>(parsed.estimator));
  CHECK(std::get<KrrSchedule>(parsed.estimator).lambda0 == 2.0);
  auto negative = j;
  negative["trials"] = -1;
  CHECK_THROWS_AS(rate_config_from_json(negative), ContractViolation);
}
