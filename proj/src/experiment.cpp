#include "structrates/experiment.hpp"

#include "csv.hpp"
#include "line_fit.hpp"
#include "structrates/error.hpp"
#include "structrates/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace structrates {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(known, "unknown key '" + key + "' in " + where);
  }
}

double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), std::string("\"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

std::size_t count_or(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
          std::string("\"") + key + "\" must be a non-negative integer");
  return j.at(key).get<std::size_t>();
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  const auto family = j.contains("kernel") ? j.at("kernel").get<std::string>() : std::string("gaussian");
  require(j.contains("bandwidth"), "kernel estimators need \"bandwidth\"");
  return KernelSpec(kernel_family_from_string(family), number_or(j, "bandwidth", 1.0));
}

void validate(const RateExperimentConfig& config) {
  require(!config.n_grid.empty(), "n_grid must not be empty");
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    require(config.n_grid[i] >= 1, "n_grid entries must be positive");
    require(i == 0 || config.n_grid[i] > config.n_grid[i - 1], "n_grid must be strictly increasing");
  }
  require(config.trials >= 1, "trials must be at least 1");
  require(config.eval_grid_size >= 1, "eval_grid_size must be at least 1");
  require(config.fit_decades > 0.0, "fit_decades must be positive");
  require(config.slope_tolerance >= 0.0, "slope_tolerance must be non-negative");
  std::visit(overloaded{
                 [](const KnnSchedule& s) { require(s.k0 > 0.0 && s.beta > 0.0, "knn schedule needs k0 > 0, beta > 0"); },
                 [](const KrrSchedule& s) {
                   require(s.lambda0 > 0.0, "krr schedule needs lambda0 > 0");
                   require(s.q > 0.0 && s.q <= 1.0, "krr schedule needs q in (0, 1]");
                   require(s.sigma > 0.0 && s.sigma <= 1.0, "krr schedule needs sigma in (0, 1]");
                   require(s.p >= 0.0 && s.p <= 0.5, "krr schedule needs p in [0, 1/2]");
                 },
                 [&](const FixedKnn& s) {
                   require(s.k >= 1 && s.k <= config.n_grid.front(), "fixed k must lie in [1, min(n_grid)]");
                 },
                 [](const FixedKrr& s) { require(s.lambda > 0.0, "fixed lambda must be positive"); },
             },
             config.estimator);
}

}  // namespace

std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t points) {
  require(lo >= 1 && hi > lo && points >= 2, "log-spaced sizes need 1 <= lo < hi and at least two points");
  std::vector<std::size_t> sizes;
  const double log_lo = std::log10(static_cast<double>(lo));
  const double step = (std::log10(static_cast<double>(hi)) - log_lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    auto n = static_cast<std::size_t>(std::llround(std::pow(10.0, log_lo + step * static_cast<double>(i))));
    if (i == 0) n = lo;
    if (i + 1 == points) n = hi;
    if (sizes.empty() || n > sizes.back()) sizes.push_back(n);
  }
  return sizes;
}

std::vector<std::size_t> default_n_grid() { return log_spaced_sizes(10, 100000, 13); }

std::optional<double> theoretical_slope(const SyntheticProblem& problem, const EstimatorConfig& estimator) {
  const auto alpha = problem.margin_exponent();
  if (!alpha) return std::nullopt;
  return std::visit(overloaded{
                        [&](const KnnSchedule& s) -> std::optional<double> {
                          return -s.beta * (*alpha + 1.0) / (2.0 * s.beta + 1.0);
                        },
                        [&](const KrrSchedule& s) -> std::optional<double> {
                          return -(s.q - s.p) * (1.0 + *alpha) / (2.0 * s.q + s.sigma);
                        },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    estimator);
}

SlopeFit fit_slope(std::span<const std::size_t> n_values, std::span<const double> risks, const SlopeWindow& window) {
  require(n_values.size() == risks.size() && !n_values.empty(), "n values and risks must be non-empty and paired");
  for (std::size_t i = 1; i < n_values.size(); ++i) require(n_values[i] > n_values[i - 1], "n values must increase");

  std::size_t lo = 0;
  std::size_t hi = 0;
  if (window.range) {
    std::tie(lo, hi) = *window.range;
  } else {
    require(window.decades > 0.0, "slope window must span a positive number of decades");
    hi = n_values.back();
    lo = static_cast<std::size_t>(std::ceil(static_cast<double>(hi) / std::pow(10.0, window.decades) - 1e-9));
  }

  SlopeFit fit;
  std::vector<double> log_n;
  std::vector<double> log_risk;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < lo || n_values[i] > hi) continue;
    require(risks[i] >= 0.0 && std::isfinite(risks[i]), "risks must be finite and non-negative");
    if (risks[i] == 0.0) {
      fit.zero_risk_excluded.push_back(n_values[i]);
      continue;
    }
    if (log_n.empty()) fit.n_lo = n_values[i];
    fit.n_hi = n_values[i];
    log_n.push_back(std::log(static_cast<double>(n_values[i])));
    log_risk.push_back(std::log(risks[i]));
  }
  if (log_n.size() < 3) {
    throw ExponentialRegime("only " + std::to_string(log_n.size()) +
                            " positive-risk points in the slope window; the excess risk has collapsed to zero");
  }
  const auto line = detail::fit_line(log_n, log_risk);
  fit.slope = line.slope;
  fit.constant = std::exp(line.intercept);
  fit.points_used = log_n.size();
  return fit;
}

std::optional<bool> RateReport::slope_within_tolerance() const {
  if (!fit || !theoretical_slope) return std::nullopt;
  return std::abs(fit->slope - *theoretical_slope) <= config.slope_tolerance;
}

double resolve_hyperparameter(const EstimatorConfig& estimator, std::size_t n) {
  return std::visit(overloaded{
                        [&](const KnnSchedule& s) { return static_cast<double>(knn_schedule(n, s.k0, s.beta)); },
                        [&](const KrrSchedule& s) { return krr_schedule(n, s.lambda0, s.q, s.sigma); },
                        [&](const FixedKnn& s) { return static_cast<double>(s.k); },
                        [&](const FixedKrr& s) { return s.lambda; },
                    },
                    estimator);
}

std::vector<std::size_t> predict_labels(const EstimatorConfig& estimator, const SampleSet& data,
                                        const FiniteLoss& loss, const RowMatrix& queries) {
  require(static_cast<std::size_t>(queries.cols()) == data.dimension(),
          "query dimension " + std::to_string(queries.cols()) + " does not match data dimension " +
              std::to_string(data.dimension()));
  const double hyper = resolve_hyperparameter(estimator, data.size());
  const auto count = static_cast<std::size_t>(queries.rows());
  std::vector<std::size_t> predictions(count);
  auto query = [&](std::size_t q) {
    return std::span<const double>(queries.data() + q * data.dimension(), data.dimension());
  };

  auto knn_predict = [&] {
    const auto k = static_cast<std::size_t>(hyper);
    require(k >= 1 && k <= data.size(), "k = " + std::to_string(k) + " must lie in [1, n]");
    for (std::size_t q = 0; q < count; ++q) {
      predictions[q] = decode(loss, predict_surrogate(knn_weights(query(q), data, k), data, loss));
    }
  };
  auto krr_predict = [&](const KernelSpec& kernel) {
    const KrrFactorization fact = krr_fit(data, kernel, hyper);
    const Eigen::MatrixXd weights = krr_weights_batch(queries, fact, data, kernel);
    for (std::size_t q = 0; q < count; ++q) {
      const WeightProfile profile{Eigen::VectorXd(weights.col(static_cast<Eigen::Index>(q)))};
      predictions[q] = decode(loss, predict_surrogate(profile, data, loss));
    }
  };

  std::visit(overloaded{
                 [&](const KnnSchedule&) { knn_predict(); },
                 [&](const KrrSchedule& s) { krr_predict(s.kernel); },
                 [&](const FixedKnn&) { knn_predict(); },
                 [&](const FixedKrr& s) { krr_predict(s.kernel); },
             },
             estimator);
  return predictions;
}

TrialResult run_trial(const RateExperimentConfig& config, std::size_t n, std::uint64_t seed) {
  const SyntheticProblem& problem = config.problem;
  const SampleSet data = problem.sample(n, seed);
  const std::vector<double> grid = problem.regular_grid(config.eval_grid_size);
  const RowMatrix queries = Eigen::Map<const RowMatrix>(grid.data(), static_cast<Eigen::Index>(grid.size()), 1);
  const auto predictions = predict_labels(config.estimator, data, problem.loss(), queries);
  return {excess_risk(predictions, problem, grid), resolve_hyperparameter(config.estimator, n)};
}

RateReport rate_experiment(const RateExperimentConfig& config, std::size_t workers) {
  validate(config);
  const std::size_t sizes = config.n_grid.size();
  const std::size_t tasks = sizes * config.trials;

  std::vector<TrialResult> results(tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_task = tasks;
  std::exception_ptr error;

  auto work = [&] {
    while (!failed.load()) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const std::size_t n_index = task / config.trials;
      const std::size_t trial = task % config.trials;
      try {
        results[task] = run_trial(config, config.n_grid[n_index], trial_seed(config.master_seed, n_index, trial));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (task < error_task) {
          error_task = task;
          error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(workers, 1, tasks);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  RateReport report;
  report.config = config;
  report.trial_risks.assign(sizes, std::vector<double>(config.trials));
  std::vector<double> means;
  for (std::size_t i = 0; i < sizes; ++i) {
    RatePoint point;
    point.n = config.n_grid[i];
    point.hyperparameter = results[i * config.trials].hyperparameter;
    double sum = 0.0;
    for (std::size_t t = 0; t < config.trials; ++t) {
      const double r = results[i * config.trials + t].excess_risk;
      report.trial_risks[i][t] = r;
      sum += r;
      if (r == 0.0) ++point.zero_count;
    }
    point.mean = sum / static_cast<double>(config.trials);
    if (config.trials > 1) {
      double sq = 0.0;
      for (const double r : report.trial_risks[i]) sq += (r - point.mean) * (r - point.mean);
      point.std_error = std::sqrt(sq / static_cast<double>(config.trials - 1) / static_cast<double>(config.trials));
    }
    means.push_back(point.mean);
    report.per_n.push_back(point);
  }

  report.theoretical_slope = theoretical_slope(config.problem, config.estimator);
  std::ostringstream note;
  try {
    report.fit = fit_slope(config.n_grid, means, SlopeWindow{config.fit_decades, std::nullopt});
    const auto early = static_cast<std::size_t>(
        std::count_if(config.n_grid.begin(), config.n_grid.end(), [&](std::size_t n) { return n < report.fit->n_lo; }));
    if (early > 0) note << "excluded " << early << " early-regime sizes below n=" << report.fit->n_lo;
    if (!report.fit->zero_risk_excluded.empty()) {
      if (early > 0) note << "; ";
      note << "excluded " << report.fit->zero_risk_excluded.size() << " zero-risk sizes in the fit window";
    }
  } catch (const ExponentialRegime& e) {
    note << "exponential regime: " << e.what();
  }
  report.regime_note = note.str();
  return report;
}

EstimatorConfig estimator_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("type") && j.at("type").is_string(), "estimator needs a string \"type\"");
  const auto type = j.at("type").get<std::string>();
  if (type == "knn") {
    reject_unknown_keys(j, {"type", "k0", "beta"}, "knn estimator");
    return KnnSchedule{number_or(j, "k0", 1.0), number_or(j, "beta", 1.0)};
  }
  if (type == "krr") {
    reject_unknown_keys(j, {"type", "kernel", "bandwidth", "lambda0", "q", "sigma", "p"}, "krr estimator");
    return KrrSchedule{kernel_from_json(j), number_or(j, "lambda0", 1.0), number_or(j, "q", 0.5),
                       number_or(j, "sigma", 1.0), number_or(j, "p", 0.0)};
  }
  if (type == "fixed_knn") {
    reject_unknown_keys(j, {"type", "k"}, "fixed_knn estimator");
    require(j.contains("k"), "fixed_knn needs \"k\"");
    return FixedKnn{count_or(j, "k", 1)};
  }
  if (type == "fixed_krr") {
    reject_unknown_keys(j, {"type", "kernel", "bandwidth", "lambda"}, "fixed_krr estimator");
    require(j.contains("lambda"), "fixed_krr needs \"lambda\"");
    return FixedKrr{kernel_from_json(j), number_or(j, "lambda", 1.0)};
  }
  throw ContractViolation("unknown estimator type '" + type + "'");
}

nlohmann::json estimator_to_json(const EstimatorConfig& estimator) {
  return std::visit(
      overloaded{
          [](const KnnSchedule& s) -> nlohmann::json { return {{"type", "knn"}, {"k0", s.k0}, {"beta", s.beta}}; },
          [](const KrrSchedule& s) -> nlohmann::json {
            return {{"type", "krr"},  {"kernel", to_string(s.kernel.family)}, {"bandwidth", s.kernel.bandwidth},
                    {"lambda0", s.lambda0}, {"q", s.q}, {"sigma", s.sigma}, {"p", s.p}};
          },
          [](const FixedKnn& s) -> nlohmann::json { return {{"type", "fixed_knn"}, {"k", s.k}}; },
          [](const FixedKrr& s) -> nlohmann::json {
            return {{"type", "fixed_krr"}, {"kernel", to_string(s.kernel.family)},
                    {"bandwidth", s.kernel.bandwidth}, {"lambda", s.lambda}};
          },
      },
      estimator);
}

RateExperimentConfig rate_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"problem", "estimator", "n_grid", "trials", "eval_grid_size", "master_seed", "fit_decades",
                       "slope_tolerance"},
                      "rate-experiment config");
  require(j.contains("problem"), "rate-experiment config needs \"problem\"");
  RateExperimentConfig config;
  config.problem = SyntheticProblem::from_json(j.at("problem"));
  if (j.contains("estimator")) config.estimator = estimator_from_json(j.at("estimator"));
  if (j.contains("n_grid")) {
    const auto& grid = j.at("n_grid");
    if (grid.is_array()) {
      config.n_grid = grid.get<std::vector<std::size_t>>();
    } else {
      reject_unknown_keys(grid, {"min", "max", "points"}, "n_grid");
      require(grid.contains("min") && grid.contains("max") && grid.contains("points"),
              "n_grid object needs \"min\", \"max\" and \"points\"");
      config.n_grid = log_spaced_sizes(count_or(grid, "min", 10), count_or(grid, "max", 100000),
                                       count_or(grid, "points", 13));
    }
  } else {
    config.n_grid = default_n_grid();
  }
  config.trials = count_or(j, "trials", config.trials);
  config.eval_grid_size = count_or(j, "eval_grid_size", config.eval_grid_size);
  if (j.contains("master_seed")) {
    const auto& seed = j.at("master_seed");
    require(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0),
            "\"master_seed\" must be a non-negative integer");
    config.master_seed = j.at("master_seed").get<std::uint64_t>();
  }
  config.fit_decades = number_or(j, "fit_decades", config.fit_decades);
  config.slope_tolerance = number_or(j, "slope_tolerance", config.slope_tolerance);
  validate(config);
  return config;
}

nlohmann::json rate_config_to_json(const RateExperimentConfig& config) {
  return {{"problem", config.problem.to_json()},
          {"estimator", estimator_to_json(config.estimator)},
          {"n_grid", config.n_grid},
          {"trials", config.trials},
          {"eval_grid_size", config.eval_grid_size},
          {"master_seed", config.master_seed},
          {"fit_decades", config.fit_decades},
          {"slope_tolerance", config.slope_tolerance}};
}

nlohmann::json report_to_json(const RateReport& report) {
  nlohmann::json per_n = nlohmann::json::array();
  for (const auto& p : report.per_n) {
    per_n.push_back({{"n", p.n},
                     {"hyperparameter", p.hyperparameter},
                     {"mean_excess_risk", p.mean},
                     {"stderr", p.std_error},
                     {"zero_count", p.zero_count}});
  }
  nlohmann::json j = {{"config", rate_config_to_json(report.config)},
                      {"per_n", std::move(per_n)},
                      {"regime_note", report.regime_note}};
  j["theoretical_slope"] = report.theoretical_slope ? nlohmann::json(*report.theoretical_slope) : nlohmann::json();
  if (report.fit) {
    j["fitted_slope"] = report.fit->slope;
    j["fitted_constant"] = report.fit->constant;
    j["fit_window"] = {report.fit->n_lo, report.fit->n_hi};
    j["zero_risk_excluded"] = report.fit->zero_risk_excluded;
  } else {
    j["fitted_slope"] = nullptr;
    j["fitted_constant"] = nullptr;
    j["fit_window"] = nullptr;
    j["zero_risk_excluded"] = nlohmann::json::array();
  }
  const auto pass = report.slope_within_tolerance();
  j["slope_within_tolerance"] = pass ? nlohmann::json(*pass) : nlohmann::json();
  return j;
}

void write_trials_csv(std::ostream& out, const RateReport& report) {
  out << "n,trial,excess_risk\n";
  for (std::size_t i = 0; i < report.per_n.size(); ++i) {
    for (std::size_t t = 0; t < report.trial_risks[i].size(); ++t) {
      out << report.per_n[i].n << ',' << t << ',' << detail::format_double(report.trial_risks[i][t]) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const RateReport& report) {
  out << "n,mean,stderr,zero_count\n";
  for (const auto& p : report.per_n) {
    out << p.n << ',' << detail::format_double(p.mean) << ',' << detail::format_double(p.std_error) << ','
        << p.zero_count << '\n';
  }
}

}  // namespace structrates
