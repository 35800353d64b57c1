#pragma once

#include "structrates/estimators.hpp"
#include "structrates/synthetic.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace structrates {

/// k_n = floor(k0 n^{2 beta / (2 beta + 1)}).
struct KnnSchedule {
  double k0 = 1.0;
  double beta = 1.0;
};

/// lambda_n = lambda0 n^{-1 / (2 q + sigma)}. `p` (interpolation exponent)
/// only enters the theoretical slope -(q - p)(1 + alpha) / (2 q + sigma).
struct KrrSchedule {
  KernelSpec kernel;
  double lambda0 = 1.0;
  double q = 0.5;
  double sigma = 1.0;
  double p = 0.0;
};

struct FixedKnn {
  std::size_t k = 1;
};

struct FixedKrr {
  KernelSpec kernel;
  double lambda = 1.0;
};

using EstimatorConfig = std::variant<KnnSchedule, KrrSchedule, FixedKnn, FixedKrr>;

struct RateExperimentConfig {
  SyntheticProblem problem = SyntheticProblem::power_margin(1.0);
  EstimatorConfig estimator = KnnSchedule{};
  std::vector<std::size_t> n_grid;
  std::size_t trials = 100;
  std::size_t eval_grid_size = 100;
  std::uint64_t master_seed = 0;
  /// Width, in decades of n, of the slope-fit window ending at max(n_grid).
  double fit_decades = 1.0;
  /// Allowed |fitted - theoretical| for the pass/fail summary.
  double slope_tolerance = 0.15;
};

/// `points` log-spaced integers on [lo, hi], rounded and de-duplicated.
std::vector<std::size_t> log_spaced_sizes(std::size_t lo, std::size_t hi, std::size_t points);

/// Default n grid: 13 log-spaced sizes on [10, 1e5].
std::vector<std::size_t> default_n_grid();

/// Theoretical log-log slope of the excess risk, or nullopt when the
/// estimator has no schedule or the problem has no margin exponent.
std::optional<double> theoretical_slope(const SyntheticProblem& problem, const EstimatorConfig& estimator);

struct SlopeFit {
  double slope = 0.0;
  double constant = 0.0;  ///< C in risk ~ C n^slope
  std::size_t n_lo = 0;   ///< smallest n inside the window
  std::size_t n_hi = 0;
  std::size_t points_used = 0;
  std::vector<std::size_t> zero_risk_excluded;
};

/// Restricts a slope fit to n in [n_max / 10^decades, n_max], or to an
/// explicit [lo, hi] range when given.
struct SlopeWindow {
  double decades = 1.0;
  std::optional<std::pair<std::size_t, std::size_t>> range;
};

/// Least-squares slope of log(risk) against log(n) over the window.
/// Zero-risk points are excluded and reported; with fewer than three
/// positive points left, throws ExponentialRegime.
SlopeFit fit_slope(std::span<const std::size_t> n_values, std::span<const double> risks,
                   const SlopeWindow& window = {});

struct RatePoint {
  std::size_t n = 0;
  double hyperparameter = 0.0;  ///< k or lambda used at this n
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t zero_count = 0;
};

struct RateReport {
  RateExperimentConfig config;
  std::vector<RatePoint> per_n;
  /// trial_risks[n_index][trial]
  std::vector<std::vector<double>> trial_risks;
  std::optional<SlopeFit> fit;
  std::optional<double> theoretical_slope;
  std::string regime_note;

  std::optional<double> fitted_slope() const {
    return fit ? std::optional<double>(fit->slope) : std::nullopt;
  }
  /// |fitted - theoretical| <= tolerance; nullopt when either is missing.
  std::optional<bool> slope_within_tolerance() const;
};

/// k or lambda the estimator uses on n training points.
double resolve_hyperparameter(const EstimatorConfig& estimator, std::size_t n);

/// Fits the estimator on `data` (schedules evaluated at n = data.size()) and
/// decodes a label index for each query row.
std::vector<std::size_t> predict_labels(const EstimatorConfig& estimator, const SampleSet& data,
                                        const FiniteLoss& loss, const RowMatrix& queries);

struct TrialResult {
  double excess_risk = 0.0;
  double hyperparameter = 0.0;
};

/// One trial: sample n points, fit the scheduled estimator, decode on the
/// regular evaluation grid and score against f*.
TrialResult run_trial(const RateExperimentConfig& config, std::size_t n, std::uint64_t seed);

/// Runs every (n, trial) pair on up to `workers` threads. Results are
/// reduced by index, so the report does not depend on scheduling. The first
/// failing trial aborts the experiment.
RateReport rate_experiment(const RateExperimentConfig& config, std::size_t workers = 1);

// Serialization. Parsing is strict: unknown keys throw ContractViolation.
RateExperimentConfig rate_config_from_json(const nlohmann::json& j);
nlohmann::json rate_config_to_json(const RateExperimentConfig& config);
EstimatorConfig estimator_from_json(const nlohmann::json& j);
nlohmann::json estimator_to_json(const EstimatorConfig& estimator);

nlohmann::json report_to_json(const RateReport& report);
/// Long form: n,trial,excess_risk.
void write_trials_csv(std::ostream& out, const RateReport& report);
/// n,mean,stderr,zero_count.
void write_summary_csv(std::ostream& out, const RateReport& report);

}  // namespace structrates
