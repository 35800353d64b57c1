#pragma once

#include "structrates/loss.hpp"
#include "structrates/synthetic.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace structrates {

/// Empirical CDF of the margin d(g*(X), F) on a threshold grid:
/// cdf[j] = #{x : d(x) < thresholds[j]} / sample_count.
struct MarginProfile {
  std::vector<double> thresholds;
  std::vector<double> cdf;
  std::size_t sample_count = 0;
};

/// Log-log fit cdf(t) ~ c_alpha t^alpha.
struct AlphaFit {
  double alpha_hat = 0.0;
  double c_alpha_hat = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> fit_range{0.0, 0.0};
  std::size_t points_used = 0;
};

/// Which quantity plays the role of the margin when profiling explicit
/// surrogate values.
enum class MarginMeasure { frontier_distance, margin_gap };

/// `count` log-spaced thresholds on [lo, hi].
std::vector<double> log_thresholds(double lo, double hi, std::size_t count);
/// Default grid: 50 log-spaced points on [1e-3, max_margin].
std::vector<double> default_thresholds(double max_margin);

/// Profile of precomputed margins.
MarginProfile margin_profile(std::span<const double> margins, std::span<const double> thresholds);
/// Profile of explicit surrogate values g*(x) for each evaluation point.
MarginProfile margin_profile(const FiniteLoss& loss, std::span<const SignedMeasure> targets,
                             std::span<const double> thresholds,
                             MarginMeasure measure = MarginMeasure::frontier_distance);
/// Profile of a synthetic problem using its exact margin at each point.
MarginProfile margin_profile(const SyntheticProblem& problem, std::span<const double> eval_points,
                             std::span<const double> thresholds);

/// Selects the thresholds a fit may use: an explicit [lo, hi] range, or the
/// grid with `drop_fraction` of points removed from each end.
struct FitWindow {
  double drop_fraction = 0.1;
  std::optional<std::pair<double, double>> range;
};

/// Least-squares line through (log t, log cdf) over the window, using only
/// points with 0 < cdf < 1. Throws ProfileDegenerate with fewer than three.
AlphaFit fit_alpha(const MarginProfile& profile, const FitWindow& window = {});

/// Largest threshold whose cdf is still 0 (an empirical lower bound on the
/// no-density radius t0), or nullopt when cdf is positive already at the
/// first threshold.
std::optional<double> check_no_density(const MarginProfile& profile);

nlohmann::json profile_to_json(const MarginProfile& profile, const std::optional<AlphaFit>& fit,
                               const std::optional<double>& t0);
/// Two columns: t,cdf.
void write_profile_csv(std::ostream& out, const MarginProfile& profile);

}  // namespace structrates
