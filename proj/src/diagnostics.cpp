#include "structrates/diagnostics.hpp"

#include "csv.hpp"
#include "line_fit.hpp"
#include "structrates/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace structrates {

std::vector<double> log_thresholds(double lo, double hi, std::size_t count) {
  require(lo > 0.0 && hi > lo, "threshold range must satisfy 0 < lo < hi");
  require(count >= 2, "threshold grid needs at least two points");
  std::vector<double> grid(count);
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) grid[j] = std::exp(log_lo + step * static_cast<double>(j));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_thresholds(double max_margin) { return log_thresholds(1e-3, max_margin, 50); }

MarginProfile margin_profile(std::span<const double> margins, std::span<const double> thresholds) {
  require(!margins.empty(), "margin profile needs at least one evaluation point");
  require(!thresholds.empty(), "margin profile needs at least one threshold");
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    require(thresholds[j] > 0.0 && (j == 0 || thresholds[j] > thresholds[j - 1]),
            "thresholds must be positive and strictly increasing");
  }
  std::vector<double> sorted(margins.begin(), margins.end());
  std::sort(sorted.begin(), sorted.end());

  MarginProfile profile;
  profile.sample_count = sorted.size();
  profile.thresholds.assign(thresholds.begin(), thresholds.end());
  profile.cdf.reserve(thresholds.size());
  for (const double t : thresholds) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    profile.cdf.push_back(static_cast<double>(below) / static_cast<double>(sorted.size()));
  }
  return profile;
}

MarginProfile margin_profile(const FiniteLoss& loss, std::span<const SignedMeasure> targets,
                             std::span<const double> thresholds, MarginMeasure measure) {
  std::vector<double> margins;
  margins.reserve(targets.size());
  for (const auto& mu : targets) {
    margins.push_back(measure == MarginMeasure::frontier_distance ? frontier_distance(loss, mu)
                                                                  : margin_gap(loss, mu));
  }
  return margin_profile(margins, thresholds);
}

MarginProfile margin_profile(const SyntheticProblem& problem, std::span<const double> eval_points,
                             std::span<const double> thresholds) {
  std::vector<double> margins;
  margins.reserve(eval_points.size());
  for (const double x : eval_points) margins.push_back(problem.frontier_distance(x));
  return margin_profile(margins, thresholds);
}

AlphaFit fit_alpha(const MarginProfile& profile, const FitWindow& window) {
  const std::size_t m = profile.thresholds.size();
  require(profile.cdf.size() == m, "profile thresholds and cdf differ in length");

  std::size_t first = 0;
  std::size_t last = m;  // exclusive
  if (window.range) {
    const auto [lo, hi] = *window.range;
    require(lo < hi, "fit window must satisfy lo < hi");
    first = static_cast<std::size_t>(std::lower_bound(profile.thresholds.begin(), profile.thresholds.end(), lo) -
                                     profile.thresholds.begin());
    last = static_cast<std::size_t>(std::upper_bound(profile.thresholds.begin(), profile.thresholds.end(), hi) -
                                    profile.thresholds.begin());
  } else {
    require(window.drop_fraction >= 0.0 && window.drop_fraction < 0.5, "drop_fraction must lie in [0, 0.5)");
    const auto drop = static_cast<std::size_t>(std::floor(window.drop_fraction * static_cast<double>(m)));
    first = drop;
    last = m - drop;
  }

  std::vector<double> log_t;
  std::vector<double> log_cdf;
  for (std::size_t j = first; j < last; ++j) {
    const double c = profile.cdf[j];
    if (c > 0.0 && c < 1.0) {
      log_t.push_back(std::log(profile.thresholds[j]));
      log_cdf.push_back(std::log(c));
    }
  }
  if (log_t.size() < 3) {
    throw ProfileDegenerate("only " + std::to_string(log_t.size()) +
                            " thresholds in the fit window have 0 < cdf < 1; need at least 3");
  }

  const auto line = detail::fit_line(log_t, log_cdf);
  AlphaFit fit;
  fit.alpha_hat = line.slope;
  fit.c_alpha_hat = std::exp(line.intercept);
  fit.r_squared = line.r_squared;
  fit.fit_range = {profile.thresholds[first], profile.thresholds[last - 1]};
  fit.points_used = log_t.size();
  return fit;
}

std::optional<double> check_no_density(const MarginProfile& profile) {
  std::optional<double> t0;
  for (std::size_t j = 0; j < profile.cdf.size(); ++j) {
    if (profile.cdf[j] > 0.0) break;
    t0 = profile.thresholds[j];
  }
  return t0;
}

nlohmann::json profile_to_json(const MarginProfile& profile, const std::optional<AlphaFit>& fit,
                               const std::optional<double>& t0) {
  nlohmann::json j = {{"thresholds", profile.thresholds},
                      {"cdf", profile.cdf},
                      {"sample_count", profile.sample_count}};
  if (fit) {
    j["alpha_hat"] = fit->alpha_hat;
    j["c_alpha_hat"] = fit->c_alpha_hat;
    j["r_squared"] = fit->r_squared;
    j["fit_range"] = {fit->fit_range.first, fit->fit_range.second};
  } else {
    j["alpha_hat"] = nullptr;
    j["c_alpha_hat"] = nullptr;
    j["r_squared"] = nullptr;
    j["fit_range"] = nullptr;
  }
  j["no_density_t0"] = t0 ? nlohmann::json(*t0) : nlohmann::json(nullptr);
  return j;
}

void write_profile_csv(std::ostream& out, const MarginProfile& profile) {
  out << "t,cdf\n";
  for (std::size_t j = 0; j < profile.thresholds.size(); ++j) {
    out << detail::format_double(profile.thresholds[j]) << ',' << detail::format_double(profile.cdf[j]) << '\n';
  }
}

}  // namespace structrates
