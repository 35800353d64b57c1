#include "structrates/synthetic.hpp"

#include "structrates/error.hpp"
#include "structrates/random.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

namespace structrates {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::power_margin: return "power_margin";
    case ProblemKind::staircase: return "staircase";
    case ProblemKind::separated_support: return "separated_support";
    case ProblemKind::three_class_simplex: return "three_class_simplex";
  }
  return "unknown";
}

SyntheticProblem::SyntheticProblem(ProblemKind kind, double parameter, FiniteLoss loss,
                                   std::vector<std::pair<double, double>> support)
    : kind_(kind), parameter_(parameter), loss_(std::move(loss)), support_(std::move(support)) {}

SyntheticProblem SyntheticProblem::power_margin(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, "power_margin needs alpha > 0");
  return {ProblemKind::power_margin, alpha, FiniteLoss::binary(), {{-1.0, 1.0}}};
}

SyntheticProblem SyntheticProblem::staircase(double period) {
  require(std::isfinite(period) && period > 0.0, "staircase needs a positive period");
  return {ProblemKind::staircase, period, FiniteLoss::binary(), {{-1.0, 1.0}}};
}

SyntheticProblem SyntheticProblem::separated_support(double exponent) {
  require(std::isfinite(exponent) && exponent > 0.0, "separated_support needs exponent > 0");
  return {ProblemKind::separated_support, exponent, FiniteLoss::binary(), {{-1.0, -0.5}, {0.5, 1.0}}};
}

SyntheticProblem SyntheticProblem::three_class_simplex() {
  return {ProblemKind::three_class_simplex, 0.0, FiniteLoss::three_class(), {{0.0, 1.0}}};
}

bool SyntheticProblem::in_support(double x) const {
  for (const auto& [lo, hi] : support_) {
    if (x >= lo && x <= hi) return true;
  }
  return false;
}

double SyntheticProblem::regression(double x) const {
  require(in_support(x), "x = " + std::to_string(x) + " lies outside the support of " + to_string(kind_));
  switch (kind_) {
    case ProblemKind::power_margin:
      if (x == 0.0) return 0.0;
      return std::copysign(std::pow(std::abs(x), 1.0 / parameter_), x);
    case ProblemKind::staircase: {
      const double offset = x - parameter_ * std::round(x / parameter_);
      return std::abs(offset) < parameter_ / 4.0 ? 1.0 : -1.0;
    }
    case ProblemKind::separated_support:
      return std::copysign(std::pow(1.0 - std::abs(x), parameter_), x);
    case ProblemKind::three_class_simplex:
      break;
  }
  throw ContractViolation("regression function is only defined for binary problems");
}

SignedMeasure SyntheticProblem::conditional(double x) const {
  if (is_binary()) return binary_measure(regression(x));
  require(in_support(x), "x = " + std::to_string(x) + " lies outside the support of " + to_string(kind_));
  const double s = std::sin(std::numbers::pi * x);
  const double mass_a = s * s / 3.0;
  Eigen::VectorXd w(3);
  w << mass_a, (1.0 - mass_a) * (1.0 - x), (1.0 - mass_a) * x;
  return {std::move(w)};
}

std::size_t SyntheticProblem::bayes_predict(double x) const {
  if (is_binary()) return binary_decode(regression(x)) > 0 ? 1 : 0;
  return decode(loss_, conditional(x));
}

double SyntheticProblem::frontier_distance(double x) const {
  if (is_binary()) return binary_frontier_distance(regression(x));
  return structrates::frontier_distance(loss_, conditional(x));
}

std::optional<double> SyntheticProblem::margin_exponent() const {
  switch (kind_) {
    case ProblemKind::power_margin: return parameter_;
    case ProblemKind::staircase: return std::nullopt;
    case ProblemKind::separated_support: return 1.0 / parameter_;
    case ProblemKind::three_class_simplex: return 1.0;  // transversal frontier crossings
  }
  return std::nullopt;
}

double SyntheticProblem::support_length() const {
  double total = 0.0;
  for (const auto& [lo, hi] : support_) total += hi - lo;
  return total;
}

double SyntheticProblem::support_point(double u) const {
  double offset = u * support_length();
  for (const auto& [lo, hi] : support_) {
    if (offset <= hi - lo) return lo + offset;
    offset -= hi - lo;
  }
  return support_.back().second;
}

std::vector<double> SyntheticProblem::regular_grid(std::size_t count) const {
  require(count >= 1, "evaluation grid needs at least one point");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = support_point((static_cast<double>(i) + 0.5) / static_cast<double>(count));
  }
  return grid;
}

SampleSet SyntheticProblem::sample(std::size_t n, std::uint64_t seed) const {
  require(n >= 1, "sample size must be at least 1");
  Rng rng(seed);
  RowMatrix inputs(static_cast<Eigen::Index>(n), 1);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = support_point(rng.uniform());
    inputs(static_cast<Eigen::Index>(i), 0) = x;
    const SignedMeasure law = conditional(x);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t label = static_cast<std::size_t>(law.weights.size()) - 1;
    for (Eigen::Index y = 0; y + 1 < law.weights.size(); ++y) {
      cumulative += law.weights[y];
      if (u < cumulative) {
        label = static_cast<std::size_t>(y);
        break;
      }
    }
    labels[i] = label;
  }
  return SampleSet(std::move(inputs), std::move(labels));
}

nlohmann::json SyntheticProblem::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind_)}};
  switch (kind_) {
    case ProblemKind::power_margin: j["alpha"] = parameter_; break;
    case ProblemKind::staircase: j["period"] = parameter_; break;
    case ProblemKind::separated_support: j["exponent"] = parameter_; break;
    case ProblemKind::three_class_simplex: break;
  }
  return j;
}

SyntheticProblem SyntheticProblem::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("kind") && j.at("kind").is_string(),
          "problem must be an object with a string \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  auto only = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
      bool ok = key == "kind";
      for (const char* a : allowed) ok = ok || key == a;
      require(ok, "unknown key '" + key + "' for problem kind " + kind);
    }
  };
  auto number = [&](const char* key, std::optional<double> fallback) {
    if (!j.contains(key)) {
      require(fallback.has_value(), std::string("problem kind ") + kind + " needs \"" + key + "\"");
      return *fallback;
    }
    require(j.at(key).is_number(), std::string("problem field \"") + key + "\" must be a number");
    return j.at(key).get<double>();
  };
  if (kind == "power_margin") {
    only({"alpha"});
    return power_margin(number("alpha", std::nullopt));
  }
  if (kind == "staircase") {
    only({"period"});
    return staircase(number("period", 1.0 / 50.0));
  }
  if (kind == "separated_support") {
    only({"exponent"});
    return separated_support(number("exponent", std::nullopt));
  }
  if (kind == "three_class_simplex") {
    only({});
    return three_class_simplex();
  }
  throw ContractViolation("unknown problem kind '" + kind + "'");
}

double excess_risk(std::span<const std::size_t> predictions, const SyntheticProblem& problem,
                   std::span<const double> grid) {
  require(predictions.size() == grid.size(), "predictions and grid differ in length");
  require(!grid.empty(), "evaluation grid is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(predictions[i] < problem.loss().num_predictions(), "prediction index out of range");
    const std::size_t best = problem.bayes_predict(grid[i]);
    if (predictions[i] == best) continue;
    if (problem.is_binary()) {
      total += std::abs(problem.regression(grid[i]));
      continue;
    }
    const RiskVector risk = risk_vector(problem.loss(), problem.conditional(grid[i]));
    total += risk.values[static_cast<Eigen::Index>(predictions[i])] - risk.values[static_cast<Eigen::Index>(best)];
  }
  return total / static_cast<double>(grid.size());
}

}  // namespace structrates
