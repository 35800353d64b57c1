#pragma once

#include "structrates/estimators.hpp"
#include "structrates/loss.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace structrates {

enum class ProblemKind { power_margin, staircase, separated_support, three_class_simplex };

std::string to_string(ProblemKind kind);

/// One-dimensional generative problem with a known conditional law, hence a
/// known surrogate target g*(x), Bayes predictor f*(x) and margin.
///
///  - power_margin(alpha): X ~ U[-1, 1], E[Y|x] = sign(x) |x|^{1/alpha}.
///  - staircase(period): X ~ U[-1, 1], E[Y|x] = +1 within period/4 of a
///    multiple of the period and -1 elsewhere. |E[Y|x]| = 1 everywhere.
///  - separated_support(exponent): X ~ U([-1, -0.5] u [0.5, 1]),
///    E[Y|x] = sign(x) (1 - |x|)^exponent.
///  - three_class_simplex: X ~ U[0, 1], labels {a, b, c} with
///    l(a,b) = l(a,c) = 1, l(b,c) = 2. The conditional law runs from pure b
///    through the barycenter at x = 1/2 to pure c, crossing both frontiers.
///
/// Binary kinds use labels {-1, +1} under the 0-1 loss.
class SyntheticProblem {
public:
  static SyntheticProblem power_margin(double alpha);
  static SyntheticProblem staircase(double period = 1.0 / 50.0);
  static SyntheticProblem separated_support(double exponent);
  static SyntheticProblem three_class_simplex();

  ProblemKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  const FiniteLoss& loss() const { return loss_; }
  bool is_binary() const { return kind_ != ProblemKind::three_class_simplex; }

  /// Disjoint closed intervals making up supp(rho_X), in increasing order.
  const std::vector<std::pair<double, double>>& support() const { return support_; }
  bool in_support(double x) const;

  /// Exact conditional law of Y given x, as a probability vector over y labels.
  SignedMeasure conditional(double x) const;
  /// E[Y | x] for binary kinds; throws for three_class_simplex.
  double regression(double x) const;
  /// Exact f*(x) as a z index.
  std::size_t bayes_predict(double x) const;
  /// Exact margin of g*(x): |E[Y|x]| for binary kinds (scalar embedding),
  /// the ambient frontier distance otherwise.
  double frontier_distance(double x) const;

  /// Margin exponent alpha with P(margin < t) ~ t^alpha, or nullopt when the
  /// margin is bounded away from zero.
  std::optional<double> margin_exponent() const;

  /// `count` cell midpoints of a regular partition of the support. Points
  /// are spread over support intervals in proportion to their length.
  std::vector<double> regular_grid(std::size_t count) const;

  /// Draws n i.i.d. pairs; the same seed yields the same data.
  SampleSet sample(std::size_t n, std::uint64_t seed) const;

  nlohmann::json to_json() const;
  static SyntheticProblem from_json(const nlohmann::json& j);

private:
  SyntheticProblem(ProblemKind kind, double parameter, FiniteLoss loss,
                   std::vector<std::pair<double, double>> support);

  double support_length() const;
  /// Maps u in [0, 1) to the support, uniformly.
  double support_point(double u) const;

  ProblemKind kind_;
  double parameter_;
  FiniteLoss loss_;
  std::vector<std::pair<double, double>> support_;
};

/// Mean over the grid of risk(f_n(x)) - risk(f*(x)) under the exact
/// conditional law. For binary kinds this is 1{f_n != f*} |g*(x)|.
double excess_risk(std::span<const std::size_t> predictions, const SyntheticProblem& problem,
                   std::span<const double> grid);

}  // namespace structrates
