#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace structrates {

/// Risk-value differences at or below this are treated as ties by the
/// frontier diagnostics.
inline constexpr double kTieTolerance = 1e-12;

/// A finite task loss L[z][y] = loss(z, y) over prediction labels Z and
/// observation labels Y.
///
/// The loss is embedded bilinearly with psi(z) = row z of L and phi(y) = the
/// y-th standard basis vector of R^|Y|, so <psi(z), phi(y)> = L[z][y] holds
/// exactly. Surrogate estimates then live in R^|Y| as (signed) measures.
class FiniteLoss {
public:
  FiniteLoss(std::vector<std::string> z_labels, std::vector<std::string> y_labels,
             Eigen::MatrixXd matrix);

  /// Square loss 1{z != y} over a shared label set.
  static FiniteLoss zero_one(std::vector<std::string> labels);
  /// Binary 0-1 loss with labels {-1, +1} in that order.
  static FiniteLoss binary();
  /// Three-class loss with l(a,b) = l(a,c) = 1 and l(b,c) = 2.
  static FiniteLoss three_class();

  std::size_t num_predictions() const { return z_labels_.size(); }
  std::size_t num_observations() const { return y_labels_.size(); }
  const std::vector<std::string>& z_labels() const { return z_labels_; }
  const std::vector<std::string>& y_labels() const { return y_labels_; }
  const std::string& z_label(std::size_t z) const { return z_labels_.at(z); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  /// psi(z) in the canonical embedding.
  Eigen::VectorXd psi(std::size_t z) const { return matrix_.row(z).transpose(); }

  /// max_z ||psi(z)||_2.
  double c_psi() const;

  /// Index of a y label; throws ContractViolation if absent.
  std::size_t y_index(const std::string& label) const;
  std::size_t z_index(const std::string& label) const;

  /// Smallest and largest ||psi(z) - psi(z')|| over distinct pairs. The
  /// minimum skips pairs with zero norm (duplicate rows); it is +inf when
  /// every pair is a duplicate.
  double min_pair_distance() const;
  double max_pair_distance() const;

private:
  std::vector<std::string> z_labels_;
  std::vector<std::string> y_labels_;
  Eigen::MatrixXd matrix_;
};

/// A surrogate value g(x) in R^|Y|. Estimated by local averaging it is a
/// probability vector; kernel ridge weights make it signed.
struct SignedMeasure {
  Eigen::VectorXd weights;

  static SignedMeasure one_hot(std::size_t size, std::size_t index);
};

/// Expected loss of every prediction under a measure.
struct RiskVector {
  Eigen::VectorXd values;
};

RiskVector risk_vector(const FiniteLoss& loss, const SignedMeasure& mu);

/// argmin_z of the risk vector; ties go to the lowest z index.
std::size_t decode(const FiniteLoss& loss, const SignedMeasure& mu);

/// Second-smallest minus smallest risk value. Zero exactly on the frontier.
double margin_gap(const FiniteLoss& loss, const SignedMeasure& mu);

/// Euclidean distance in R^|Y| from mu to the decision frontier, the set of
/// measures with at least two optimal decodes.
double frontier_distance(const FiniteLoss& loss, const SignedMeasure& mu);

/// Frontier geometry of a single measure.
struct FrontierProbe {
  std::size_t best = 0;       ///< decode(mu)
  std::size_t nearest = 0;    ///< z' whose tie hyperplane is closest
  double distance = 0.0;      ///< frontier_distance(mu)
  Eigen::VectorXd direction;  ///< unit vector from mu toward that hyperplane
};

FrontierProbe probe_frontier(const FiniteLoss& loss, const SignedMeasure& mu);

// Binary classification in the scalar embedding phi(y) = y, psi(z) = -z,
// where the surrogate is g(x) = E[Y | x] in [-1, 1].

/// Sign decode; g = 0 maps to -1, matching the lowest-index tie-break of
/// FiniteLoss::binary().
int binary_decode(double g);
/// Distance from g to the frontier {0}: |g|.
double binary_frontier_distance(double g);
/// The measure (P(Y=-1), P(Y=+1)) = ((1-g)/2, (1+g)/2).
SignedMeasure binary_measure(double g);

// Loss matrix files.

/// CSV: header row holds the y labels after a leading corner cell, each
/// following row starts with its z label.
FiniteLoss read_loss_csv(std::istream& in);
/// JSON: {"z": [...], "y": [...], "matrix": [[...], ...]}.
FiniteLoss loss_from_json(const nlohmann::json& j);
nlohmann::json loss_to_json(const FiniteLoss& loss);
/// Dispatches on the file extension (.csv or .json).
FiniteLoss load_loss(const std::filesystem::path& path);

}  // namespace structrates
