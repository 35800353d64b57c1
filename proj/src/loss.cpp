#include "structrates/loss.hpp"

#include "structrates/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace structrates {

namespace {

void check_unique(const std::vector<std::string>& labels, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    require(seen.insert(label).second, std::string("duplicate ") + what + " label '" + label + "'");
  }
}

void check_dimensions(const FiniteLoss& loss, const SignedMeasure& mu) {
  require(static_cast<std::size_t>(mu.weights.size()) == loss.num_observations(),
          "measure has " + std::to_string(mu.weights.size()) + " weights, loss has " +
              std::to_string(loss.num_observations()) + " observation labels");
}

}  // namespace

FiniteLoss::FiniteLoss(std::vector<std::string> z_labels, std::vector<std::string> y_labels,
                       Eigen::MatrixXd matrix)
    : z_labels_(std::move(z_labels)), y_labels_(std::move(y_labels)), matrix_(std::move(matrix)) {
  require(z_labels_.size() >= 2, "a finite loss needs at least two prediction labels");
  require(!y_labels_.empty(), "a finite loss needs at least one observation label");
  require(static_cast<std::size_t>(matrix_.rows()) == z_labels_.size() &&
              static_cast<std::size_t>(matrix_.cols()) == y_labels_.size(),
          "loss matrix shape does not match the label lists");
  check_unique(z_labels_, "prediction");
  check_unique(y_labels_, "observation");
  for (Eigen::Index i = 0; i < matrix_.size(); ++i) {
    const double v = matrix_.data()[i];
    require(std::isfinite(v) && v >= 0.0, "loss entries must be finite and non-negative");
  }
}

FiniteLoss FiniteLoss::zero_one(std::vector<std::string> labels) {
  const auto m = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd matrix = Eigen::MatrixXd::Ones(m, m) - Eigen::MatrixXd::Identity(m, m);
  auto copy = labels;
  return FiniteLoss(std::move(labels), std::move(copy), std::move(matrix));
}

FiniteLoss FiniteLoss::binary() { return zero_one({"-1", "+1"}); }

FiniteLoss FiniteLoss::three_class() {
  Eigen::MatrixXd matrix(3, 3);
  matrix << 0, 1, 1,
            1, 0, 2,
            1, 2, 0;
  return FiniteLoss({"a", "b", "c"}, {"a", "b", "c"}, std::move(matrix));
}

double FiniteLoss::c_psi() const { return matrix_.rowwise().norm().maxCoeff(); }

std::size_t FiniteLoss::y_index(const std::string& label) const {
  const auto it = std::find(y_labels_.begin(), y_labels_.end(), label);
  require(it != y_labels_.end(), "unknown observation label '" + label + "'");
  return static_cast<std::size_t>(it - y_labels_.begin());
}

std::size_t FiniteLoss::z_index(const std::string& label) const {
  const auto it = std::find(z_labels_.begin(), z_labels_.end(), label);
  require(it != z_labels_.end(), "unknown prediction label '" + label + "'");
  return static_cast<std::size_t>(it - z_labels_.begin());
}

double FiniteLoss::min_pair_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < matrix_.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < matrix_.rows(); ++b) {
      const double d = (matrix_.row(a) - matrix_.row(b)).norm();
      if (d > 0.0) best = std::min(best, d);
    }
  }
  return best;
}

double FiniteLoss::max_pair_distance() const {
  double best = 0.0;
  for (Eigen::Index a = 0; a < matrix_.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < matrix_.rows(); ++b) {
      best = std::max(best, (matrix_.row(a) - matrix_.row(b)).norm());
    }
  }
  return best;
}

SignedMeasure SignedMeasure::one_hot(std::size_t size, std::size_t index) {
  require(index < size, "one-hot index out of range");
  SignedMeasure mu{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))};
  mu.weights[static_cast<Eigen::Index>(index)] = 1.0;
  return mu;
}

RiskVector risk_vector(const FiniteLoss& loss, const SignedMeasure& mu) {
  check_dimensions(loss, mu);
  return {loss.matrix() * mu.weights};
}

std::size_t decode(const FiniteLoss& loss, const SignedMeasure& mu) {
  const RiskVector risk = risk_vector(loss, mu);
  std::size_t best = 0;
  for (Eigen::Index z = 1; z < risk.values.size(); ++z) {
    if (risk.values[z] < risk.values[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(z);
  }
  return best;
}

double margin_gap(const FiniteLoss& loss, const SignedMeasure& mu) {
  const RiskVector risk = risk_vector(loss, mu);
  double lowest = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  for (Eigen::Index z = 0; z < risk.values.size(); ++z) {
    const double v = risk.values[z];
    if (v < lowest) {
      second = lowest;
      lowest = v;
    } else if (v < second) {
      second = v;
    }
  }
  return second - lowest;
}

FrontierProbe probe_frontier(const FiniteLoss& loss, const SignedMeasure& mu) {
  const RiskVector risk = risk_vector(loss, mu);
  FrontierProbe probe;
  probe.best = decode(loss, mu);
  probe.distance = std::numeric_limits<double>::infinity();
  probe.direction = Eigen::VectorXd::Zero(mu.weights.size());

  const auto best = static_cast<Eigen::Index>(probe.best);
  for (Eigen::Index z = 0; z < risk.values.size(); ++z) {
    if (z == best) continue;
    // risk[z] - risk[best] = <psi(z) - psi(best), mu>: the signed distance to
    // the tie hyperplane is that gap over ||psi(z) - psi(best)||.
    const double gap = std::max(0.0, risk.values[z] - risk.values[best]);
    const Eigen::VectorXd delta = loss.matrix().row(best) - loss.matrix().row(z);
    const double norm = delta.norm();
    if (norm == 0.0) {
      if (gap <= kTieTolerance) {
        probe.nearest = static_cast<std::size_t>(z);
        probe.distance = 0.0;
        probe.direction.setZero();
        return probe;
      }
      continue;
    }
    const double d = gap / norm;
    if (d < probe.distance) {
      probe.distance = d;
      probe.nearest = static_cast<std::size_t>(z);
      probe.direction = delta / norm;
    }
  }
  return probe;
}

double frontier_distance(const FiniteLoss& loss, const SignedMeasure& mu) {
  return probe_frontier(loss, mu).distance;
}

int binary_decode(double g) { return g > 0.0 ? 1 : -1; }

double binary_frontier_distance(double g) { return std::abs(g); }

SignedMeasure binary_measure(double g) {
  Eigen::VectorXd w(2);
  w << (1.0 - g) / 2.0, (1.0 + g) / 2.0;
  return {std::move(w)};
}

}  // namespace structrates
