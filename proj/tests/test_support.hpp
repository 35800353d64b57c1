#pragma once

#include "structrates/loss.hpp"
#include "structrates/random.hpp"

#include <cmath>

namespace structrates::test {

/// Random loss with integer entries in [0, 4] so exact ties are common.
inline FiniteLoss random_loss(Rng& rng, std::size_t max_dim = 6) {
  const auto nz = 2 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_dim - 1));
  const auto ny = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_dim));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(ny));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::floor(rng.uniform() * 5.0);
  std::vector<std::string> z;
  std::vector<std::string> y;
  for (std::size_t i = 0; i < nz; ++i) z.push_back("z" + std::to_string(i));
  for (std::size_t i = 0; i < ny; ++i) y.push_back("y" + std::to_string(i));
  return FiniteLoss(std::move(z), std::move(y), std::move(m));
}

/// Random loss with continuous entries; ties have probability zero.
inline FiniteLoss random_generic_loss(Rng& rng, std::size_t max_dim = 6) {
  FiniteLoss base = random_loss(rng, max_dim);
  Eigen::MatrixXd m = base.matrix();
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 3.0 * rng.uniform();
  return FiniteLoss(base.z_labels(), base.y_labels(), std::move(m));
}

/// Random probability vector; with `coarse` the entries are multiples of 1/4.
inline SignedMeasure random_probability(Rng& rng, std::size_t size, bool coarse = false) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w[i] = coarse ? std::floor(rng.uniform() * 4.0) : -std::log(1.0 - rng.uniform());
  }
  if (w.sum() == 0.0) w[0] = 1.0;
  w /= w.sum();
  return {w};
}

/// Standard normal via Box-Muller.
inline double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Uniform point in the open ball of the given radius.
inline Eigen::VectorXd random_in_ball(Rng& rng, Eigen::Index dim, double radius) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  v.normalize();
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return v * r;
}

}  // namespace structrates::test
