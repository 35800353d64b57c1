#pragma once

#include "structrates/loss.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace structrates {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Training data: n points in R^d with observation indices into the y labels
/// of a FiniteLoss.
class SampleSet {
public:
  SampleSet(RowMatrix inputs, std::vector<std::size_t> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(inputs_.cols()); }
  const RowMatrix& inputs() const { return inputs_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  std::span<const double> point(std::size_t i) const {
    return {inputs_.data() + i * dimension(), dimension()};
  }

private:
  RowMatrix inputs_;
  std::vector<std::size_t> labels_;
};

/// Weights alpha(x) over the n training samples at one query point.
struct WeightProfile {
  Eigen::VectorXd alpha;
};

/// Uniform weights over the k nearest neighbours (Euclidean). A tied group
/// of p points at the k-th distance, with m points strictly closer, shares
/// the remaining k - m slots: each gets (k - m) / (p k). With m = k - 1 this
/// is the classical 1 / (p k). Ties are exact floating-point equality of
/// squared distances.
WeightProfile knn_weights(std::span<const double> query, const SampleSet& data, std::size_t k);

enum class KernelFamily { gaussian, laplacian };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily family, double bandwidth);

  /// gaussian: exp(-|x - x'|_2^2 / (2 h^2)); laplacian: exp(-|x - x'|_1 / h).
  double operator()(std::span<const double> x, std::span<const double> y) const;
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Cholesky factor of (K/n + lambda I), K[i][j] = k(X_i, X_j). Reusable
/// across any number of queries.
class KrrFactorization {
public:
  double lambda() const { return lambda_; }
  std::size_t size() const { return static_cast<std::size_t>(llt_.rows()); }

  /// Solves (K/n + lambda I) v = rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

private:
  friend KrrFactorization krr_fit(const SampleSet&, const KernelSpec&, double);
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double lambda_ = 0.0;
};

/// Scaled Gram matrix K/n.
Eigen::MatrixXd scaled_gram(const SampleSet& data, const KernelSpec& kernel);
/// Scaled kernel column (k(x, X_i) / n)_i.
Eigen::VectorXd scaled_kernel_column(std::span<const double> query, const SampleSet& data,
                                     const KernelSpec& kernel);

KrrFactorization krr_fit(const SampleSet& data, const KernelSpec& kernel, double lambda);

/// alpha(x) = (K/n + lambda)^{-1} (k(x, X_i) / n)_i.
WeightProfile krr_weights(std::span<const double> query, const KrrFactorization& fact,
                          const SampleSet& data, const KernelSpec& kernel);

/// Weights for many queries at once; column j belongs to query row j.
Eigen::MatrixXd krr_weights_batch(const RowMatrix& queries, const KrrFactorization& fact,
                                  const SampleSet& data, const KernelSpec& kernel);

/// g_n(x) = sum_i alpha_i phi(Y_i), i.e. the weights pooled per label.
SignedMeasure predict_surrogate(const WeightProfile& profile, const SampleSet& data,
                                const FiniteLoss& loss);

/// floor(k0 n^{2 beta / (2 beta + 1)}) clamped to [1, n].
std::size_t knn_schedule(std::size_t n, double k0, double beta);

/// lambda0 n^{-1 / (2 q + sigma)}.
double krr_schedule(std::size_t n, double lambda0, double q, double sigma);

/// Dataset CSV: header x_0,...,x_{d-1},y; y must name a label of `loss`.
SampleSet read_dataset_csv(std::istream& in, const FiniteLoss& loss);
SampleSet load_dataset(const std::filesystem::path& path, const FiniteLoss& loss);
/// Query CSV: header x_0,...,x_{d-1}.
RowMatrix read_points_csv(std::istream& in);

}  // namespace structrates
