#include "structrates/estimators.hpp"

#include "csv.hpp"
#include "structrates/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace structrates {

SampleSet::SampleSet(RowMatrix inputs, std::vector<std::size_t> labels)
    : inputs_(std::move(inputs)), labels_(std::move(labels)) {
  require(!labels_.empty(), "a sample set needs at least one point");
  require(static_cast<std::size_t>(inputs_.rows()) == labels_.size(),
          "sample set has " + std::to_string(inputs_.rows()) + " inputs but " +
              std::to_string(labels_.size()) + " labels");
  require(inputs_.cols() >= 1, "sample inputs need at least one coordinate");
  require(inputs_.allFinite(), "sample inputs must be finite");
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void check_query(std::span<const double> query, const SampleSet& data) {
  require(query.size() == data.dimension(), "query has dimension " + std::to_string(query.size()) +
                                                ", data has " + std::to_string(data.dimension()));
}

}  // namespace

WeightProfile knn_weights(std::span<const double> query, const SampleSet& data, std::size_t k) {
  check_query(query, data);
  const std::size_t n = data.size();
  require(k >= 1 && k <= n, "k must lie in [1, n]; got k=" + std::to_string(k) + ", n=" + std::to_string(n));

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(query, data.point(i));

  std::vector<double> scratch = dist;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
  const double kth = scratch[k - 1];

  std::size_t closer = 0;
  std::size_t tied = 0;
  for (const double d : dist) {
    if (d < kth) ++closer;
    else if (d == kth) ++tied;
  }

  const double inside = 1.0 / static_cast<double>(k);
  const double boundary = static_cast<double>(k - closer) / (static_cast<double>(tied) * static_cast<double>(k));
  WeightProfile profile{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] < kth) profile.alpha[static_cast<Eigen::Index>(i)] = inside;
    else if (dist[i] == kth) profile.alpha[static_cast<Eigen::Index>(i)] = boundary;
  }
  return profile;
}

KernelSpec::KernelSpec(KernelFamily family_, double bandwidth_) : family(family_), bandwidth(bandwidth_) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, "kernel bandwidth must be positive");
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  switch (family) {
    case KernelFamily::gaussian:
      return std::exp(-squared_distance(x, y) / (2.0 * bandwidth * bandwidth));
    case KernelFamily::laplacian: {
      double l1 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) l1 += std::abs(x[j] - y[j]);
      return std::exp(-l1 / bandwidth);
    }
  }
  return 0.0;
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "laplacian";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "laplacian") return KernelFamily::laplacian;
  throw ContractViolation("unknown kernel family '" + name + "'");
}

Eigen::MatrixXd scaled_gram(const SampleSet& data, const KernelSpec& kernel) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const double scale = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    gram(j, j) = kernel(data.point(j), data.point(j)) * scale;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(data.point(i), data.point(j)) * scale;
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Eigen::VectorXd scaled_kernel_column(std::span<const double> query, const SampleSet& data,
                                     const KernelSpec& kernel) {
  check_query(query, data);
  const auto n = static_cast<Eigen::Index>(data.size());
  const double scale = 1.0 / static_cast<double>(n);
  Eigen::VectorXd column(n);
  for (Eigen::Index i = 0; i < n; ++i) column[i] = kernel(query, data.point(i)) * scale;
  return column;
}

KrrFactorization krr_fit(const SampleSet& data, const KernelSpec& kernel, double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, "ridge parameter lambda must be positive");
  Eigen::MatrixXd system = scaled_gram(data, kernel);
  require(system.allFinite(), "kernel produced non-finite values");
  system.diagonal().array() += lambda;

  KrrFactorization fact;
  fact.lambda_ = lambda;
  fact.llt_.compute(system);
  if (fact.llt_.info() != Eigen::Success) {
    throw std::runtime_error("Cholesky factorization of the regularized Gram matrix failed");
  }
  return fact;
}

Eigen::VectorXd KrrFactorization::solve(const Eigen::VectorXd& rhs) const {
  require(static_cast<std::size_t>(rhs.size()) == size(), "right-hand side does not match the factorization");
  return llt_.solve(rhs);
}

Eigen::MatrixXd KrrFactorization::solve(const Eigen::MatrixXd& rhs) const {
  require(static_cast<std::size_t>(rhs.rows()) == size(), "right-hand side does not match the factorization");
  return llt_.solve(rhs);
}

WeightProfile krr_weights(std::span<const double> query, const KrrFactorization& fact,
                          const SampleSet& data, const KernelSpec& kernel) {
  require(fact.size() == data.size(), "factorization was built for a different sample set");
  return {fact.solve(scaled_kernel_column(query, data, kernel))};
}

Eigen::MatrixXd krr_weights_batch(const RowMatrix& queries, const KrrFactorization& fact,
                                  const SampleSet& data, const KernelSpec& kernel) {
  require(fact.size() == data.size(), "factorization was built for a different sample set");
  require(static_cast<std::size_t>(queries.cols()) == data.dimension(), "query dimension mismatch");
  Eigen::MatrixXd columns(static_cast<Eigen::Index>(data.size()), queries.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const std::span<const double> x(queries.data() + q * queries.cols(), static_cast<std::size_t>(queries.cols()));
    columns.col(q) = scaled_kernel_column(x, data, kernel);
  }
  return fact.solve(columns);
}

SignedMeasure predict_surrogate(const WeightProfile& profile, const SampleSet& data,
                                const FiniteLoss& loss) {
  require(static_cast<std::size_t>(profile.alpha.size()) == data.size(),
          "weight profile length does not match the sample set");
  SignedMeasure mu{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(loss.num_observations()))};
  const auto& labels = data.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < loss.num_observations(), "sample label out of range for the loss");
    mu.weights[static_cast<Eigen::Index>(labels[i])] += profile.alpha[static_cast<Eigen::Index>(i)];
  }
  return mu;
}

std::size_t knn_schedule(std::size_t n, double k0, double beta) {
  require(n >= 1 && k0 > 0.0 && beta > 0.0, "knn_schedule needs n >= 1, k0 > 0, beta > 0");
  const double raw = k0 * std::pow(static_cast<double>(n), 2.0 * beta / (2.0 * beta + 1.0));
  // The exponent is rarely representable, so n^{2/3} at n = 1000 comes out a
  // hair under 100. Snap values within 1e-9 relative of an integer.
  const double nearest = std::round(raw);
  const double k = std::abs(raw - nearest) <= 1e-9 * std::max(1.0, raw) ? nearest : std::floor(raw);
  return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(n)));
}

double krr_schedule(std::size_t n, double lambda0, double q, double sigma) {
  require(n >= 1 && lambda0 > 0.0 && 2.0 * q + sigma > 0.0, "krr_schedule needs n >= 1, lambda0 > 0, 2q + sigma > 0");
  return lambda0 * std::pow(static_cast<double>(n), -1.0 / (2.0 * q + sigma));
}

RowMatrix read_points_csv(std::istream& in) {
  const auto rows = detail::read_csv_rows(in);
  require(!rows.empty(), "point CSV is empty");
  const auto& header = rows.front();
  for (std::size_t c = 0; c < header.size(); ++c) {
    require(header[c] == "x_" + std::to_string(c), "point CSV header must be x_0,...,x_{d-1}");
  }
  RowMatrix points(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(header.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == header.size(), "point CSV row " + std::to_string(r + 1) + " has wrong width");
    for (std::size_t c = 0; c < header.size(); ++c) {
      points(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          detail::parse_double(rows[r][c], "row " + std::to_string(r + 1));
    }
  }
  return points;
}

SampleSet read_dataset_csv(std::istream& in, const FiniteLoss& loss) {
  const auto rows = detail::read_csv_rows(in);
  require(rows.size() >= 2, "dataset CSV needs a header and at least one row");
  const auto& header = rows.front();
  require(header.size() >= 2 && header.back() == "y", "dataset CSV header must be x_0,...,x_{d-1},y");
  const std::size_t d = header.size() - 1;
  for (std::size_t c = 0; c < d; ++c) {
    require(header[c] == "x_" + std::to_string(c), "dataset CSV header must be x_0,...,x_{d-1},y");
  }
  RowMatrix inputs(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(d));
  std::vector<std::size_t> labels;
  labels.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == header.size(), "dataset CSV row " + std::to_string(r + 1) + " has wrong width");
    for (std::size_t c = 0; c < d; ++c) {
      inputs(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          detail::parse_double(rows[r][c], "row " + std::to_string(r + 1));
    }
    labels.push_back(loss.y_index(rows[r].back()));
  }
  return SampleSet(std::move(inputs), std::move(labels));
}

SampleSet load_dataset(const std::filesystem::path& path, const FiniteLoss& loss) {
  std::ifstream in(path);
  require(in.good(), "cannot open dataset " + path.string());
  return read_dataset_csv(in, loss);
}

}  // namespace structrates
