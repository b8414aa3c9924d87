#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sinkstat {

/// Finite set of points in R^d, one point per row of `points()`.
/// The row order is the support ordering used by every measure on the space.
class FiniteSpace {
 public:
  explicit FiniteSpace(Eigen::MatrixXd points);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  Eigen::Index dim() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }

 private:
  Eigen::MatrixXd points_;
};

/// Probability vector on a fixed finite support.
class DiscreteMeasure {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws std::invalid_argument unless the weights are finite, nonnegative
  /// and sum to one within kSumTolerance.
  explicit DiscreteMeasure(Eigen::VectorXd weights);

  /// Divides by the total mass first. Throws if the total is not positive.
  static DiscreteMeasure normalized(Eigen::VectorXd mass);

  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }

  /// Indices with strictly positive mass, increasing.
  std::vector<Eigen::Index> support() const;
  bool is_interior() const { return (weights_.array() > 0.0).all(); }

 private:
  Eigen::VectorXd weights_;
};

/// Square matrix of nonnegative transport costs c_ij = d(x_i, x_j)^p.
class CostMatrix {
 public:
  CostMatrix(Eigen::MatrixXd entries, double exponent);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double exponent() const { return exponent_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
  double exponent_;
};

/// Multinomial draw summarized by counts; weights() = counts / n.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<std::int64_t> counts);

  std::int64_t sample_size() const { return n_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const DiscreteMeasure& measure() const { return measure_; }
  const Eigen::VectorXd& weights() const { return measure_.weights(); }
  std::size_t size() const { return counts_.size(); }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t n_;
  DiscreteMeasure measure_;
};

/// Regular grid with unit spacing and integer coordinates starting at 1.
/// Points are listed in row-major order (last coordinate varies fastest).
FiniteSpace make_grid(std::span<const int> extents);
FiniteSpace make_grid(int p, int d = 2);

CostMatrix squared_euclidean_cost(const FiniteSpace& space);

DiscreteMeasure uniform_measure(std::size_t n);

/// weights_i proportional to 1 + theta * i for i = 1..n.
DiscreteMeasure linear_trend_measure(std::size_t n, double theta);

/// Uniform weights on the support of `m`, zero elsewhere.
DiscreteMeasure uniform_on_support(const DiscreteMeasure& m);

/// Multinomial counts with probabilities `weights`, drawn coordinate by
/// coordinate through conditional binomials.
std::vector<std::int64_t> multinomial_counts(const Eigen::VectorXd& weights, std::int64_t n,
                                             std::uint64_t seed);

EmpiricalMeasure sample_empirical(const DiscreteMeasure& a, std::int64_t n, std::uint64_t seed);

/// Resamples n points from the empirical distribution itself.
EmpiricalMeasure bootstrap_resample(const EmpiricalMeasure& a_hat, std::uint64_t seed);

DiscreteMeasure euclidean_barycenter(std::span<const DiscreteMeasure> measures);

}  // namespace sinkstat
