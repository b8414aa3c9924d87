#include "sinkstat/measures.hpp"

#include "sinkstat/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sinkstat {

FiniteSpace::FiniteSpace(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw std::invalid_argument("FiniteSpace: need at least one point");
  if (!points_.allFinite()) throw std::invalid_argument("FiniteSpace: non-finite coordinate");
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points_.rows(); ++j) {
      if (points_.row(i) == points_.row(j)) {
        throw std::invalid_argument("FiniteSpace: duplicate point at rows " + std::to_string(i) +
                                    " and " + std::to_string(j));
      }
    }
  }
}

DiscreteMeasure::DiscreteMeasure(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("DiscreteMeasure: empty weight vector");
  if (!weights_.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite weight");
  if ((weights_.array() < 0.0).any()) throw std::invalid_argument("DiscreteMeasure: negative weight");
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total));
  }
}

DiscreteMeasure DiscreteMeasure::normalized(Eigen::VectorXd mass) {
  if (mass.size() < 1 || !mass.allFinite() || (mass.array() < 0.0).any()) {
    throw std::invalid_argument("DiscreteMeasure::normalized: invalid mass vector");
  }
  const double total = mass.sum();
  if (!(total > 0.0)) throw std::invalid_argument("DiscreteMeasure::normalized: zero total mass");
  mass /= total;
  return DiscreteMeasure(std::move(mass));
}

std::vector<Eigen::Index> DiscreteMeasure::support() const {
  std::vector<Eigen::Index> idx;
  idx.reserve(size());
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

CostMatrix::CostMatrix(Eigen::MatrixXd entries, double exponent)
    : entries_(std::move(entries)), exponent_(exponent) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("CostMatrix: must be square and nonempty");
  }
  if (!entries_.allFinite()) throw std::invalid_argument("CostMatrix: non-finite entry");
  if ((entries_.array() < 0.0).any()) throw std::invalid_argument("CostMatrix: negative entry");
  if (!(exponent_ > 0.0)) throw std::invalid_argument("CostMatrix: exponent must be positive");
}

namespace {

Eigen::VectorXd counts_to_weights(const std::vector<std::int64_t>& counts, std::int64_t n) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]) / static_cast<double>(n);
  }
  return w;
}

std::int64_t checked_total(const std::vector<std::int64_t>& counts) {
  if (counts.empty()) throw std::invalid_argument("EmpiricalMeasure: empty counts");
  std::int64_t n = 0;
  for (auto c : counts) {
    if (c < 0) throw std::invalid_argument("EmpiricalMeasure: negative count");
    n += c;
  }
  if (n < 1) throw std::invalid_argument("EmpiricalMeasure: sample size must be positive");
  return n;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<std::int64_t> counts)
    : counts_(std::move(counts)),
      n_(checked_total(counts_)),
      measure_(counts_to_weights(counts_, n_)) {}

FiniteSpace make_grid(std::span<const int> extents) {
  if (extents.empty()) throw std::invalid_argument("make_grid: need at least one dimension");
  Eigen::Index total = 1;
  for (int e : extents) {
    if (e < 1) throw std::invalid_argument("make_grid: extents must be >= 1");
    total *= e;
  }
  const auto d = static_cast<Eigen::Index>(extents.size());
  Eigen::MatrixXd pts(total, d);
  std::vector<int> idx(extents.size(), 0);
  for (Eigen::Index r = 0; r < total; ++r) {
    for (Eigen::Index k = 0; k < d; ++k) pts(r, k) = idx[static_cast<std::size_t>(k)] + 1;
    for (auto k = static_cast<std::ptrdiff_t>(d) - 1; k >= 0; --k) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < extents[static_cast<std::size_t>(k)]) break;
      i = 0;
    }
  }
  return FiniteSpace(std::move(pts));
}

FiniteSpace make_grid(int p, int d) {
  if (p < 1 || d < 1) throw std::invalid_argument("make_grid: p and d must be >= 1");
  std::vector<int> extents(static_cast<std::size_t>(d), p);
  return make_grid(extents);
}

CostMatrix squared_euclidean_cost(const FiniteSpace& space) {
  const auto& x = space.points();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (x.row(i) - x.row(j)).squaredNorm();
      c(i, j) = d2;
      c(j, i) = d2;
    }
  }
  return CostMatrix(std::move(c), 2.0);
}

DiscreteMeasure uniform_measure(std::size_t n) {
  if (n < 1) throw std::invalid_argument("uniform_measure: N must be >= 1");
  return DiscreteMeasure(
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

DiscreteMeasure linear_trend_measure(std::size_t n, double theta) {
  if (n < 1) throw std::invalid_argument("linear_trend_measure: N must be >= 1");
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw std::invalid_argument("linear_trend_measure: slope must be finite and >= 0");
  }
  const double nd = static_cast<double>(n);
  const double total = nd + theta * nd * (nd + 1.0) / 2.0;
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w[i] = (1.0 + theta * static_cast<double>(i + 1)) / total;
  }
  return DiscreteMeasure(std::move(w));
}

DiscreteMeasure uniform_on_support(const DiscreteMeasure& m) {
  Eigen::VectorXd w = (m.weights().array() > 0.0).cast<double>();
  return DiscreteMeasure::normalized(std::move(w));
}

std::vector<std::int64_t> multinomial_counts(const Eigen::VectorXd& weights, std::int64_t n,
                                             std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("multinomial_counts: n must be >= 1");
  Rng rng(seed);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(weights.size()), 0);
  Eigen::Index last_positive = -1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
  }
  std::int64_t left = n;
  double mass_left = 1.0;
  for (Eigen::Index i = 0; i <= last_positive && left > 0; ++i) {
    const double w = weights[i];
    if (w <= 0.0) continue;
    std::int64_t c = left;
    if (i != last_positive && w < mass_left) {
      std::binomial_distribution<std::int64_t> bin(left, w / mass_left);
      c = bin(rng);
    }
    counts[static_cast<std::size_t>(i)] = c;
    left -= c;
    mass_left -= w;
  }
  return counts;
}

EmpiricalMeasure sample_empirical(const DiscreteMeasure& a, std::int64_t n, std::uint64_t seed) {
  return EmpiricalMeasure(multinomial_counts(a.weights(), n, seed));
}

EmpiricalMeasure bootstrap_resample(const EmpiricalMeasure& a_hat, std::uint64_t seed) {
  return EmpiricalMeasure(multinomial_counts(a_hat.weights(), a_hat.sample_size(), seed));
}

DiscreteMeasure euclidean_barycenter(std::span<const DiscreteMeasure> measures) {
  if (measures.empty()) throw std::invalid_argument("euclidean_barycenter: empty list");
  const auto n = measures.front().size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& m : measures) {
    if (m.size() != n) throw std::invalid_argument("euclidean_barycenter: support size mismatch");
    acc += m.weights();
  }
  acc /= static_cast<double>(measures.size());
  return DiscreteMeasure(std::move(acc));
}

}  // namespace sinkstat
