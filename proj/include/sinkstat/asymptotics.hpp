#pragma once

#include "sinkstat/measures.hpp"
#include "sinkstat/sinkhorn.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace sinkstat {

/// Covariance of n * (empirical frequencies) / sqrt(n) under multinomial sampling:
/// diag(a) - a a^T.
Eigen::MatrixXd multinomial_covariance(const DiscreteMeasure& a);

/// w^T Sigma(a) w computed as the variance of w under a.
double multinomial_quadratic_form(const DiscreteMeasure& a, const Eigen::VectorXd& w);

/// <alpha, h1> + <beta, h2> for directions tangent to the simplex.
/// Throws std::invalid_argument when a direction does not sum to zero.
double directional_derivative(const SinkhornSolution& sol, const Eigen::VectorXd& h1,
                              const Eigen::VectorXd& h2);

enum class LawKind { OneSample, TwoSample };

/// Centered Gaussian limit of the empirical divergence statistics.
struct AsymptoticLaw {
  LawKind kind = LawKind::OneSample;
  double variance = 0.0;
  /// lambda * log u on supp(a), zero elsewhere.
  Eigen::VectorXd weight_a;
  std::optional<Eigen::VectorXd> weight_b;
  std::optional<double> gamma;

  double stddev() const;
};

/// One-sample law when b is absent, otherwise the two-sample law with
/// variance gamma * w_a' Sigma(a) w_a + (1 - gamma) * w_b' Sigma(b) w_b.
/// Throws std::invalid_argument for a non-converged solution or gamma outside (0, 1).
AsymptoticLaw asymptotic_law(const SinkhornSolution& sol, const DiscreteMeasure& a,
                             const DiscreteMeasure* b = nullptr,
                             std::optional<double> gamma = std::nullopt);

std::vector<double> sample_limit(const AsymptoticLaw& law, std::size_t count, std::uint64_t seed);

/// sqrt(n m / (n + m)).
double rho(std::int64_t n, std::int64_t m);

}  // namespace sinkstat
