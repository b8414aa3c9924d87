#pragma once

#include "sinkstat/measures.hpp"
#include "sinkstat/sinkhorn.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sinkstat {

struct TestConfig {
  SolverConfig solver;
  /// Bootstrap replicates M.
  int replicates = 1000;
  double level = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TestReport {
  double statistic = 0.0;
  /// Replicates kept after dropping non-converged solves, in replicate order.
  std::vector<double> bootstrap_stats;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// Plug-in variance of the Gaussian limit evaluated at the observed measures.
  std::optional<double> asymptotic_variance;
  double converged_fraction = 1.0;
  int requested_replicates = 0;
};

/// sqrt(n) * (d(a_hat, reference) - d(center, reference)).
/// `center` is the population measure in simulations and the reference itself
/// for data. Throws ConvergenceError when a solve fails.
double one_sample_statistic(const EmpiricalMeasure& a_hat, const DiscreteMeasure& reference,
                            const DiscreteMeasure& center, const CostMatrix& cost,
                            const SolverConfig& cfg);

/// rho(n, m) * (d(a_hat, b_hat) - d(a_ref, b_ref)).
double two_sample_statistic(const EmpiricalMeasure& a_hat, const EmpiricalMeasure& b_hat,
                            const DiscreteMeasure& a_ref, const DiscreteMeasure& b_ref,
                            const CostMatrix& cost, const SolverConfig& cfg);

/// #{j : |boot_j| >= |observed|} / M. An empty replicate set throws.
double counting_p_value(std::span<const double> bootstrap, double observed);

/// Linear-interpolation sample quantile (R type 7), q in [0, 1].
double sample_quantile(std::span<const double> values, double q);

/// Bootstrap of sqrt(n) (d(a*, reference) - d(a_hat, reference)), with the
/// observed statistic centered at d(center, reference).
TestReport bootstrap_test_one(const EmpiricalMeasure& a_hat, const DiscreteMeasure& reference,
                              const DiscreteMeasure& center, const CostMatrix& cost,
                              const TestConfig& tc);

/// Paired bootstrap of rho(n, m) (d(a*, b*) - d(a_hat, b_hat)), observed
/// statistic centered at d(a_ref, b_ref).
TestReport bootstrap_test_two(const EmpiricalMeasure& a_hat, const EmpiricalMeasure& b_hat,
                              const DiscreteMeasure& a_ref, const DiscreteMeasure& b_ref,
                              const CostMatrix& cost, const TestConfig& tc);

struct PowerConfig {
  std::vector<double> thetas;
  std::vector<double> lambdas;
  std::int64_t sample_size = 1000;
  int replicates = 1000;
  int repeats = 100;
  double level = 0.05;
  std::uint64_t seed = 0;
  /// lambda is overwritten per grid point.
  SolverConfig solver;
};

struct PowerPoint {
  double theta = 0.0;
  double lambda = 0.0;
  double power = 0.0;
  int rejections = 0;
  int repeats = 0;

  bool operator==(const PowerPoint&) const = default;
};

/// Rejection rate of the one-sample bootstrap test of a_hat ~ a against the
/// linear-trend reference for every (theta, lambda). Repeat r draws the same
/// a_hat for every grid point.
std::vector<PowerPoint> power_curve(const DiscreteMeasure& a, const CostMatrix& cost,
                                    const PowerConfig& pc);

/// 0.9 * min(sd, IQR / 1.34) * M^(-1/5); falls back to sd when the IQR is 0.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate with the Silverman bandwidth.
/// Throws std::invalid_argument for fewer than two samples or zero variance.
std::vector<double> kde(std::span<const double> samples, std::span<const double> points);

/// Kolmogorov-Smirnov distance between the empirical CDF and N(0, 1).
double ks_distance_normal(std::span<const double> samples);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::span<const double> x, std::span<const double> y);

}  // namespace sinkstat
