#include "sinkstat/inference.hpp"

#include "sinkstat/asymptotics.hpp"
#include "sinkstat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sinkstat {

void TestConfig::validate() const {
  solver.validate();
  if (replicates < 1) throw std::invalid_argument("TestConfig: replicates must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("TestConfig: level must be in (0, 1)");
}

namespace {

SinkhornSolution solve_converged(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                 const CostMatrix& cost, const SolverConfig& cfg) {
  auto sol = sinkhorn_solve(a, b, cost, cfg);
  if (!sol.converged) {
    throw ConvergenceError("solver did not converge (marginal error " +
                           std::to_string(sol.marginal_err) + ")");
  }
  return sol;
}

void finish_report(TestReport& report, std::vector<std::optional<double>>& slots, double level) {
  report.requested_replicates = static_cast<int>(slots.size());
  report.bootstrap_stats.clear();
  for (const auto& s : slots) {
    if (s) report.bootstrap_stats.push_back(*s);
  }
  if (report.bootstrap_stats.empty()) {
    throw ConvergenceError("bootstrap: every replicate failed to converge");
  }
  report.converged_fraction =
      static_cast<double>(report.bootstrap_stats.size()) / static_cast<double>(slots.size());
  report.p_value = counting_p_value(report.bootstrap_stats, report.statistic);
  report.ci_low = sample_quantile(report.bootstrap_stats, level / 2.0);
  report.ci_high = sample_quantile(report.bootstrap_stats, 1.0 - level / 2.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double one_sample_statistic(const EmpiricalMeasure& a_hat, const DiscreteMeasure& reference,
                            const DiscreteMeasure& center, const CostMatrix& cost,
                            const SolverConfig& cfg) {
  const double root_n = std::sqrt(static_cast<double>(a_hat.sample_size()));
  return root_n * (sinkhorn_divergence(a_hat.measure(), reference, cost, cfg) -
                   sinkhorn_divergence(center, reference, cost, cfg));
}

double two_sample_statistic(const EmpiricalMeasure& a_hat, const EmpiricalMeasure& b_hat,
                            const DiscreteMeasure& a_ref, const DiscreteMeasure& b_ref,
                            const CostMatrix& cost, const SolverConfig& cfg) {
  return rho(a_hat.sample_size(), b_hat.sample_size()) *
         (sinkhorn_divergence(a_hat.measure(), b_hat.measure(), cost, cfg) -
          sinkhorn_divergence(a_ref, b_ref, cost, cfg));
}

double counting_p_value(std::span<const double> bootstrap, double observed) {
  if (bootstrap.empty()) throw std::invalid_argument("counting_p_value: no replicates");
  const double threshold = std::abs(observed);
  const auto hits = std::count_if(bootstrap.begin(), bootstrap.end(),
                                  [threshold](double s) { return std::abs(s) >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(bootstrap.size());
}

double sample_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_quantile: q must be in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TestReport bootstrap_test_one(const EmpiricalMeasure& a_hat, const DiscreteMeasure& reference,
                              const DiscreteMeasure& center, const CostMatrix& cost,
                              const TestConfig& tc) {
  tc.validate();
  const double root_n = std::sqrt(static_cast<double>(a_hat.sample_size()));
  const auto observed = solve_converged(a_hat.measure(), reference, cost, tc.solver);
  const double d_center = sinkhorn_divergence(center, reference, cost, tc.solver);

  TestReport report;
  report.statistic = root_n * (observed.dual - d_center);
  report.asymptotic_variance = asymptotic_law(observed, a_hat.measure()).variance;

  std::vector<std::optional<double>> slots(static_cast<std::size_t>(tc.replicates));
  parallel_for(slots.size(), [&](std::size_t j) {
    const auto star = bootstrap_resample(a_hat, derive_seed(tc.seed, j));
    const auto sol = sinkhorn_solve(star.measure(), reference, cost, tc.solver, observed.beta);
    if (sol.converged) slots[j] = root_n * (sol.dual - observed.dual);
  });
  finish_report(report, slots, tc.level);
  return report;
}

TestReport bootstrap_test_two(const EmpiricalMeasure& a_hat, const EmpiricalMeasure& b_hat,
                              const DiscreteMeasure& a_ref, const DiscreteMeasure& b_ref,
                              const CostMatrix& cost, const TestConfig& tc) {
  tc.validate();
  const double scale = rho(a_hat.sample_size(), b_hat.sample_size());
  const auto observed = solve_converged(a_hat.measure(), b_hat.measure(), cost, tc.solver);
  const double d_ref = sinkhorn_divergence(a_ref, b_ref, cost, tc.solver);

  TestReport report;
  report.statistic = scale * (observed.dual - d_ref);
  const double n = static_cast<double>(a_hat.sample_size());
  const double m = static_cast<double>(b_hat.sample_size());
  report.asymptotic_variance =
      asymptotic_law(observed, a_hat.measure(), &b_hat.measure(), m / (n + m)).variance;

  std::vector<std::optional<double>> slots(static_cast<std::size_t>(tc.replicates));
  parallel_for(slots.size(), [&](std::size_t j) {
    const auto a_star = bootstrap_resample(a_hat, derive_seed(tc.seed, 2 * j));
    const auto b_star = bootstrap_resample(b_hat, derive_seed(tc.seed, 2 * j + 1));
    const auto sol =
        sinkhorn_solve(a_star.measure(), b_star.measure(), cost, tc.solver, observed.beta);
    if (sol.converged) slots[j] = scale * (sol.dual - observed.dual);
  });
  finish_report(report, slots, tc.level);
  return report;
}

std::vector<PowerPoint> power_curve(const DiscreteMeasure& a, const CostMatrix& cost,
                                    const PowerConfig& pc) {
  if (pc.repeats < 1) throw std::invalid_argument("power_curve: repeats must be >= 1");
  if (pc.sample_size < 1) throw std::invalid_argument("power_curve: sample size must be >= 1");
  std::vector<EmpiricalMeasure> draws;
  draws.reserve(static_cast<std::size_t>(pc.repeats));
  for (int r = 0; r < pc.repeats; ++r) {
    draws.push_back(sample_empirical(a, pc.sample_size, derive_seed(pc.seed, 2 * r)));
  }

  std::vector<PowerPoint> out;
  for (double lambda : pc.lambdas) {
    for (double theta : pc.thetas) {
      const auto b = linear_trend_measure(a.size(), theta);
      TestConfig tc;
      tc.solver = pc.solver;
      tc.solver.lambda = lambda;
      tc.replicates = pc.replicates;
      tc.level = pc.level;
      PowerPoint pt{theta, lambda, 0.0, 0, pc.repeats};
      for (int r = 0; r < pc.repeats; ++r) {
        tc.seed = derive_seed(pc.seed, 2 * r + 1);
        const auto report = bootstrap_test_one(draws[static_cast<std::size_t>(r)], b, a, cost, tc);
        if (report.p_value <= pc.level) ++pt.rejections;
      }
      pt.power = static_cast<double>(pt.rejections) / static_cast<double>(pc.repeats);
      out.push_back(pt);
    }
  }
  return out;
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto m = samples.size();
  if (m < 2) throw std::invalid_argument("silverman_bandwidth: need at least two samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("silverman_bandwidth: samples have zero variance");
  const double iqr = sample_quantile(samples, 0.75) - sample_quantile(samples, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

std::vector<double> kde(std::span<const double> samples, std::span<const double> points) {
  const double h = silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out;
  out.reserve(points.size());
  for (double x : points) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (x - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.push_back(acc * norm);
  }
  return out;
}

double ks_distance_normal(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks_distance_normal: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

double ks_distance(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double t = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= t) ++i;
    while (j < ys.size() && ys[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

}  // namespace sinkstat
