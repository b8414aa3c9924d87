#include "sinkstat/asymptotics.hpp"

#include "sinkstat/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sinkstat {

Eigen::MatrixXd multinomial_covariance(const DiscreteMeasure& a) {
  const Eigen::VectorXd& w = a.weights();
  Eigen::MatrixXd sigma = -w * w.transpose();
  sigma.diagonal() += w;
  return sigma;
}

double multinomial_quadratic_form(const DiscreteMeasure& a, const Eigen::VectorXd& w) {
  if (w.size() != static_cast<Eigen::Index>(a.size())) {
    throw std::invalid_argument("multinomial_quadratic_form: dimension mismatch");
  }
  // Centering first keeps the subtraction well conditioned.
  const double mean = a.weights().dot(w);
  const double var = a.weights().dot((w.array() - mean).square().matrix());
  return std::max(var, 0.0);
}

namespace {

void require_tangent(const Eigen::VectorXd& h, const char* name) {
  const double scale = 1.0 + h.lpNorm<1>();
  if (std::abs(h.sum()) > 1e-10 * scale) {
    throw std::invalid_argument(std::string("directional_derivative: ") + name +
                                " must sum to zero");
  }
}

Eigen::VectorXd restrict_to_support(const Eigen::VectorXd& potential, const DiscreteMeasure& m) {
  return (m.weights().array() > 0.0).select(potential, 0.0);
}

}  // namespace

double directional_derivative(const SinkhornSolution& sol, const Eigen::VectorXd& h1,
                              const Eigen::VectorXd& h2) {
  if (h1.size() != sol.alpha.size() || h2.size() != sol.beta.size()) {
    throw std::invalid_argument("directional_derivative: dimension mismatch");
  }
  require_tangent(h1, "h1");
  require_tangent(h2, "h2");
  return sol.alpha.dot(h1) + sol.beta.dot(h2);
}

double AsymptoticLaw::stddev() const { return std::sqrt(variance); }

AsymptoticLaw asymptotic_law(const SinkhornSolution& sol, const DiscreteMeasure& a,
                             const DiscreteMeasure* b, std::optional<double> gamma) {
  if (!sol.converged) throw std::invalid_argument("asymptotic_law: solution did not converge");
  if (sol.alpha.size() != static_cast<Eigen::Index>(a.size())) {
    throw std::invalid_argument("asymptotic_law: dimension mismatch");
  }
  AsymptoticLaw law;
  law.weight_a = restrict_to_support(sol.alpha, a);
  const double var_a = multinomial_quadratic_form(a, law.weight_a);
  if (b == nullptr) {
    law.kind = LawKind::OneSample;
    law.variance = var_a;
    return law;
  }
  if (!gamma || !(*gamma > 0.0 && *gamma < 1.0)) {
    throw std::invalid_argument("asymptotic_law: two-sample law needs gamma in (0, 1)");
  }
  if (sol.beta.size() != static_cast<Eigen::Index>(b->size())) {
    throw std::invalid_argument("asymptotic_law: dimension mismatch");
  }
  law.kind = LawKind::TwoSample;
  law.gamma = gamma;
  law.weight_b = restrict_to_support(sol.beta, *b);
  const double var_b = multinomial_quadratic_form(*b, *law.weight_b);
  law.variance = *gamma * var_a + (1.0 - *gamma) * var_b;
  return law;
}

std::vector<double> sample_limit(const AsymptoticLaw& law, std::size_t count, std::uint64_t seed) {
  std::vector<double> out(count, 0.0);
  if (law.variance <= 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, law.stddev());
  for (auto& x : out) x = normal(rng);
  return out;
}

double rho(std::int64_t n, std::int64_t m) {
  if (n < 1 || m < 1) throw std::invalid_argument("rho: sample sizes must be >= 1");
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  return std::sqrt(nd * md / (nd + md));
}

}  // namespace sinkstat
