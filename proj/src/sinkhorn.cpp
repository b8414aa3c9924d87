#include "sinkstat/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sinkstat {

void SolverConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("SolverConfig: lambda must be positive and finite");
  }
  if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
  if (!(gap_tol > 0.0)) throw std::invalid_argument("SolverConfig: gap_tol must be positive");
  if (!(absorb_threshold > 0.0)) {
    throw std::invalid_argument("SolverConfig: absorb_threshold must be positive");
  }
}

Eigen::MatrixXd kernel_matrix(const CostMatrix& cost, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("kernel_matrix: lambda must be positive");
  return (-cost.entries().array() / lambda).exp().matrix();
}

namespace {

using Index = Eigen::Index;

// Dual objective restricted to an arbitrary rectangular block.
double dual_objective(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                      const Eigen::MatrixXd& c, double lambda) {
  // Factor the largest exponent out of the sum so that it never overflows.
  double top = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) top = std::max(top, alpha[i] + beta[j] - c(i, j));
  }
  double acc = 0.0;
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) acc += std::exp((alpha[i] + beta[j] - c(i, j) - top) / lambda);
  }
  const double penalty = lambda * std::exp(top / lambda + std::log(acc));
  return alpha.dot(a) + beta.dot(b) - penalty;
}

// lambda * log sum_k exp(x_k / lambda)
template <typename Vec>
double soft_max(const Vec& x, double lambda) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + lambda * std::log(((x.array() - m) / lambda).exp().sum());
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& c, const std::vector<Index>& rows,
                          const std::vector<Index>& cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t l = 0; l < cols.size(); ++l) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out(static_cast<Index>(k), static_cast<Index>(l)) = c(rows[k], cols[l]);
    }
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = x[idx[k]];
  return out;
}

struct FullPotentials {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

// Shifts the support potentials so that they sum to zero over supp(a) and
// extends both vectors to every point by the soft c-transform of the other.
FullPotentials normalize_and_extend(Eigen::VectorXd alpha_s, Eigen::VectorXd beta_s,
                                    const std::vector<Index>& rows, const std::vector<Index>& cols,
                                    const Eigen::MatrixXd& c, double lambda) {
  const double shift = alpha_s.mean();
  alpha_s.array() -= shift;
  beta_s.array() += shift;

  const Index n = c.rows();
  FullPotentials out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  std::vector<bool> in_rows(static_cast<std::size_t>(n), false);
  std::vector<bool> in_cols(static_cast<std::size_t>(n), false);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.alpha[rows[k]] = alpha_s[static_cast<Index>(k)];
    in_rows[static_cast<std::size_t>(rows[k])] = true;
  }
  for (std::size_t l = 0; l < cols.size(); ++l) {
    out.beta[cols[l]] = beta_s[static_cast<Index>(l)];
    in_cols[static_cast<std::size_t>(cols[l])] = true;
  }

  Eigen::VectorXd work;
  for (Index i = 0; i < n; ++i) {
    if (in_rows[static_cast<std::size_t>(i)]) continue;
    work.resize(static_cast<Index>(cols.size()));
    for (std::size_t l = 0; l < cols.size(); ++l) {
      work[static_cast<Index>(l)] = beta_s[static_cast<Index>(l)] - c(i, cols[l]);
    }
    out.alpha[i] = -soft_max(work, lambda);
  }
  for (Index j = 0; j < n; ++j) {
    if (in_cols[static_cast<std::size_t>(j)]) continue;
    work.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      work[static_cast<Index>(k)] = alpha_s[static_cast<Index>(k)] - c(rows[k], j);
    }
    out.beta[j] = -soft_max(work, lambda);
  }
  return out;
}

void check_dims(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost) {
  if (a.size() != cost.size() || b.size() != cost.size()) {
    throw std::invalid_argument("sinkhorn: measure and cost dimensions differ");
  }
}

SinkhornSolution solve_impl(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const CostMatrix& cost, const SolverConfig& cfg,
                            const Eigen::VectorXd* initial_beta) {
  cfg.validate();
  check_dims(a, b, cost);
  const double lam = cfg.lambda;
  const auto rows = a.support();
  const auto cols = b.support();
  const Eigen::MatrixXd cs = submatrix(cost.entries(), rows, cols);
  const Eigen::VectorXd as = gather(a.weights(), rows);
  const Eigen::VectorXd bs = gather(b.weights(), cols);
  const Index ns = cs.rows();
  const Index ms = cs.cols();
  const Eigen::ArrayXd log_as = as.array().log();
  const Eigen::ArrayXd log_bs = bs.array().log();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(ms);
  if (initial_beta != nullptr) {
    if (initial_beta->size() != static_cast<Index>(cost.size()) || !initial_beta->allFinite()) {
      throw std::invalid_argument("sinkhorn_solve: initial beta must be finite with length N");
    }
    beta = gather(*initial_beta, cols);
  }

  Eigen::MatrixXd kern(ns, ms);
  // Entries below e^-600 are stored as zero; keeping them would only feed
  // subnormal products into the matrix-vector loop.
  constexpr double kFlushExponent = -600.0;
  auto rebuild = [&] {
    for (Index j = 0; j < ms; ++j) {
      const Eigen::ArrayXd expo = (alpha.array() + beta[j] - cs.col(j).array()) / lam;
      kern.col(j) = (expo < kFlushExponent).select(0.0, expo.exp());
    }
  };
  Eigen::VectorXd work;
  auto exact_alpha = [&] {
    for (Index i = 0; i < ns; ++i) {
      work = beta - cs.row(i).transpose();
      alpha[i] = lam * log_as[i] - soft_max(work, lam);
    }
  };
  auto exact_beta = [&] {
    for (Index j = 0; j < ms; ++j) {
      work = alpha - cs.col(j);
      beta[j] = lam * log_bs[j] - soft_max(work, lam);
    }
  };

  Eigen::VectorXd u = Eigen::VectorXd::Ones(ns);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(ms);
  auto absorb = [&](bool take_u, bool take_v) {
    if (take_u) alpha.array() += lam * u.array().log();
    if (take_v) beta.array() += lam * v.array().log();
    u.setOnes();
    v.setOnes();
  };
  auto usable = [](const Eigen::VectorXd& s) {
    return s.allFinite() && (s.array() > 0.0).all();
  };

  const double hi = std::exp(cfg.absorb_threshold);
  const double lo = 1.0 / hi;
  exact_alpha();
  rebuild();

  Eigen::VectorXd ktu(ms);
  Eigen::VectorXd kv(ns);
  bool converged = false;
  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    ktu.noalias() = kern.transpose() * u;
    v = bs.array() / ktu.array();
    if (!usable(v)) {
      absorb(true, false);
      exact_beta();
      rebuild();
    }
    kv.noalias() = kern * v;
    const double row_err = (u.array() * kv.array() - as.array()).abs().sum();
    if (row_err <= cfg.tol) {
      // Column marginals are exact here, so primal - dual reduces to
      // <alpha + lambda log u, T1 - a>.
      const Eigen::ArrayXd log_u = u.array().log();
      const Eigen::ArrayXd pot_a = alpha.array() + lam * log_u;
      const Eigen::ArrayXd pot_b = beta.array() + lam * v.array().log();
      const double gap = (pot_a * (u.array() * kv.array() - as.array())).sum();
      const double value = (pot_a * as.array()).sum() + (pot_b * bs.array()).sum();
      if (std::abs(gap) <= cfg.gap_tol * (1.0 + std::abs(value))) {
        converged = true;
        break;
      }
    }
    u = as.array() / kv.array();
    if (!usable(u)) {
      absorb(false, true);
      exact_alpha();
      rebuild();
      continue;
    }
    const bool out_of_range = u.maxCoeff() > hi || u.minCoeff() < lo || v.maxCoeff() > hi ||
                              v.minCoeff() < lo;
    if (out_of_range) {
      absorb(true, true);
      rebuild();
    }
  }
  absorb(true, true);

  auto full = normalize_and_extend(alpha, beta, rows, cols, cost.entries(), lam);
  alpha = gather(full.alpha, rows);
  beta = gather(full.beta, cols);

  SinkhornSolution sol;
  sol.lambda = lam;
  sol.iterations = it;
  sol.converged = converged;
  const Index n = static_cast<Index>(cost.size());
  sol.plan = Eigen::MatrixXd::Zero(n, n);
  double transport = 0.0;
  double neg_entropy = 0.0;
  for (Index l = 0; l < ms; ++l) {
    for (Index k = 0; k < ns; ++k) {
      const double expo = (alpha[k] + beta[l] - cs(k, l)) / lam;
      const double t = std::exp(expo);
      sol.plan(rows[static_cast<std::size_t>(k)], cols[static_cast<std::size_t>(l)]) = t;
      if (t > 0.0) {
        transport += t * cs(k, l);
        neg_entropy += t * std::log(t);
      }
    }
  }
  const double err_rows = (sol.plan.rowwise().sum() - a.weights()).lpNorm<1>();
  const double err_cols = (sol.plan.colwise().sum().transpose() - b.weights()).lpNorm<1>();
  sol.marginal_err = std::max(err_rows, err_cols);
  if (sol.marginal_err > cfg.tol) sol.converged = false;
  sol.primal = transport + lam * neg_entropy;
  sol.dual = dual_objective(as, bs, alpha, beta, cs, lam) + lam;
  sol.alpha = std::move(full.alpha);
  sol.beta = std::move(full.beta);
  sol.log_u = sol.alpha / lam;
  sol.log_v = sol.beta / lam;
  return sol;
}

}  // namespace

SinkhornSolution sinkhorn_solve(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostMatrix& cost, const SolverConfig& cfg) {
  return solve_impl(a, b, cost, cfg, nullptr);
}

SinkhornSolution sinkhorn_solve(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostMatrix& cost, const SolverConfig& cfg,
                                const Eigen::VectorXd& initial_beta) {
  return solve_impl(a, b, cost, cfg, &initial_beta);
}

double eval_dual_objective(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                           const CostMatrix& cost, double lambda) {
  const auto n = static_cast<Index>(cost.size());
  if (a.size() != n || b.size() != n || alpha.size() != n || beta.size() != n) {
    throw std::invalid_argument("eval_dual_objective: dimension mismatch");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("eval_dual_objective: lambda must be positive");
  return dual_objective(a, b, alpha, beta, cost.entries(), lambda);
}

double sinkhorn_divergence(const DiscreteMeasure& a, const DiscreteMeasure& b,
                           const CostMatrix& cost, const SolverConfig& cfg) {
  const auto sol = sinkhorn_solve(a, b, cost, cfg);
  if (!sol.converged) {
    throw ConvergenceError("sinkhorn_divergence: no convergence after " +
                           std::to_string(sol.iterations) + " iterations (marginal error " +
                           std::to_string(sol.marginal_err) + ")");
  }
  return sol.dual;
}

double sinkhorn_loss(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost,
                     const SolverConfig& cfg) {
  return 2.0 * sinkhorn_divergence(a, b, cost, cfg) - sinkhorn_divergence(a, a, cost, cfg) -
         sinkhorn_divergence(b, b, cost, cfg);
}

void normalize_potentials(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const CostMatrix& cost, double lambda, Eigen::VectorXd& alpha,
                          Eigen::VectorXd& beta) {
  check_dims(a, b, cost);
  const auto rows = a.support();
  const auto cols = b.support();
  auto full = normalize_and_extend(gather(alpha, rows), gather(beta, cols), rows, cols,
                                   cost.entries(), lambda);
  alpha = std::move(full.alpha);
  beta = std::move(full.beta);
}

}  // namespace sinkstat
