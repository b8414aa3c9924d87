#pragma once

#include "sinkstat/measures.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sinkstat {

struct SolverConfig {
  double lambda = 1.0;
  int max_iter = 100000;
  /// L1 tolerance on both marginals of the plan.
  double tol = 1e-9;
  /// Relative duality-gap tolerance, |primal - dual| <= gap_tol * (1 + |dual|),
  /// required in addition to the marginal tolerance.
  double gap_tol = 1e-8;
  /// Scalings u, v are folded into the potentials once |log u| or |log v|
  /// exceeds this value.
  double absorb_threshold = 30.0;

  /// Throws std::invalid_argument on a non-positive field.
  void validate() const;
};

/// Thrown by the value-returning wrappers when a solve does not converge.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Result of an entropic transport solve.
///
/// The plan satisfies T_ij = exp((alpha_i + beta_j - c_ij) / lambda) on the
/// support of (a, b) and is zero elsewhere. Potentials are fixed by
/// sum_{i in supp(a)} alpha_i = 0. The scalings of T = diag(u) K diag(v) are
/// stored as logarithms, log_u = alpha / lambda and log_v = beta / lambda,
/// since u and v themselves overflow for small lambda.
struct SinkhornSolution {
  double lambda = 0.0;
  Eigen::MatrixXd plan;
  Eigen::VectorXd log_u;
  Eigen::VectorXd log_v;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  /// <T, C> - lambda * h(T), with h(T) = -sum T log T.
  double primal = 0.0;
  /// Dual objective of the same problem at (alpha, beta); equals primal at
  /// the optimum.
  double dual = 0.0;
  int iterations = 0;
  /// max(||T 1 - a||_1, ||T^T 1 - b||_1).
  double marginal_err = 0.0;
  bool converged = false;

  Eigen::VectorXd u() const { return log_u.array().exp(); }
  Eigen::VectorXd v() const { return log_v.array().exp(); }
};

/// K_ij = exp(-c_ij / lambda).
Eigen::MatrixXd kernel_matrix(const CostMatrix& cost, double lambda);

/// Alternating Sinkhorn scaling in the log domain.
///
/// Potentials are the primary state; the iteration multiplies a stabilized
/// kernel exp((alpha_i + beta_j - c_ij)/lambda) by scalings u, v and absorbs
/// those into the potentials when they leave [e^-t, e^t]. Rows and columns
/// with zero mass are excluded. Non-convergence is reported through
/// `converged`, never thrown. Non-finite inputs throw std::invalid_argument.
SinkhornSolution sinkhorn_solve(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostMatrix& cost, const SolverConfig& cfg);

/// Same, starting from the given column potential instead of beta = 0.
/// Only the entries on the support of b are used.
SinkhornSolution sinkhorn_solve(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                const CostMatrix& cost, const SolverConfig& cfg,
                                const Eigen::VectorXd& initial_beta);

/// f(a, b, alpha, beta) = alpha.a + beta.b - lambda * sum_ij exp((alpha_i + beta_j - c_ij)/lambda),
/// summed over every (i, j). Its maximum over (alpha, beta) is p_lambda(a, b) - lambda.
double eval_dual_objective(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                           const CostMatrix& cost, double lambda);

/// Converged dual value of the solve. Throws ConvergenceError otherwise.
double sinkhorn_divergence(const DiscreteMeasure& a, const DiscreteMeasure& b,
                           const CostMatrix& cost, const SolverConfig& cfg);

/// 2 d(a, b) - d(a, a) - d(b, b).
double sinkhorn_loss(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostMatrix& cost,
                     const SolverConfig& cfg);

/// Recomputes the normalized potentials of a solution from arbitrary log
/// scalings: (log_u + s, log_v - s) gives the same result for every s.
void normalize_potentials(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const CostMatrix& cost, double lambda, Eigen::VectorXd& alpha,
                          Eigen::VectorXd& beta);

}  // namespace sinkstat
