#include "doctest.h"

#include "oracles/polytope_oracle.hpp"
#include "sinkstat/measures.hpp"
#include "sinkstat/sinkhorn.hpp"

#include <cmath>
#include <random>

using namespace sinkstat;

namespace {

DiscreteMeasure random_interior(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (auto& x : w) x = u(gen);
  return DiscreteMeasure::normalized(w);
}

oracle::Vec to_vec(const DiscreteMeasure& m) { return {m.weights().begin(), m.weights().end()}; }

oracle::Mat to_mat(const CostMatrix& c) {
  oracle::Mat out(c.size(), oracle::Vec(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) out[i][j] = c(i, j);
  }
  return out;
}

CostMatrix swap_cost() {
  Eigen::Matrix2d c;
  c << 0, 1, 1, 0;
  return CostMatrix(c, 1.0);
}

}  // namespace

TEST_CASE("two-point instance matches a frozen value") {
  const DiscreteMeasure a(Eigen::Vector2d(0.5, 0.5));
  const auto sol = sinkhorn_solve(a, a, swap_cost(), SolverConfig{});
  REQUIRE(sol.converged);
  CHECK(sol.dual == doctest::Approx(-1.006408868078168).epsilon(1e-10));
  CHECK(sol.primal == doctest::Approx(-1.006408868078168).epsilon(1e-10));
  CHECK(sol.plan(0, 0) == doctest::Approx(0.36552928931500245).epsilon(1e-8));
  CHECK(sol.plan(0, 1) == doctest::Approx(0.5 - 0.36552928931500245).epsilon(1e-8));
}

TEST_CASE("small instances agree with polytope brute force") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coord(0.0, 3.0);
  for (int rep = 0; rep < 6; ++rep) {
    const std::size_t n = rep % 2 == 0 ? 2 : 3;
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), 2);
    for (auto& x : pts.reshaped()) x = coord(gen);
    const auto cost = squared_euclidean_cost(FiniteSpace(pts));
    const auto a = random_interior(n, gen);
    const auto b = random_interior(n, gen);
    const double lambda = 0.5 + rep;
    SolverConfig cfg;
    cfg.lambda = lambda;
    const auto sol = sinkhorn_solve(a, b, cost, cfg);
    REQUIRE(sol.converged);
    const double ref = n == 2 ? oracle::min_value_2(to_vec(a), to_vec(b), to_mat(cost), lambda)
                              : oracle::min_value_3(to_vec(a), to_vec(b), to_mat(cost), lambda);
    CHECK(std::abs(sol.dual - ref) <= 1e-7);
  }
}

TEST_CASE("primal equals dual and marginals hold") {
  std::mt19937_64 gen(11);
  const auto cost = squared_euclidean_cost(make_grid(5));
  for (double lambda : {0.5, 1.0, 5.0}) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    const auto a = random_interior(25, gen);
    const auto b = random_interior(25, gen);
    const auto sol = sinkhorn_solve(a, b, cost, cfg);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.primal - sol.dual) <= 1e-8 * (1 + std::abs(sol.primal)));
    CHECK((sol.plan.rowwise().sum() - a.weights()).lpNorm<1>() <= cfg.tol);
    CHECK((sol.plan.colwise().sum().transpose() - b.weights()).lpNorm<1>() <= cfg.tol);
    CHECK(sol.marginal_err <= cfg.tol);

    const double f = eval_dual_objective(a.weights(), b.weights(), sol.alpha, sol.beta, cost, lambda);
    CHECK(f + lambda == doctest::Approx(sol.dual).epsilon(1e-9));
  }
}

TEST_CASE("dual objective at zero potentials") {
  const CostMatrix c(Eigen::MatrixXd::Zero(1, 1), 2.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(eval_dual_objective(one, one, zero, zero, c, 1.0) == doctest::Approx(-1.0));
  CHECK(eval_dual_objective(one, one, zero, zero, c, 2.5) == doctest::Approx(-2.5));
}

TEST_CASE("potentials reproduce the plan and are gauge fixed") {
  const auto cost = squared_euclidean_cost(make_grid(4));
  const auto a = uniform_measure(16);
  const auto b = linear_trend_measure(16, 0.5);
  SolverConfig cfg;
  cfg.lambda = 0.7;
  const auto sol = sinkhorn_solve(a, b, cost, cfg);
  REQUIRE(sol.converged);
  CHECK(std::abs(sol.alpha.sum()) <= 1e-10);
  for (Eigen::Index i = 0; i < 16; ++i) {
    for (Eigen::Index j = 0; j < 16; ++j) {
      const double t = std::exp((sol.alpha[i] + sol.beta[j] - cost(i, j)) / cfg.lambda);
      CHECK(sol.plan(i, j) == doctest::Approx(t).epsilon(1e-8));
    }
  }
  CHECK(sol.log_u.isApprox(sol.alpha / cfg.lambda));
  CHECK(sol.u().isApprox((sol.alpha / cfg.lambda).array().exp().matrix()));

  Eigen::VectorXd alpha = sol.alpha.array() + 3.0;
  Eigen::VectorXd beta = sol.beta.array() - 3.0;
  normalize_potentials(a, b, cost, cfg.lambda, alpha, beta);
  CHECK((alpha - sol.alpha).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((beta - sol.beta).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("measures with empty cells") {
  const auto cost = squared_euclidean_cost(make_grid(3));
  const DiscreteMeasure a(Eigen::VectorXd::Unit(9, 4));
  Eigen::VectorXd wb = Eigen::VectorXd::Zero(9);
  wb[0] = 0.5;
  wb[8] = 0.5;
  const DiscreteMeasure b(wb);
  const auto sol = sinkhorn_solve(a, b, cost, SolverConfig{});
  REQUIRE(sol.converged);
  CHECK(sol.plan.row(0).sum() == 0.0);
  CHECK(sol.plan(4, 0) == doctest::Approx(0.5));
  CHECK(sol.plan(4, 8) == doctest::Approx(0.5));
  CHECK(sol.alpha.allFinite());
  CHECK(sol.beta.allFinite());
  // Both targets are at squared distance 2 from the centre.
  CHECK(sol.dual == doctest::Approx(2.0 + std::log(0.5)).epsilon(1e-9));
}

TEST_CASE("sinkhorn loss of two point masses") {
  const DiscreteMeasure a(Eigen::Vector2d(1, 0));
  const DiscreteMeasure b(Eigen::Vector2d(0, 1));
  CHECK(sinkhorn_divergence(a, b, swap_cost(), SolverConfig{}) == doctest::Approx(1.0));
  CHECK(sinkhorn_loss(a, b, swap_cost(), SolverConfig{}) == doctest::Approx(2.0));
  CHECK(sinkhorn_loss(a, a, swap_cost(), SolverConfig{}) == doctest::Approx(0.0));
}

TEST_CASE("symmetric cost gives a symmetric divergence") {
  std::mt19937_64 gen(3);
  const auto cost = squared_euclidean_cost(make_grid(4));
  const auto a = random_interior(16, gen);
  const auto b = random_interior(16, gen);
  const SolverConfig cfg;
  CHECK(sinkhorn_divergence(a, b, cost, cfg) ==
        doctest::Approx(sinkhorn_divergence(b, a, cost, cfg)).epsilon(1e-9));
}

TEST_CASE("warm start reaches the same solution") {
  const auto cost = squared_euclidean_cost(make_grid(5));
  const auto a = uniform_measure(25);
  const auto b = linear_trend_measure(25, 0.5);
  const SolverConfig cfg;
  const auto cold = sinkhorn_solve(a, b, cost, cfg);
  const auto warm = sinkhorn_solve(a, b, cost, cfg, cold.beta);
  REQUIRE(warm.converged);
  CHECK(warm.iterations <= cold.iterations);
  CHECK(warm.dual == doctest::Approx(cold.dual).epsilon(1e-10));
}

TEST_CASE("small lambda stays finite") {
  const auto cost = squared_euclidean_cost(make_grid(10));
  SolverConfig cfg;
  cfg.lambda = 0.3;
  const auto sol = sinkhorn_solve(uniform_measure(100), linear_trend_measure(100, 0.5), cost, cfg);
  CHECK(sol.converged);
  CHECK(sol.alpha.allFinite());
  CHECK(sol.beta.allFinite());
  CHECK(std::isfinite(sol.dual));
}

TEST_CASE("configuration and convergence errors") {
  const auto cost = squared_euclidean_cost(make_grid(5));
  const auto a = uniform_measure(25);
  const auto b = linear_trend_measure(25, 0.5);
  SolverConfig bad;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(sinkhorn_solve(a, b, cost, bad), std::invalid_argument);
  bad = SolverConfig{};
  bad.tol = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  SolverConfig capped;
  capped.lambda = 0.2;
  capped.max_iter = 1;
  const auto sol = sinkhorn_solve(a, b, cost, capped);
  CHECK_FALSE(sol.converged);
  CHECK_THROWS_AS(sinkhorn_divergence(a, b, cost, capped), ConvergenceError);

  CHECK_THROWS_AS(sinkhorn_solve(uniform_measure(4), b, cost, SolverConfig{}), std::invalid_argument);
}

TEST_CASE("kernel entries") {
  const auto k = kernel_matrix(swap_cost(), 0.5);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-2.0)));
}
