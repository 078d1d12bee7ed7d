#pragma once

// Semismooth Newton method for decomposable problems
//   min_x theta(x),  theta(x) = min_y psi(x, y) + q(y),
// with sigma(x) the unique inner minimizer.

#include "mpecbt/equilibrium.hpp"
#include "mpecbt/scd.hpp"
#include "mpecbt/trace.hpp"

#include <functional>
#include <string>

namespace mpecbt {

struct DecomposableProblem {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index m = 0;

  std::function<double(const Vector& x, const Vector& y)> psi;
  std::function<Vector(const Vector& x, const Vector& y)> grad_x;   // n
  std::function<Vector(const Vector& x, const Vector& y)> grad_y;   // m
  std::function<Matrix(const Vector& x, const Vector& y)> hess_xx;  // n x n
  std::function<Matrix(const Vector& x, const Vector& y)> hess_xy;  // n x m; hess_yx is its transpose
  std::function<Matrix(const Vector& x, const Vector& y)> hess_yy;  // m x m

  std::function<double(const Vector& y)> q_value;
  std::function<Vector(const Vector& v, double lambda)> q_prox;
  /// Basis (Z*, Y*) of a subspace of S*(dq) at (y, y*); X* is left empty.
  std::function<AdjointBasis(const Vector& y, const Vector& y_star)> q_subspace;

  Vector y_start;
};

/// 0 in grad_y psi(x, y) + dq(y), the optimality condition of the inner problem.
GeneralizedEquation inner_equation(const DecomposableProblem& p);

/// sigma(x) by the semismooth* Newton method on inner_equation.
EquilibriumResult inner_solve(const DecomposableProblem& p, const Vector& x, const Vector& y0, double tol = 1e-10);

double theta_value(const DecomposableProblem& p, const Vector& x, const Vector& y);

/// grad theta(x) = grad_x psi(x, sigma(x)). Inner failures surface as
/// Errc::lower_level_failure.
Vector theta_gradient(const DecomposableProblem& p, const Vector& x);

/// G = H_xx + H_xy A with A = -(H_yy Z* + Y*)^{-T} (Z*^T H_yx), evaluated at
/// y = sigma(x) and the subspace of S*(dq) at (y, -grad_y psi).
Matrix theta_generalized_jacobian(const DecomposableProblem& p, const Vector& x, const Vector& y);
Matrix theta_generalized_jacobian(const DecomposableProblem& p, const Vector& x);

struct NewtonOptions {
  double tol = 1e-10;
  int maxit = 50;
  bool damped = true;
  int max_halvings = 30;
  double inner_tol_floor = 1e-13;
};

struct NewtonRecord {
  Vector x;
  double grad_norm = 0.0;
  double rcond = 0.0;  // reciprocal condition estimate of G_k
  double step_norm = 0.0;
};

struct NewtonResult {
  Vector x;
  Vector y;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  std::vector<NewtonRecord> records;
  SolveTrace trace;
};

/// x+ = x - t G^{-1} grad theta(x), t halved while ||grad theta|| does not
/// decrease (t = 1 always in undamped mode).
/// Errors: Errc::singular_matrix, Errc::max_iterations_exceeded, Errc::damping_stalled.
NewtonResult ssnewton_minimize(const DecomposableProblem& p, const Vector& x0, const NewtonOptions& opts = {});

}  // namespace mpecbt
