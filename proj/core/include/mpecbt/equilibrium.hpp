#pragma once

// Parameter-dependent generalized equations 0 in f(x, y) + Q(x, y) and the
// lower-level solvers used to evaluate the solution map S(x).

#include "mpecbt/linalg.hpp"
#include "mpecbt/scd.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mpecbt {

struct GeneralizedEquation {
  Eigen::Index n = 0;  // control dimension
  Eigen::Index m = 0;  // state dimension

  std::function<Vector(const Vector& x, const Vector& y)> f;
  std::function<Matrix(const Vector& x, const Vector& y)> jac_x;  // m x n
  std::function<Matrix(const Vector& x, const Vector& y)> jac_y;  // m x m

  /// Basis of one subspace of S*Q at (x, y, z) with z in Q(x, y).
  std::function<AdjointBasis(const Vector& x, const Vector& y, const Vector& z)> subspace;

  /// prox_{lambda q}(v) when Q = dq; left empty for KKT-structured Q.
  std::function<Vector(const Vector& v, double lambda)> prox;
};

struct EquilibriumResult {
  Vector y;
  double residual = 0.0;
  int iterations = 0;
  /// Subspace of S*Q at the last graph point the solver visited, if it built one.
  std::optional<AdjointBasis> subspace;
  /// Lower-level multipliers for KKT-structured solvers (empty otherwise).
  Vector multipliers;
  /// Residual at every iterate, starting with y0 (semismooth Newton only).
  std::vector<double> residual_history;
};

/// ||y - prox_{lambda q}(y - lambda f(x, y))|| / lambda.
double natural_residual(const GeneralizedEquation& ge, const Vector& x, const Vector& y, double lambda = 1.0);

struct SsNewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double lambda = 1.0;            // prox parameter of the approximation step
  double min_lambda = 1e-8;
  double fallback_factor = 10.0;  // residual blow-up that triggers the prox-gradient step
};

/// SCD semismooth* Newton method for 0 in f(x, .) + dq.
///
/// Each iteration performs an approximation step (y^, y*^) onto gph dq via
/// the prox map, fetches a basis (Z, Y) of a subspace at that graph point and
/// solves (grad_y f Z + Y) p = -(f + y*^), y+ = y^ + Z p. The returned
/// subspace is the one built at the final approximation step.
EquilibriumResult solve_ge_ssnewton(const GeneralizedEquation& ge, const Vector& x, const Vector& y0,
                                    const SsNewtonOptions& opts = {});

/// Smooth convex lower-level objective y -> psi(x, y) at fixed x.
struct SmoothObjective {
  std::function<Vector(const Vector& y)> gradient;
  std::function<Matrix(const Vector& y)> hessian;
};

struct KktOptions {
  double tol = 1e-11;
  int max_iter = 200;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct KktResult {
  Vector y;
  Vector lambda;
  double merit = 0.0;  // ||Phi_FB(y, lambda)||
  int iterations = 0;
};

/// Semismooth Newton method on the Fischer-Burmeister reformulation of
///   grad psi(y) + sum lambda_i grad g_i(y) = 0,  0 <= lambda  _|_  -g(y) >= 0,
/// with Armijo backtracking on 0.5 ||Phi||^2. A Levenberg-Marquardt step
/// replaces the Newton step whenever the generalized Jacobian is singular or
/// the Newton direction is not a descent direction. Stops once the merit and
/// max |lambda_i g_i(y)| are both at most tol. Returned multipliers are
/// clipped at zero.
KktResult solve_kkt_fb(const SmoothInequalitySet& gamma, const SmoothObjective& objective, const Vector& y0,
                       const Vector& lambda0, const KktOptions& opts = {});

/// phi(a, b) = sqrt(a^2 + b^2) - a - b.
double fischer_burmeister(double a, double b);

}  // namespace mpecbt
