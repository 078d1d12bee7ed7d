#pragma once

// Pseudogradients of the reduced objective theta(x) = phi(x, S(x)).

#include "mpecbt/equilibrium.hpp"
#include "mpecbt/scd.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace mpecbt {

struct MpecProblem {
  std::string name;
  GeneralizedEquation ge;

  std::function<double(const Vector& x, const Vector& y)> phi;
  /// One generalized-gradient element (g_x, g_y) of phi at (x, y).
  std::function<std::pair<Vector, Vector>(const Vector& x, const Vector& y)> selector;

  Polyhedron admissible;  // U_ad over R^n

  /// Lower-level solution S(x) from a warm start y0.
  std::function<EquilibriumResult(const Vector& x, const Vector& y0)> lower;
  Vector y_start;

  /// Set when Q is the normal cone of a smooth inequality set.
  std::optional<SmoothInequalitySet> inequality;
};

struct OracleOutput {
  double value = 0.0;
  Vector xi;
  Vector pbar;
  Vector xstar;
  Vector zstar;
  AdjointBasis subspace;  // basis of the subspace of S*Q that was used
  EquilibriumResult lower;
};

/// Steps 3-4 of the oracle for a given lower-level solution and basis:
/// solve (Jy^T Z* + Y*) p = -g_y, x* = (Jx^T Z* + X*) p, xi = g_x + x*.
OracleOutput pseudogradient_from_basis(const MpecProblem& mpec, const Vector& x, EquilibriumResult lower,
                                       const AdjointBasis& basis);

/// Full oracle: lower-level solve, subspace selection and adjoint system.
/// The subspace computed by the lower-level solver is reused when present.
OracleOutput pseudogradient(const MpecProblem& mpec, const Vector& x, const std::optional<Vector>& y0 = std::nullopt);

/// Oracle for inequality-structured Q through the reduced (m - s)-dimensional
/// system Q2^T (Jy^T + A) Q2 p1 = -Q2^T g_y.
OracleOutput inequality_reduced_pseudogradient(const MpecProblem& mpec, const Vector& x,
                                               const std::optional<Vector>& y0 = std::nullopt);

/// ||proj_{T_C(x)}(-xi)||, zero iff -xi lies in the normal cone of C at x.
double stationarity_residual(const Polyhedron& c, const Vector& x, const Vector& xi,
                             double act_tol = kActivityTol);

/// Value theta(x) = phi(x, S(x)) without the adjoint solve.
double reduced_value(const MpecProblem& mpec, const Vector& x, const std::optional<Vector>& y0 = std::nullopt);

struct FdAuditOptions {
  int samples = 100;
  std::uint64_t seed = 0;
  double h = 1e-6;
  double rel_tol = 1e-4;
  /// Fraction of each box side kept clear of the boundary when sampling.
  double margin = 1e-3;
};

struct FdAuditResult {
  int samples = 0;
  int passed = 0;
  int kinks = 0;     // one-sided differences disagree; excluded
  int failures = 0;  // smooth-looking points where xi^T d misses the central difference
  double worst = 0.0;
};

/// Directional check |xi^T d - (theta(x + h d) - theta(x - h d)) / (2h)| <=
/// rel_tol (1 + |theta(x)|) at random interior points of the box [lo, hi]
/// (infinite sides are replaced by +-10) along random unit directions.
FdAuditResult finite_difference_audit(const MpecProblem& mpec, const Vector& lo, const Vector& hi,
                                      const FdAuditOptions& opts = {});

/// Bounds of U_ad when every row is +-e_i; empty optional otherwise.
std::optional<std::pair<Vector, Vector>> box_bounds(const Polyhedron& c);

/// Oracle with a warm-start cache: each call starts the lower-level solver
/// from the previous solution.
class ReducedObjective {
 public:
  explicit ReducedObjective(const MpecProblem& mpec) : mpec_(&mpec), y_warm_(mpec.y_start) {}

  OracleOutput operator()(const Vector& x);

  int calls() const { return calls_; }
  /// Largest lower-level residual seen so far.
  double max_lower_residual() const { return max_lower_residual_; }
  const MpecProblem& problem() const { return *mpec_; }

 private:
  const MpecProblem* mpec_;
  Vector y_warm_;
  int calls_ = 0;
  double max_lower_residual_ = 0.0;
};

}  // namespace mpecbt
