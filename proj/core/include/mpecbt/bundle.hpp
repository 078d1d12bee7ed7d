#pragma once

// Bundle-trust minimization of a nonsmooth function over a polyhedron, driven
// by an oracle that returns a value and one pseudogradient per query.

#include "mpecbt/linalg.hpp"
#include "mpecbt/scd.hpp"
#include "mpecbt/trace.hpp"

#include <functional>
#include <vector>

namespace mpecbt {

/// Linearization l(x) = value + xi^T (x - point). For aggregate elements the
/// anchor is the serious iterate at the time of aggregation.
struct BundleElement {
  Vector point;
  double value = 0.0;
  Vector xi;
  double alpha = 0.0;  // linearization error w.r.t. the current serious iterate
};

/// alpha = |theta_c - l_j(x_c)| + gamma ||x_c - x_j||^2.
double linearization_error(const BundleElement& e, const Vector& x_c, double value_c, double gamma = 0.0);

struct BundleQpResult {
  Vector d;
  double v = 0.0;                // model value m(d) - theta(x_c)
  double pred_decrease = 0.0;    // -v
  Vector weights;                // convex multipliers of the cutting planes
  Vector bound_multipliers;      // one per row of U_ad
  Vector aggregate_xi;           // sum w_j xi_j
  double aggregate_alpha = 0.0;  // sum w_j alpha_j
  int iterations = 0;
};

/// min_{d, v} v + ||d||^2 / (2 r)  s.t.  xi_j^T d - v <= alpha_j,  A (x_c + d) <= b,
/// solved by a dense primal active-set method started from d = 0.
BundleQpResult solve_bundle_qp(const std::vector<BundleElement>& bundle, const Vector& x_c, double r,
                               const Polyhedron& admissible);

struct BtOptions {
  double epsilon = 1e-6;
  int maxit = 200;
  int max_bundle = 50;
  double r0 = 1.0;
  double r_min = 1e-10;
  double r_max = 1e6;
  double m_l = 0.1;
  double m_r = 0.5;
  double gamma = 0.0;  // curvature term in the linearization errors
};

struct OracleValue {
  double value = 0.0;
  Vector xi;
};

using BtOracle = std::function<OracleValue(const Vector& x)>;

enum class BtStatus { converged, max_iterations };

struct BtResult {
  Vector x;
  double value = 0.0;
  Vector xi;             // oracle pseudogradient at x
  Vector aggregate_xi;   // aggregate of the final subproblem
  double stat_residual = 0.0;
  double pred_decrease = 0.0;
  BtStatus status = BtStatus::converged;
  int iterations = 0;
  int oracle_calls = 0;
  int serious_steps = 0;
  SolveTrace trace;
};

/// Stops once the predicted decrease is at most epsilon and the aggregate
/// subgradient g = sum w_j xi_j + A^T mu has norm at most 10 epsilon; a small
/// predicted decrease with a larger g enlarges the radius instead.
/// Throws Errc::infeasible_point when x0 is outside U_ad. Oracle exceptions
/// are rethrown as Errc::oracle_failure. Hitting maxit is reported through
/// the status, with the last serious iterate returned.
BtResult bt_minimize(const BtOracle& oracle, const Polyhedron& admissible, const Vector& x0,
                     const BtOptions& opts = {});

const char* to_string(BtStatus s) noexcept;

}  // namespace mpecbt
