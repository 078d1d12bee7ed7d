#pragma once

// Built-in instances and JSON ingestion.

#include "mpecbt/bundle.hpp"
#include "mpecbt/oracle.hpp"
#include "mpecbt/reduced_newton.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mpecbt {

/// phi = -0.5 y1 + y2,  0 in (y1 + y2 - x, y2 + x) + N_{R^2_+}(y),  U_ad = [-1, 1].
MpecProblem lcp_toy();

struct LcpToyReference {
  Vector s;
  double theta = 0.0;
};
LcpToyReference lcp_toy_reference(double x);

/// phi = -x + y1, psi = y1^2/2 - y2^2/2 - x y1, q = indicator of
/// {-y1/4 <= y2 <= y1/2}, U_ad = [-1, 1]. The lower level returns the global
/// minimizer of the (nonconvex) quadratic by face enumeration.
MpecProblem bilevel_toy();

struct BasisPair {
  Matrix z;
  Matrix y;
};

struct BilevelToyReference {
  Vector sigma;
  double reduced = 0.0;
};
BilevelToyReference bilevel_toy_reference(double x);

/// The four adjoint subspaces at x = 0 and the corresponding matrices
/// grad_y f^T Z* + Y* as listed with the example.
std::array<BasisPair, 4> bilevel_toy_subspaces();
std::array<Matrix, 4> bilevel_toy_listed_newton_matrices();

/// Global minimizer of 0.5 y^T H y + c^T y over a polyhedron, by enumerating
/// faces. Intended for tiny instances; throws Errc::lower_level_failure when
/// no face carries a finite minimizer.
Vector enumerate_polyhedral_qp(const Matrix& h, const Vector& c, const Polyhedron& poly);

/// psi = 0.5 (y - y0)^T diag(x) (y - y0), Q = normal cone of the five-inequality
/// set, phi = ||y||_1, U_ad = [lower, upper]^3.
MpecProblem projection_bilevel(const Vector& y0, double lower = 1.0, double upper = 50.0);
SmoothInequalitySet projection_constraints();

struct OligopolyFirm {
  Vector d;      // linear cost
  Vector e;      // quadratic cost
  Vector ref;    // reference production for the costs of change
  Vector up;     // slope of the costs of change above ref
  Vector down;   // slope of the costs of change below ref
  Vector lower;  // production box
  Vector upper;
};

/// Inverse demand p_j = a_j - b_j T_j with T_j the total production of commodity j.
struct OligopolyModel {
  Vector a;
  Vector b;
  OligopolyFirm leader;
  std::vector<OligopolyFirm> followers;

  Eigen::Index n() const { return a.size(); }
  Eigen::Index l() const { return static_cast<Eigen::Index>(followers.size()); }

  /// Loss of firm `i` (0 = leader, k = follower k) at leader production x and
  /// stacked follower productions y.
  double loss(Eigen::Index i, const Vector& x, const Vector& y) const;
  /// Gradient of firm i's smooth loss w.r.t. its own production.
  Vector loss_gradient(Eigen::Index i, const Vector& x, const Vector& y) const;
  /// Costs of change of firm i at its own production t.
  double change_cost(Eigen::Index i, const Vector& t) const;

  void validate() const;
  /// Largest relative deviation between analytic follower gradients and
  /// central differences of the losses at `points` random feasible states.
  double finite_difference_audit(int points, unsigned seed) const;
};

MpecProblem build_oligopoly(const OligopolyModel& model);

struct NashPoint {
  Vector leader;
  Vector followers;
  double residual = 0.0;
};
/// Cournot-Nash equilibrium with the leader as an ordinary player.
NashPoint oligopoly_nash(const OligopolyModel& model);

/// Optional fixture from an external dataset.
struct OligopolyFixture {
  Vector leader;
  Vector followers;
  std::vector<double> losses;  // leader first
};

struct QuadraticModel {
  Matrix h;  // m x m, symmetric positive definite
  Matrix b;  // m x n
  Vector c;  // m
  Matrix p;  // n x n
  Vector r;  // n
  double quartic = 0.0;
  Vector l1_weight;  // m, nonnegative
  Vector y_lower;
  Vector y_upper;
  Vector x_lower;
  Vector x_upper;

  Eigen::Index n() const { return b.cols(); }
  Eigen::Index m() const { return b.rows(); }
  void validate() const;
};

/// psi = 0.5 y^T H y - y^T (B x + c) + 0.5 x^T P x + r^T x + quartic/4 sum x_i^4,
/// q = sum_j w_j |y_j| + box indicator.
DecomposableProblem custom_quadratic(const QuadraticModel& model);
/// Same instance as an MPEC with phi = psi + q and g_y = 0.
MpecProblem custom_quadratic_mpec(const QuadraticModel& model);

/// psi = 0.5 (x - y)^2 + 0.5 y^2, q = |y|.
QuadraticModel soft_threshold_model();
/// Five-dimensional quadratic-plus-box instance with a quartic x term.
QuadraticModel quadratic_box_model();

struct LoadedProblem {
  std::string id;
  std::string kind;
  std::optional<MpecProblem> mpec;
  std::optional<DecomposableProblem> decomposable;
  std::optional<OligopolyModel> oligopoly;
  std::optional<OligopolyFixture> fixture;
  Vector x0;
  BtOptions bt;
  NewtonOptions newton;
};

/// Errors: Errc::schema_error (message starts with the JSON path of the
/// offending field), Errc::dimension_mismatch.
LoadedProblem load_problem(const std::string& json_text);
LoadedProblem load_problem_file(const std::string& path);

}  // namespace mpecbt
