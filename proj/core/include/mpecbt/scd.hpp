#pragma once

// Basis representations of adjoint SCD subspaces.
//
// A subspace L* of R^m x R^n x R^m of dimension m is stored through matrices
// (Z*, X*, Y*) with L* = rge(Z*, X*, Y*). When the set-valued part does not
// depend on the control, X* is stored with zero rows and treated as the
// n x m zero matrix by every consumer.

#include "mpecbt/linalg.hpp"

#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace mpecbt {

inline constexpr double kActivityTol = 1e-8;
inline constexpr double kMultiplierTol = 1e-8;

struct AdjointBasis {
  Matrix z;  // m x m
  Matrix x;  // n x m, or 0 x m when Q is x-independent
  Matrix y;  // m x m

  Eigen::Index dim() const { return z.rows(); }
  bool x_independent() const { return x.rows() == 0; }

  /// [Z; X; Y] stacked column-wise, (2m + n) x m.
  Matrix stacked() const;

  /// Full-column-rank invariant of the stacked matrix.
  bool has_full_rank(double rank_tol = kDefaultRankTol) const;

  /// Same subspace, represented by (Z C, X C, Y C).
  AdjointBasis transformed(const Matrix& c) const;
};

/// C = { y | <a_i, y> <= b_i }, with the normals a_i stored as rows.
class Polyhedron {
 public:
  Polyhedron() = default;
  Polyhedron(Matrix normals, Vector offsets);

  /// Box lo <= y <= hi. Infinite bounds are skipped.
  static Polyhedron box(const Vector& lo, const Vector& hi);
  static Polyhedron whole_space(Eigen::Index dim);

  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return normals_.rows(); }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }

  bool contains(const Vector& y, double tol = kActivityTol) const;

 private:
  Matrix normals_;
  Vector offsets_;
  Eigen::Index dim_ = 0;
};

/// Gamma = { y | g_i(y) <= 0, i = 1..l } with convex C^2 functions g_i.
struct SmoothInequalitySet {
  Eigen::Index count = 0;
  Eigen::Index dim = 0;
  std::function<Vector(const Vector&)> values;               // g(y), length l
  std::function<Matrix(const Vector&)> jacobian;             // l x m, rows are grad g_i
  std::function<Matrix(Eigen::Index, const Vector&)> hessian;  // m x m
};

struct ActiveSetResult {
  std::vector<Eigen::Index> indices;
  Matrix lineality;   // Q2, columns span E
  Matrix complement;  // Q1, columns span E-perp
  int rank = 0;
};

struct MultiplierVector {
  Vector lambda;
  double residual = 0.0;
};

/// One-dimensional convex piecewise-linear function plus a box indicator.
///
/// `slopes` has one more entry than `breakpoints`; slopes[k] applies on
/// (breakpoints[k-1], breakpoints[k]). The value is normalized so that the
/// piecewise-linear part vanishes at 0.
class ScalarPiecewiseConvex {
 public:
  ScalarPiecewiseConvex() : slopes_{0.0} {}
  ScalarPiecewiseConvex(std::vector<double> breakpoints, std::vector<double> slopes,
                        double lo = -std::numeric_limits<double>::infinity(),
                        double hi = std::numeric_limits<double>::infinity());

  /// a * |t - center| + box.
  static ScalarPiecewiseConvex absolute(double weight, double center = 0.0,
                                        double lo = -std::numeric_limits<double>::infinity(),
                                        double hi = std::numeric_limits<double>::infinity());

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }

  /// Piecewise-linear part only (the box indicator is not added).
  double value(double t) const;
  bool in_box(double t, double tol = 0.0) const { return t >= lo_ - tol && t <= hi_ + tol; }

  /// Subdifferential of q~ + delta_[lo,hi] at t as an interval (may be unbounded).
  std::pair<double, double> subdifferential(double t) const;

  /// argmin_t q(t) + (t - v)^2 / (2 lambda).
  double prox(double v, double lambda) const;

  /// Element of the subdifferential selected with sgn(0) := +1 at kinks.
  double selector(double t) const;

 private:
  double slope_left(double t) const;
  double slope_right(double t) const;

  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
};

/// Pair (b, 1 - b) spanning a one-dimensional SC subspace of the graph of a
/// scalar subdifferential.
struct ScalarBasis {
  double z = 1.0;
  double y = 0.0;
};

std::vector<Eigen::Index> active_set_polyhedral(const Polyhedron& c, const Vector& y,
                                                double act_tol = kActivityTol);

/// QR split of the normalized active normals (columns of D).
ActiveSetResult split_active(const Matrix& active_normals_as_columns, std::vector<Eigen::Index> indices,
                             Eigen::Index dim, double rank_tol = kDefaultRankTol);

/// L* = E x E-perp where E is the lineality space of the tangent cone at y.
AdjointBasis polyhedral_subspace(const Polyhedron& c, const Vector& y, double act_tol = kActivityTol);

std::vector<Eigen::Index> active_set_inequality(const SmoothInequalitySet& gamma, const Vector& y,
                                                double act_tol = kActivityTol);

/// Nonnegative multipliers with y* = sum lambda_i grad g_i(y)^T on active constraints.
MultiplierVector lagrange_multipliers(const SmoothInequalitySet& gamma, const Vector& y,
                                     const Vector& y_star, double act_tol = kActivityTol,
                                     double multiplier_tol = kMultiplierTol);

/// Curvature term A = sum lambda_i Hess g_i(y).
Matrix multiplier_hessian(const SmoothInequalitySet& gamma, const Vector& y, const MultiplierVector& lambda);

ActiveSetResult inequality_active_split(const SmoothInequalitySet& gamma, const Vector& y,
                                        double act_tol = kActivityTol);

/// Z* = (Q2 | 0), Y* = (A Q2 | Q1).
AdjointBasis inequality_subspace(const SmoothInequalitySet& gamma, const Vector& y,
                                 const MultiplierVector& lambda, double act_tol = kActivityTol);

ScalarBasis scalar_pc_subspace(const ScalarPiecewiseConvex& q, double t, double t_star,
                               double graph_tol = 1e-10);

struct BlockBasis {
  Matrix b;           // B_i
  Matrix complement;  // I - B_i
};

AdjointBasis separable_subspace(const std::vector<BlockBasis>& blocks);

/// Basis of S*F for F = f + Q obtained from a basis of S*Q:
/// (Z*, Jx^T Z* + X*, Jy^T Z* + Y*).
AdjointBasis shift_by_f(const AdjointBasis& basis, const Matrix& jac_x, const Matrix& jac_y);

}  // namespace mpecbt
