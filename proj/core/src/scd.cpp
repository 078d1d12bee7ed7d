#include "mpecbt/scd.hpp"

#include "mpecbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpecbt {

Matrix AdjointBasis::stacked() const {
  const Eigen::Index m = z.rows();
  Matrix s(2 * m + x.rows(), m);
  s << z, x, y;
  return s;
}

bool AdjointBasis::has_full_rank(double rank_tol) const {
  return has_full_column_rank(stacked(), rank_tol);
}

AdjointBasis AdjointBasis::transformed(const Matrix& c) const {
  return {z * c, x.rows() == 0 ? x : Matrix(x * c), y * c};
}

Polyhedron::Polyhedron(Matrix normals, Vector offsets)
    : normals_(std::move(normals)), offsets_(std::move(offsets)), dim_(normals_.cols()) {
  if (normals_.rows() != offsets_.size()) {
    throw Error(Errc::dimension_mismatch, "polyhedron: one offset per normal required");
  }
  for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
    if (normals_.row(i).norm() == 0.0) throw std::invalid_argument("polyhedron: zero normal vector");
  }
}

Polyhedron Polyhedron::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw Error(Errc::dimension_mismatch, "box bounds differ in length");
  const Eigen::Index n = lo.size();
  std::vector<std::pair<Vector, double>> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lo(i) > hi(i)) throw std::invalid_argument("box: lower bound above upper bound");
    if (std::isfinite(lo(i))) {
      Vector a = Vector::Zero(n);
      a(i) = -1.0;
      rows.emplace_back(a, -lo(i));
    }
    if (std::isfinite(hi(i))) {
      Vector a = Vector::Zero(n);
      a(i) = 1.0;
      rows.emplace_back(a, hi(i));
    }
  }
  Matrix normals(static_cast<Eigen::Index>(rows.size()), n);
  Vector offsets(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    normals.row(static_cast<Eigen::Index>(k)) = rows[k].first.transpose();
    offsets(static_cast<Eigen::Index>(k)) = rows[k].second;
  }
  Polyhedron p(std::move(normals), std::move(offsets));
  p.dim_ = n;
  return p;
}

Polyhedron Polyhedron::whole_space(Eigen::Index dim) {
  Polyhedron p(Matrix(0, dim), Vector(0));
  p.dim_ = dim;
  return p;
}

bool Polyhedron::contains(const Vector& y, double tol) const {
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (normals_.row(i).dot(y) - offsets_(i) > tol * (1.0 + std::abs(offsets_(i)))) return false;
  }
  return true;
}

std::vector<Eigen::Index> active_set_polyhedral(const Polyhedron& c, const Vector& y, double act_tol) {
  if (y.size() != c.dim()) throw Error(Errc::dimension_mismatch, "point dimension differs from polyhedron");
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double b = c.offsets()(i);
    const double gap = c.normals().row(i).dot(y) - b;
    const double tol = act_tol * (1.0 + std::abs(b));
    if (gap > tol) {
      throw Error(Errc::infeasible_point, "constraint " + std::to_string(i) + " violated by " + std::to_string(gap));
    }
    if (std::abs(gap) <= tol) active.push_back(i);
  }
  return active;
}

ActiveSetResult split_active(const Matrix& d, std::vector<Eigen::Index> indices, Eigen::Index dim,
                             double rank_tol) {
  ActiveSetResult out;
  out.indices = std::move(indices);
  const auto qr = qr_pivoted(d.cols() == 0 ? Matrix(dim, 0) : d, rank_tol);
  auto split = orthonormal_split(qr);
  out.complement = std::move(split.range);
  out.lineality = std::move(split.kernel);
  out.rank = qr.rank;
  return out;
}

namespace {

AdjointBasis basis_from_split(const ActiveSetResult& split, const Matrix* curvature) {
  const Eigen::Index m = split.lineality.rows();
  const Eigen::Index free = split.lineality.cols();
  AdjointBasis basis;
  basis.z = Matrix::Zero(m, m);
  basis.y = Matrix::Zero(m, m);
  basis.x = Matrix(0, m);
  basis.z.leftCols(free) = split.lineality;
  if (curvature != nullptr) basis.y.leftCols(free) = (*curvature) * split.lineality;
  basis.y.rightCols(m - free) = split.complement;
  return basis;
}

}  // namespace

AdjointBasis polyhedral_subspace(const Polyhedron& c, const Vector& y, double act_tol) {
  auto active = active_set_polyhedral(c, y, act_tol);
  Matrix d(c.dim(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto row = c.normals().row(active[k]);
    d.col(static_cast<Eigen::Index>(k)) = row.transpose() / row.norm();
  }
  return basis_from_split(split_active(d, std::move(active), c.dim()), nullptr);
}

std::vector<Eigen::Index> active_set_inequality(const SmoothInequalitySet& gamma, const Vector& y,
                                                double act_tol) {
  if (y.size() != gamma.dim) throw Error(Errc::dimension_mismatch, "point dimension differs from constraint set");
  const Vector g = gamma.values(y);
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < gamma.count; ++i) {
    if (g(i) > act_tol) {
      throw Error(Errc::infeasible_point, "inequality " + std::to_string(i) + " violated by " + std::to_string(g(i)));
    }
    if (g(i) >= -act_tol) active.push_back(i);
  }
  return active;
}

MultiplierVector lagrange_multipliers(const SmoothInequalitySet& gamma, const Vector& y, const Vector& y_star,
                                     double act_tol, double multiplier_tol) {
  if (y_star.size() != gamma.dim) throw Error(Errc::dimension_mismatch, "y* has wrong length");
  const auto active = active_set_inequality(gamma, y, act_tol);
  const Matrix jac = gamma.jacobian(y);
  Matrix grads(gamma.dim, static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) grads.col(static_cast<Eigen::Index>(k)) = jac.row(active[k]).transpose();

  const NnlsResult fit = nnls(grads, y_star);
  MultiplierVector out;
  out.lambda = Vector::Zero(gamma.count);
  for (std::size_t k = 0; k < active.size(); ++k) out.lambda(active[k]) = fit.x(static_cast<Eigen::Index>(k));
  out.residual = fit.residual;
  if (fit.residual > multiplier_tol * (1.0 + y_star.norm())) {
    throw Error(Errc::multiplier_residual_too_large,
                "no nonnegative multiplier reproduces y* (residual " + std::to_string(fit.residual) + ")");
  }
  return out;
}

Matrix multiplier_hessian(const SmoothInequalitySet& gamma, const Vector& y, const MultiplierVector& lambda) {
  Matrix a = Matrix::Zero(gamma.dim, gamma.dim);
  for (Eigen::Index i = 0; i < gamma.count; ++i) {
    if (lambda.lambda(i) != 0.0) a += lambda.lambda(i) * gamma.hessian(i, y);
  }
  return a;
}

ActiveSetResult inequality_active_split(const SmoothInequalitySet& gamma, const Vector& y, double act_tol) {
  auto active = active_set_inequality(gamma, y, act_tol);
  const Matrix jac = gamma.jacobian(y);
  std::vector<Eigen::Index> kept;
  for (auto i : active)
    if (jac.row(i).norm() > 0.0) kept.push_back(i);
  Matrix d(gamma.dim, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto row = jac.row(kept[k]);
    d.col(static_cast<Eigen::Index>(k)) = row.transpose() / row.norm();
  }
  auto split = split_active(d, std::move(kept), gamma.dim);
  split.indices = std::move(active);
  return split;
}

AdjointBasis inequality_subspace(const SmoothInequalitySet& gamma, const Vector& y, const MultiplierVector& lambda,
                                 double act_tol) {
  const Matrix a = multiplier_hessian(gamma, y, lambda);
  return basis_from_split(inequality_active_split(gamma, y, act_tol), &a);
}

// ---------------------------------------------------------------------------

ScalarPiecewiseConvex::ScalarPiecewiseConvex(std::vector<double> breakpoints, std::vector<double> slopes, double lo,
                                             double hi)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), lo_(lo), hi_(hi) {
  if (slopes_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("piecewise function needs one more slope than breakpoints");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k)
    if (!(breakpoints_[k] > breakpoints_[k - 1])) throw std::invalid_argument("breakpoints must increase strictly");
  for (std::size_t k = 1; k < slopes_.size(); ++k)
    if (slopes_[k] < slopes_[k - 1]) throw std::invalid_argument("slopes must be nondecreasing");
  if (!(lo_ <= hi_)) throw std::invalid_argument("box lower bound above upper bound");
}

ScalarPiecewiseConvex ScalarPiecewiseConvex::absolute(double weight, double center, double lo, double hi) {
  return ScalarPiecewiseConvex({center}, {-weight, weight}, lo, hi);
}

double ScalarPiecewiseConvex::value(double t) const {
  auto integral = [this](double s) {
    double g = slopes_[0] * s;
    for (std::size_t k = 0; k < breakpoints_.size(); ++k)
      g += (slopes_[k + 1] - slopes_[k]) * std::max(s - breakpoints_[k], 0.0);
    return g;
  };
  return integral(t) - integral(0.0);
}

double ScalarPiecewiseConvex::slope_left(double t) const {
  std::size_t k = 0;
  while (k < breakpoints_.size() && breakpoints_[k] < t) ++k;
  return slopes_[k];
}

double ScalarPiecewiseConvex::slope_right(double t) const {
  std::size_t k = 0;
  while (k < breakpoints_.size() && breakpoints_[k] <= t) ++k;
  return slopes_[k];
}

std::pair<double, double> ScalarPiecewiseConvex::subdifferential(double t) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double left = slope_left(t);
  double right = slope_right(t);
  if (t <= lo_) left = -inf;
  if (t >= hi_) right = inf;
  return {left, right};
}

double ScalarPiecewiseConvex::prox(double v, double lambda) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t = v;
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    const double a = k == 0 ? -inf : breakpoints_[k - 1];
    const double b = k == breakpoints_.size() ? inf : breakpoints_[k];
    const double cand = v - lambda * slopes_[k];
    if (cand > a && cand < b) {
      t = cand;
      break;
    }
    if (k < breakpoints_.size()) {
      const double s = (v - b) / lambda;
      if (s >= slopes_[k] && s <= slopes_[k + 1]) {
        t = b;
        break;
      }
    }
  }
  return std::clamp(t, lo_, hi_);
}

double ScalarPiecewiseConvex::selector(double t) const { return slope_right(t); }

ScalarBasis scalar_pc_subspace(const ScalarPiecewiseConvex& q, double t, double t_star, double graph_tol) {
  const double pos_tol = graph_tol * (1.0 + std::abs(t));
  if (!q.in_box(t, pos_tol)) throw Error(Errc::not_in_graph, "point outside the box");

  // Snap t onto a nearby breakpoint or bound so that rounding does not hide a kink.
  double ts = std::clamp(t, q.lo(), q.hi());
  for (double b : q.breakpoints())
    if (std::abs(ts - b) <= pos_tol) ts = b;
  if (std::abs(ts - q.lo()) <= pos_tol) ts = q.lo();
  if (std::abs(ts - q.hi()) <= pos_tol) ts = q.hi();

  const auto [left, right] = q.subdifferential(ts);
  const double tol_l = graph_tol * (1.0 + (std::isfinite(left) ? std::abs(left) : 0.0));
  const double tol_r = graph_tol * (1.0 + (std::isfinite(right) ? std::abs(right) : 0.0));
  if (t_star < left - tol_l || t_star > right + tol_r) {
    throw Error(Errc::not_in_graph, "t* outside the subdifferential");
  }
  if (t_star > left + tol_l && t_star < right - tol_r) return {0.0, 1.0};
  return {1.0, 0.0};
}

AdjointBasis separable_subspace(const std::vector<BlockBasis>& blocks) {
  std::vector<Matrix> zs;
  std::vector<Matrix> ys;
  zs.reserve(blocks.size());
  ys.reserve(blocks.size());
  for (const auto& blk : blocks) {
    if (blk.b.rows() != blk.b.cols() || blk.complement.rows() != blk.b.rows() ||
        blk.complement.cols() != blk.b.cols()) {
      throw Error(Errc::dimension_mismatch, "block basis matrices must be square and of equal size");
    }
    zs.push_back(blk.b);
    ys.push_back(blk.complement);
  }
  AdjointBasis out;
  out.z = block_diagonal(zs);
  out.y = block_diagonal(ys);
  out.x = Matrix(0, out.z.cols());
  return out;
}

AdjointBasis shift_by_f(const AdjointBasis& basis, const Matrix& jac_x, const Matrix& jac_y) {
  const Eigen::Index m = basis.z.rows();
  if (basis.z.cols() != m || basis.y.rows() != m || basis.y.cols() != m || jac_y.rows() != m ||
      jac_y.cols() != m || jac_x.rows() != m || (!basis.x_independent() && basis.x.rows() != jac_x.cols()) ||
      (!basis.x_independent() && basis.x.cols() != m)) {
    throw Error(Errc::dimension_mismatch, "shift_by_f: inconsistent shapes");
  }
  AdjointBasis out;
  out.z = basis.z;
  out.x = jac_x.transpose() * basis.z;
  if (!basis.x_independent()) out.x += basis.x;
  out.y = jac_y.transpose() * basis.z + basis.y;
  return out;
}

}  // namespace mpecbt
