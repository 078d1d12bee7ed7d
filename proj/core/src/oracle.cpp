#include "mpecbt/oracle.hpp"

#include "mpecbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace mpecbt {

namespace {

EquilibriumResult solve_lower(const MpecProblem& mpec, const Vector& x, const std::optional<Vector>& y0) {
  if (!mpec.admissible.contains(x)) throw Error(Errc::infeasible_point, "oracle query outside U_ad");
  try {
    return mpec.lower(x, y0 ? *y0 : mpec.y_start);
  } catch (const Error& e) {
    throw Error(Errc::lower_level_failure, e.what());
  }
}

}  // namespace

OracleOutput pseudogradient_from_basis(const MpecProblem& mpec, const Vector& x, EquilibriumResult lower,
                                       const AdjointBasis& basis) {
  const Vector& y = lower.y;
  auto [gx, gy] = mpec.selector(x, y);
  const AdjointBasis shifted = shift_by_f(basis, mpec.ge.jac_x(x, y), mpec.ge.jac_y(x, y));

  OracleOutput out;
  out.value = mpec.phi(x, y);
  out.pbar = solve_dense(shifted.y, -gy);
  out.xstar = shifted.x * out.pbar;
  out.zstar = basis.z * out.pbar;
  out.xi = gx + out.xstar;
  out.subspace = basis;
  out.lower = std::move(lower);
  return out;
}

OracleOutput pseudogradient(const MpecProblem& mpec, const Vector& x, const std::optional<Vector>& y0) {
  EquilibriumResult lower = solve_lower(mpec, x, y0);
  AdjointBasis basis;
  if (lower.subspace) {
    basis = *lower.subspace;
  } else {
    basis = mpec.ge.subspace(x, lower.y, -mpec.ge.f(x, lower.y));
  }
  return pseudogradient_from_basis(mpec, x, std::move(lower), basis);
}

OracleOutput inequality_reduced_pseudogradient(const MpecProblem& mpec, const Vector& x,
                                               const std::optional<Vector>& y0) {
  if (!mpec.inequality) throw Error(Errc::dimension_mismatch, "problem has no inequality structure");
  const SmoothInequalitySet& gamma = *mpec.inequality;

  EquilibriumResult lower = solve_lower(mpec, x, y0);
  const Vector& y = lower.y;
  const Vector y_star = -mpec.ge.f(x, y);
  const MultiplierVector lambda = lagrange_multipliers(gamma, y, y_star);
  const ActiveSetResult split = inequality_active_split(gamma, y);
  const Matrix a = multiplier_hessian(gamma, y, lambda);

  auto [gx, gy] = mpec.selector(x, y);
  const Matrix jx = mpec.ge.jac_x(x, y);
  const Matrix jyt_a = mpec.ge.jac_y(x, y).transpose() + a;
  const Matrix& q2 = split.lineality;
  const Matrix& q1 = split.complement;

  Vector p1(q2.cols());
  if (q2.cols() > 0) p1 = solve_dense(q2.transpose() * jyt_a * q2, -(q2.transpose() * gy));
  const Vector z = q2 * p1;
  const Vector p2 = -(q1.transpose() * (gy + jyt_a * z));

  OracleOutput out;
  out.value = mpec.phi(x, y);
  out.pbar.resize(p1.size() + p2.size());
  out.pbar << p1, p2;
  out.xstar = jx.transpose() * z;
  out.zstar = z;
  out.xi = gx + out.xstar;
  out.subspace = inequality_subspace(gamma, y, lambda);
  out.lower = std::move(lower);
  return out;
}

double stationarity_residual(const Polyhedron& c, const Vector& x, const Vector& xi, double act_tol) {
  const std::vector<Eigen::Index> active = active_set_polyhedral(c, x, act_tol);
  const Vector v = -xi;
  if (active.empty()) return v.norm();
  Matrix normals(x.size(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t j = 0; j < active.size(); ++j) normals.col(static_cast<Eigen::Index>(j)) = c.normals().row(active[j]).transpose();
  // Moreau: v = proj_N(v) + proj_T(v), and proj_N(v) is the NNLS fit over the active normals.
  return nnls(normals, v).residual;
}

double reduced_value(const MpecProblem& mpec, const Vector& x, const std::optional<Vector>& y0) {
  return mpec.phi(x, solve_lower(mpec, x, y0).y);
}

std::optional<std::pair<Vector, Vector>> box_bounds(const Polyhedron& c) {
  const Eigen::Index n = c.dim();
  Vector lo = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto row = c.normals().row(i);
    Eigen::Index j = 0;
    const double peak = row.cwiseAbs().maxCoeff(&j);
    if (row.cwiseAbs().sum() != peak) return std::nullopt;
    const double bound = c.offsets()(i) / row(j);
    if (row(j) > 0.0) {
      hi(j) = std::min(hi(j), bound);
    } else {
      lo(j) = std::max(lo(j), bound);
    }
  }
  return std::pair<Vector, Vector>{lo, hi};
}

FdAuditResult finite_difference_audit(const MpecProblem& mpec, const Vector& lo, const Vector& hi,
                                      const FdAuditOptions& opts) {
  const Eigen::Index n = lo.size();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FdAuditResult res;
  for (int s = 0; s < opts.samples; ++s) {
    Vector x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = std::isfinite(lo(j)) ? lo(j) : -10.0;
      const double b = std::isfinite(hi(j)) ? hi(j) : 10.0;
      const double pad = opts.margin * (b - a);
      x(j) = a + pad + (b - a - 2.0 * pad) * unit(rng);
    }
    Vector d(n);
    for (Eigen::Index j = 0; j < n; ++j) d(j) = gauss(rng);
    d /= d.norm();

    const OracleOutput at = pseudogradient(mpec, x);
    const Vector& y = at.lower.y;
    const double plus = reduced_value(mpec, x + opts.h * d, y);
    const double minus = reduced_value(mpec, x - opts.h * d, y);
    const double tol = opts.rel_tol * (1.0 + std::abs(at.value));
    const double forward = (plus - at.value) / opts.h;
    const double backward = (at.value - minus) / opts.h;
    const double central = (plus - minus) / (2.0 * opts.h);
    const double err = std::abs(at.xi.dot(d) - central);

    ++res.samples;
    if (err <= tol) {
      ++res.passed;
      res.worst = std::max(res.worst, err / (1.0 + std::abs(at.value)));
    } else if (std::abs(forward - backward) > tol) {
      ++res.kinks;
    } else {
      ++res.failures;
      res.worst = std::max(res.worst, err / (1.0 + std::abs(at.value)));
    }
  }
  return res;
}

OracleOutput ReducedObjective::operator()(const Vector& x) {
  OracleOutput out = pseudogradient(*mpec_, x, y_warm_);
  ++calls_;
  max_lower_residual_ = std::max(max_lower_residual_, out.lower.residual);
  y_warm_ = out.lower.y;
  return out;
}

}  // namespace mpecbt
