#include "mpecbt/reduced_newton.hpp"

#include "mpecbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpecbt {

GeneralizedEquation inner_equation(const DecomposableProblem& p) {
  GeneralizedEquation ge;
  ge.n = p.n;
  ge.m = p.m;
  ge.f = p.grad_y;
  ge.jac_x = [&p](const Vector& x, const Vector& y) -> Matrix { return p.hess_xy(x, y).transpose(); };
  ge.jac_y = p.hess_yy;
  ge.subspace = [&p](const Vector&, const Vector& y, const Vector& z) { return p.q_subspace(y, z); };
  ge.prox = p.q_prox;
  return ge;
}

EquilibriumResult inner_solve(const DecomposableProblem& p, const Vector& x, const Vector& y0, double tol) {
  SsNewtonOptions opts;
  opts.tol = tol;
  try {
    return solve_ge_ssnewton(inner_equation(p), x, y0, opts);
  } catch (const Error& e) {
    throw Error(Errc::lower_level_failure, e.what());
  }
}

double theta_value(const DecomposableProblem& p, const Vector& x, const Vector& y) {
  return p.psi(x, y) + p.q_value(y);
}

Vector theta_gradient(const DecomposableProblem& p, const Vector& x) {
  const EquilibriumResult inner = inner_solve(p, x, p.y_start);
  return p.grad_x(x, inner.y);
}

Matrix theta_generalized_jacobian(const DecomposableProblem& p, const Vector& x, const Vector& y) {
  const AdjointBasis basis = p.q_subspace(y, -p.grad_y(x, y));
  const Matrix h_xy = p.hess_xy(x, y);
  const Matrix m = p.hess_yy(x, y) * basis.z + basis.y;
  const Matrix a = -solve_dense_columns(m.transpose(), basis.z.transpose() * h_xy.transpose());
  return p.hess_xx(x, y) + h_xy * a;
}

Matrix theta_generalized_jacobian(const DecomposableProblem& p, const Vector& x) {
  return theta_generalized_jacobian(p, x, inner_solve(p, x, p.y_start).y);
}

NewtonResult ssnewton_minimize(const DecomposableProblem& p, const Vector& x0, const NewtonOptions& opts) {
  if (x0.size() != p.n) throw Error(Errc::dimension_mismatch, "x0 has wrong dimension");

  auto inner_tol = [&](double grad_norm) {
    return std::max(std::min(1e-10, 1e-2 * grad_norm * grad_norm), opts.inner_tol_floor);
  };

  NewtonResult res;
  Vector x = x0;
  EquilibriumResult inner = inner_solve(p, x, p.y_start);
  Vector g = p.grad_x(x, inner.y);
  double gnorm = g.norm();
  if (inner_tol(gnorm) < inner.residual) {
    inner = inner_solve(p, x, inner.y, inner_tol(gnorm));
    g = p.grad_x(x, inner.y);
    gnorm = g.norm();
  }

  for (int k = 0;; ++k) {
    NewtonRecord rec{x, gnorm, 0.0, 0.0};
    const double value = theta_value(p, x, inner.y);
    if (gnorm <= opts.tol) {
      res.records.push_back(rec);
      res.trace.records.push_back({k, "stop", value, 0.0, 1.0, gnorm, x});
      res.x = x;
      res.y = inner.y;
      res.value = value;
      res.grad_norm = gnorm;
      res.iterations = k;
      return res;
    }
    if (k >= opts.maxit) {
      throw Error(Errc::max_iterations_exceeded,
                  "reduced Newton stopped after " + std::to_string(k) + " iterations, |grad| = " + std::to_string(gnorm));
    }

    const Matrix gk = theta_generalized_jacobian(p, x, inner.y);
    rec.rcond = rcond_estimate(gk);
    const Vector step = solve_dense(gk, -g);
    rec.step_norm = step.norm();
    const double pred = -0.5 * g.dot(step);

    double t = 1.0;
    Vector x_next;
    EquilibriumResult inner_next;
    Vector g_next;
    for (int h = 0;; ++h) {
      x_next = x + t * step;
      inner_next = inner_solve(p, x_next, inner.y, inner_tol(gnorm));
      g_next = p.grad_x(x_next, inner_next.y);
      if (!opts.damped || g_next.norm() < gnorm) break;
      if (h >= opts.max_halvings) {
        throw Error(Errc::damping_stalled, "no decrease of |grad theta| after " + std::to_string(h) + " halvings");
      }
      t *= 0.5;
    }

    res.records.push_back(rec);
    res.trace.records.push_back({k, t == 1.0 ? "newton" : "damped", value, pred, t, gnorm, x});
    x = std::move(x_next);
    inner = std::move(inner_next);
    g = std::move(g_next);
    gnorm = g.norm();
  }
}

}  // namespace mpecbt
