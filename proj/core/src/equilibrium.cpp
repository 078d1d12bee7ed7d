#include "mpecbt/equilibrium.hpp"

#include "mpecbt/error.hpp"

#include <cmath>
#include <string>

namespace mpecbt {

double natural_residual(const GeneralizedEquation& ge, const Vector& x, const Vector& y, double lambda) {
  if (!ge.prox) throw Error(Errc::prox_unavailable, "generalized equation has no proximal map");
  if (!(lambda > 0.0)) throw std::invalid_argument("natural_residual: lambda must be positive");
  const Vector v = y - lambda * ge.f(x, y);
  return (y - ge.prox(v, lambda)).norm() / lambda;
}

EquilibriumResult solve_ge_ssnewton(const GeneralizedEquation& ge, const Vector& x, const Vector& y0,
                                    const SsNewtonOptions& opts) {
  if (!ge.prox) throw Error(Errc::prox_unavailable, "semismooth Newton needs the proximal map of q");
  if (y0.size() != ge.m || x.size() != ge.n) throw Error(Errc::dimension_mismatch, "solve_ge_ssnewton: bad x or y0");

  Vector y = y0;
  double lambda = opts.lambda;
  double res = natural_residual(ge, x, y);
  std::vector<double> history{res};

  for (int it = 0;; ++it) {
    const Vector v = y - lambda * ge.f(x, y);
    const Vector y_hat = ge.prox(v, lambda);
    const Vector y_star = (v - y_hat) / lambda;
    AdjointBasis basis = ge.subspace(x, y_hat, y_star);

    if (res <= opts.tol) {
      EquilibriumResult out;
      out.y = y;
      out.residual = res;
      out.iterations = it;
      out.subspace = std::move(basis);
      out.residual_history = std::move(history);
      return out;
    }
    if (it >= opts.max_iter) {
      throw Error(Errc::max_iterations_exceeded,
                  "semismooth Newton stopped after " + std::to_string(it) + " iterations, residual " +
                      std::to_string(res));
    }

    const Matrix newton = ge.jac_y(x, y_hat) * basis.z + basis.y;
    const Vector rhs = -(ge.f(x, y_hat) + y_star);
    Vector p;
    try {
      p = solve_dense(newton, rhs);
    } catch (const Error& e) {
      throw Error(Errc::singular_newton_matrix, e.what());
    }
    Vector y_next = y_hat + basis.z * p;
    double res_next = natural_residual(ge, x, y_next);

    if (!(res_next < res)) lambda = std::max(0.5 * lambda, opts.min_lambda);
    if (!(res_next <= opts.fallback_factor * res)) {
      y_next = y_hat;
      res_next = natural_residual(ge, x, y_next);
    }
    y = std::move(y_next);
    res = res_next;
    history.push_back(res);
  }
}

double fischer_burmeister(double a, double b) { return std::hypot(a, b) - a - b; }

namespace {

struct FbSystem {
  const SmoothInequalitySet& gamma;
  const SmoothObjective& objective;
  Eigen::Index m;
  Eigen::Index l;

  Vector residual(const Vector& z) const {
    const Vector y = z.head(m);
    const Vector lam = z.tail(l);
    Vector phi(m + l);
    phi.head(m) = objective.gradient(y);
    if (l > 0) {
      phi.head(m) += gamma.jacobian(y).transpose() * lam;
      const Vector g = gamma.values(y);
      for (Eigen::Index i = 0; i < l; ++i) phi(m + i) = fischer_burmeister(lam(i), -g(i));
    }
    return phi;
  }

  Matrix jacobian(const Vector& z) const {
    const Vector y = z.head(m);
    const Vector lam = z.tail(l);
    Matrix jac = Matrix::Zero(m + l, m + l);
    Matrix h = objective.hessian(y);
    if (l > 0) {
      const Matrix jg = gamma.jacobian(y);
      const Vector g = gamma.values(y);
      for (Eigen::Index i = 0; i < l; ++i)
        if (lam(i) != 0.0) h += lam(i) * gamma.hessian(i, y);
      jac.topRightCorner(m, l) = jg.transpose();
      for (Eigen::Index i = 0; i < l; ++i) {
        const double a = lam(i);
        const double b = -g(i);
        const double r = std::hypot(a, b);
        double da = 1.0 / std::sqrt(2.0) - 1.0;
        double db = da;
        if (r > 0.0) {
          da = a / r - 1.0;
          db = b / r - 1.0;
        }
        jac.block(m + i, 0, 1, m) = -db * jg.row(i);
        jac(m + i, m + i) = da;
      }
    }
    jac.topLeftCorner(m, m) = h;
    return jac;
  }
};

}  // namespace

KktResult solve_kkt_fb(const SmoothInequalitySet& gamma, const SmoothObjective& objective, const Vector& y0,
                       const Vector& lambda0, const KktOptions& opts) {
  const Eigen::Index m = y0.size();
  const Eigen::Index l = gamma.count;
  if (lambda0.size() != l || (l > 0 && gamma.dim != m)) {
    throw Error(Errc::dimension_mismatch, "solve_kkt_fb: inconsistent dimensions");
  }
  const FbSystem sys{gamma, objective, m, l};

  Vector z(m + l);
  z << y0, lambda0;
  Vector phi = sys.residual(z);
  double merit = phi.norm();

  auto complementarity = [&](const Vector& zz) {
    if (l == 0) return 0.0;
    return (zz.tail(l).cwiseProduct(gamma.values(zz.head(m)))).cwiseAbs().maxCoeff();
  };

  for (int it = 0;; ++it) {
    if (merit <= opts.tol && complementarity(z) <= opts.tol) {
      z.tail(l) = z.tail(l).cwiseMax(0.0);
      KktResult out;
      out.y = z.head(m);
      out.lambda = z.tail(l);
      out.merit = sys.residual(z).norm();
      out.iterations = it;
      return out;
    }
    if (it >= opts.max_iter) {
      throw Error(Errc::max_iterations_exceeded,
                  "FB Newton stopped after " + std::to_string(it) + " iterations, merit " + std::to_string(merit));
    }

    const Matrix jac = sys.jacobian(z);
    const Vector grad = jac.transpose() * phi;  // gradient of 0.5 ||Phi||^2
    const double psi = 0.5 * merit * merit;

    // Trial points keep lambda >= 0; negative multipliers can make the
    // Lagrangian Hessian indefinite and trap the merit in a spurious minimum.
    auto try_direction = [&](const Vector& d, bool project) -> bool {
      if (!d.allFinite() || !(grad.dot(d) < 0.0)) return false;
      double t = 1.0;
      for (int k = 0; k < opts.max_backtracks; ++k, t *= 0.5) {
        Vector trial = z + t * d;
        if (project) trial.tail(l) = trial.tail(l).cwiseMax(0.0);
        const double decrease = grad.dot(trial - z);
        if (!(decrease < 0.0)) continue;
        const Vector phi_t = sys.residual(trial);
        const double psi_t = 0.5 * phi_t.squaredNorm();
        if (psi_t <= psi + opts.armijo * decrease) {
          z = std::move(trial);
          phi = phi_t;
          merit = phi_t.norm();
          return true;
        }
      }
      return false;
    };

    bool moved = false;
    if (rcond_estimate(jac) > 1e-14) {
      try {
        moved = try_direction(solve_dense(jac, -phi), true);
      } catch (const Error&) {
        moved = false;
      }
    }
    if (!moved) {
      const double mu = std::min(1.0, merit);
      const Matrix normal = jac.transpose() * jac + mu * Matrix::Identity(m + l, m + l);
      moved = try_direction(normal.ldlt().solve(-grad), true);
    }
    if (!moved) moved = try_direction(-grad, true);
    if (!moved) moved = try_direction(-grad, false);
    if (!moved) {
      throw Error(Errc::line_search_stalled, "Armijo search failed at merit " + std::to_string(merit));
    }
  }
}

}  // namespace mpecbt
