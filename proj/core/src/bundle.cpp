#include "mpecbt/bundle.hpp"

#include "mpecbt/error.hpp"
#include "mpecbt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mpecbt {

double linearization_error(const BundleElement& e, const Vector& x_c, double value_c, double gamma) {
  const Vector diff = x_c - e.point;
  return std::abs(value_c - e.value - e.xi.dot(diff)) + gamma * diff.squaredNorm();
}

BundleQpResult solve_bundle_qp(const std::vector<BundleElement>& bundle, const Vector& x_c, double r,
                               const Polyhedron& admissible) {
  if (bundle.empty()) throw Error(Errc::dimension_mismatch, "bundle subproblem needs at least one element");
  if (!(r > 0.0)) throw std::invalid_argument("solve_bundle_qp: radius must be positive");
  const Eigen::Index n = x_c.size();
  const Eigen::Index k = static_cast<Eigen::Index>(bundle.size());
  const Eigen::Index l = admissible.size();
  if (admissible.dim() != n) throw Error(Errc::dimension_mismatch, "U_ad dimension differs from x_c");

  // Rows 0..k-1 are cutting planes, rows k..k+l-1 the constraints of U_ad, in (d, v).
  Matrix c = Matrix::Zero(k + l, n + 1);
  Vector e(k + l);
  for (Eigen::Index j = 0; j < k; ++j) {
    const BundleElement& el = bundle[static_cast<std::size_t>(j)];
    if (el.xi.size() != n) throw Error(Errc::dimension_mismatch, "bundle element has wrong dimension");
    c.row(j).head(n) = el.xi.transpose();
    c(j, n) = -1.0;
    e(j) = el.alpha;
  }
  for (Eigen::Index i = 0; i < l; ++i) {
    const double b = admissible.offsets()(i);
    double slack = b - admissible.normals().row(i).dot(x_c);
    if (slack < -kActivityTol * (1.0 + std::abs(b))) {
      throw Error(Errc::qp_infeasible, "serious iterate violates U_ad row " + std::to_string(i));
    }
    c.row(k + i).head(n) = admissible.normals().row(i);
    e(k + i) = std::max(slack, 0.0);
  }

  Vector z = Vector::Zero(n + 1);
  Eigen::Index first = 0;
  for (Eigen::Index j = 1; j < k; ++j)
    if (e(j) < e(first)) first = j;
  z(n) = -e(first);

  std::vector<Eigen::Index> work{first};
  Vector lambda;
  const int max_iter = static_cast<int>(10 * (n + 1 + k + l) + 50);
  int iter = 0;
  for (;; ++iter) {
    if (iter >= max_iter) throw Error(Errc::qp_infeasible, "active-set iteration limit reached");
    const Eigen::Index nw = static_cast<Eigen::Index>(work.size());
    Matrix kkt = Matrix::Zero(n + 1 + nw, n + 1 + nw);
    kkt.topLeftCorner(n, n).diagonal().setConstant(1.0 / r);
    Vector rhs = Vector::Zero(n + 1 + nw);
    rhs.head(n) = -z.head(n) / r;
    rhs(n) = -1.0;
    for (Eigen::Index w = 0; w < nw; ++w) {
      kkt.block(n + 1 + w, 0, 1, n + 1) = c.row(work[static_cast<std::size_t>(w)]);
      kkt.block(0, n + 1 + w, n + 1, 1) = c.row(work[static_cast<std::size_t>(w)]).transpose();
    }
    Vector sol;
    try {
      sol = solve_dense(kkt, rhs);
    } catch (const Error& err) {
      throw Error(Errc::qp_infeasible, std::string("degenerate working set: ") + err.what());
    }
    const Vector p = sol.head(n + 1);
    lambda = sol.tail(nw);

    if (p.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      Eigen::Index worst = -1;
      double most_negative = -1e-12;
      for (Eigen::Index w = 0; w < nw; ++w) {
        if (lambda(w) < most_negative) {
          most_negative = lambda(w);
          worst = w;
        }
      }
      if (worst < 0) break;
      work.erase(work.begin() + worst);
      continue;
    }

    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < k + l; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double cp = c.row(i).dot(p);
      if (cp <= 1e-14 * c.row(i).norm() * p.norm()) continue;
      const double t = std::max((e(i) - c.row(i).dot(z)) / cp, 0.0);
      if (t < step) {
        step = t;
        blocking = i;
      }
    }
    z += step * p;
    if (blocking >= 0) work.push_back(blocking);
  }

  BundleQpResult out;
  out.iterations = iter;
  out.d = z.head(n);
  out.v = z(n);
  out.pred_decrease = -out.v;
  out.weights = Vector::Zero(k);
  out.bound_multipliers = Vector::Zero(l);
  for (std::size_t w = 0; w < work.size(); ++w) {
    const double mult = std::max(lambda(static_cast<Eigen::Index>(w)), 0.0);
    if (work[w] < k) {
      out.weights(work[w]) = mult;
    } else {
      out.bound_multipliers(work[w] - k) = mult;
    }
  }
  out.aggregate_xi = Vector::Zero(n);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (out.weights(j) == 0.0) continue;
    out.aggregate_xi += out.weights(j) * bundle[static_cast<std::size_t>(j)].xi;
    out.aggregate_alpha += out.weights(j) * bundle[static_cast<std::size_t>(j)].alpha;
  }
  return out;
}

const char* to_string(BtStatus s) noexcept {
  switch (s) {
    case BtStatus::converged:
      return "converged";
    case BtStatus::max_iterations:
      return "max_iterations";
  }
  return "unknown";
}

BtResult bt_minimize(const BtOracle& oracle, const Polyhedron& admissible, const Vector& x0,
                     const BtOptions& opts) {
  if (!(0.0 < opts.m_l && opts.m_l < opts.m_r && opts.m_r < 1.0) || !(opts.r_min > 0.0)) {
    throw std::invalid_argument("bt_minimize: require 0 < m_L < m_R < 1 and r_min > 0");
  }
  if (admissible.dim() != x0.size()) throw Error(Errc::dimension_mismatch, "x0 dimension differs from U_ad");
  if (!admissible.contains(x0)) throw Error(Errc::infeasible_point, "x0 is outside U_ad");

  BtResult res;
  auto evaluate = [&](const Vector& x) {
    OracleValue ov;
    try {
      ov = oracle(x);
    } catch (const Error& e) {
      throw Error(Errc::oracle_failure, e.what());
    }
    ++res.oracle_calls;
    if (!std::isfinite(ov.value) || ov.xi.size() != x.size() || !ov.xi.allFinite()) {
      throw Error(Errc::oracle_failure, "oracle returned a non-finite value or pseudogradient");
    }
    return ov;
  };

  Vector x_c = x0;
  OracleValue at_c = evaluate(x_c);
  std::vector<BundleElement> bundle{{x_c, at_c.value, at_c.xi, 0.0}};
  double r = std::clamp(opts.r0, opts.r_min, opts.r_max);
  int serious_streak = 0;
  BundleQpResult qp;

  res.status = BtStatus::max_iterations;
  int iter = 1;
  for (; iter <= opts.maxit; ++iter) {
    qp = solve_bundle_qp(bundle, x_c, r, admissible);
    const double stat = stationarity_residual(admissible, x_c, qp.aggregate_xi);
    TraceRecord rec{iter, "", at_c.value, qp.pred_decrease, r, stat, x_c};

    if (qp.pred_decrease <= opts.epsilon) {
      const Vector g = qp.aggregate_xi + admissible.normals().transpose() * qp.bound_multipliers;
      if (g.norm() > 10.0 * opts.epsilon && r < opts.r_max) {
        r = std::min(4.0 * r, opts.r_max);
        rec.step_type = "reset";
        res.trace.records.push_back(std::move(rec));
        continue;
      }
      rec.step_type = "stop";
      res.trace.records.push_back(std::move(rec));
      res.status = BtStatus::converged;
      break;
    }

    const Vector x_qp = x_c;
    const double value_qp = at_c.value;
    const Vector x_new = x_c + qp.d;
    const OracleValue at_new = evaluate(x_new);
    BundleElement fresh{x_new, at_new.value, at_new.xi, 0.0};

    if (at_new.value <= at_c.value + opts.m_l * qp.v) {
      x_c = x_new;
      at_c = at_new;
      for (BundleElement& el : bundle) el.alpha = linearization_error(el, x_c, at_c.value, opts.gamma);
      bundle.push_back(std::move(fresh));
      ++res.serious_steps;
      if (++serious_streak >= 2) r = std::min(2.0 * r, opts.r_max);
      rec.step_type = "serious";
    } else {
      fresh.alpha = linearization_error(fresh, x_c, at_c.value, opts.gamma);
      const double cut_at_d = fresh.xi.dot(qp.d) - fresh.alpha;
      bundle.push_back(std::move(fresh));
      serious_streak = 0;
      if (cut_at_d < opts.m_r * qp.v) r = std::max(0.5 * r, opts.r_min);
      rec.step_type = "null";
    }
    rec.value = at_c.value;
    rec.x = x_c;
    res.trace.records.push_back(std::move(rec));

    if (static_cast<int>(bundle.size()) > opts.max_bundle) {
      // Replace everything but the element at x_c and the newest one by the
      // aggregate linearization of the last subproblem.
      BundleElement aggregate{x_qp, value_qp - qp.aggregate_alpha, qp.aggregate_xi, 0.0};
      aggregate.alpha = linearization_error(aggregate, x_c, at_c.value, opts.gamma);
      std::vector<BundleElement> kept{std::move(aggregate)};
      for (const BundleElement& el : bundle) {
        if (el.point == x_c && el.value == at_c.value) {
          kept.push_back(el);
          break;
        }
      }
      if (!(bundle.back().point == x_c)) kept.push_back(bundle.back());
      bundle = std::move(kept);
    }
  }

  res.x = x_c;
  res.value = at_c.value;
  res.xi = at_c.xi;
  res.aggregate_xi = qp.aggregate_xi;
  res.pred_decrease = qp.pred_decrease;
  res.stat_residual = stationarity_residual(admissible, x_c, qp.aggregate_xi);
  res.iterations = std::min(iter, opts.maxit);
  return res;
}

}  // namespace mpecbt
