#include "mpecbt/problems.hpp"

#include "mpecbt/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace mpecbt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Eigen::Vector2d;

/// q(y) = sum_j q_j(y_j) with scalar piecewise-linear-plus-box parts.
struct SeparableQ {
  std::vector<ScalarPiecewiseConvex> parts;

  Vector prox(const Vector& v, double lambda) const {
    Vector out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) out(j) = parts[static_cast<std::size_t>(j)].prox(v(j), lambda);
    return out;
  }
  double value(const Vector& y) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < y.size(); ++j) s += parts[static_cast<std::size_t>(j)].value(y(j));
    return s;
  }
  Vector selector(const Vector& y) const {
    Vector out(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) out(j) = parts[static_cast<std::size_t>(j)].selector(y(j));
    return out;
  }
  AdjointBasis subspace(const Vector& y, const Vector& y_star) const {
    std::vector<BlockBasis> blocks;
    blocks.reserve(parts.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const ScalarBasis sb = scalar_pc_subspace(parts[static_cast<std::size_t>(j)], y(j), y_star(j));
      blocks.push_back({Matrix::Constant(1, 1, sb.z), Matrix::Constant(1, 1, sb.y)});
    }
    return separable_subspace(blocks);
  }
};

Polyhedron nonnegative_orthant(Eigen::Index m) { return Polyhedron(-Matrix::Identity(m, m), Vector::Zero(m)); }

EquilibriumResult run_ssnewton(const GeneralizedEquation& ge, const Vector& x, const Vector& y0, double tol) {
  SsNewtonOptions opts;
  opts.tol = tol;
  return solve_ge_ssnewton(ge, x, y0, opts);
}

Polyhedron bilevel_toy_set() {
  Matrix a(2, 2);
  a << -0.25, -1.0, -0.5, 1.0;
  return Polyhedron(a, Vector::Zero(2));
}

}  // namespace

// ---------------------------------------------------------------------------
// LCP toy

MpecProblem lcp_toy() {
  MpecProblem p;
  p.name = "lcp_toy";
  const Polyhedron orthant = nonnegative_orthant(2);

  GeneralizedEquation& ge = p.ge;
  ge.n = 1;
  ge.m = 2;
  ge.f = [](const Vector& x, const Vector& y) {
    Vector r(2);
    r << y(0) + y(1) - x(0), y(1) + x(0);
    return r;
  };
  ge.jac_x = [](const Vector&, const Vector&) {
    Matrix j(2, 1);
    j << -1.0, 1.0;
    return j;
  };
  ge.jac_y = [](const Vector&, const Vector&) {
    Matrix j(2, 2);
    j << 1.0, 1.0, 0.0, 1.0;
    return j;
  };
  ge.subspace = [orthant](const Vector&, const Vector& y, const Vector&) { return polyhedral_subspace(orthant, y); };
  ge.prox = [](const Vector& v, double) -> Vector { return v.cwiseMax(0.0); };

  p.phi = [](const Vector&, const Vector& y) { return -0.5 * y(0) + y(1); };
  p.selector = [](const Vector&, const Vector&) {
    Vector gy(2);
    gy << -0.5, 1.0;
    return std::pair<Vector, Vector>{Vector::Zero(1), gy};
  };
  p.admissible = Polyhedron::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  p.y_start = Vector::Zero(2);
  p.lower = [ge](const Vector& x, const Vector& y0) { return run_ssnewton(ge, x, y0, 1e-12); };
  return p;
}

LcpToyReference lcp_toy_reference(double x) {
  LcpToyReference r;
  r.s = Vector::Zero(2);
  if (x >= 0.0) {
    r.s(0) = x;
    r.theta = -0.5 * x;
  } else {
    r.s(1) = -x;
    r.theta = -x;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Polyhedral bilevel toy

Vector enumerate_polyhedral_qp(const Matrix& h, const Vector& c, const Polyhedron& poly) {
  const Eigen::Index m = c.size();
  const Eigen::Index l = poly.size();
  if (l > 20) throw Error(Errc::dimension_mismatch, "face enumeration limited to 20 constraints");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());

  bool found = false;
  double best = kInf;
  Vector best_y;
  for (unsigned long mask = 0; mask < (1UL << l); ++mask) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < l; ++i)
      if (mask & (1UL << i)) rows.push_back(i);
    const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
    Matrix aw(k, m);
    Vector bw(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      aw.row(r) = poly.normals().row(rows[static_cast<std::size_t>(r)]);
      bw(r) = poly.offsets()(rows[static_cast<std::size_t>(r)]);
    }
    Vector y_part = Vector::Zero(m);
    Matrix null_basis = Matrix::Identity(m, m);
    if (k > 0) {
      const QrResult qr = qr_pivoted(aw.transpose());
      if (qr.rank < k) continue;
      null_basis = orthonormal_split(qr).kernel;
      y_part = aw.completeOrthogonalDecomposition().solve(bw);
    }
    Vector y = y_part;
    if (null_basis.cols() > 0) {
      const Matrix reduced = null_basis.transpose() * h * null_basis;
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (reduced + reduced.transpose()));
      if (eig.eigenvalues().minCoeff() <= 1e-12 * scale) continue;
      const Vector rhs = -(null_basis.transpose() * (h * y_part + c));
      y += null_basis * solve_dense(reduced, rhs);
    }
    if (!poly.contains(y, 1e-10)) continue;
    const double obj = 0.5 * y.dot(h * y) + c.dot(y);
    if (!found || obj < best - 1e-14 * (1.0 + std::abs(best))) {
      found = true;
      best = obj;
      best_y = y;
    }
  }
  if (!found) throw Error(Errc::lower_level_failure, "no face carries a finite minimizer");
  return best_y;
}

MpecProblem bilevel_toy() {
  MpecProblem p;
  p.name = "bilevel_toy";
  const Polyhedron gamma = bilevel_toy_set();

  GeneralizedEquation& ge = p.ge;
  ge.n = 1;
  ge.m = 2;
  ge.f = [](const Vector& x, const Vector& y) {
    Vector r(2);
    r << y(0) - x(0), -y(1);
    return r;
  };
  ge.jac_x = [](const Vector&, const Vector&) {
    Matrix j(2, 1);
    j << -1.0, 0.0;
    return j;
  };
  ge.jac_y = [](const Vector&, const Vector&) -> Matrix { return Vector2d(1.0, -1.0).asDiagonal(); };
  ge.subspace = [gamma](const Vector&, const Vector& y, const Vector&) { return polyhedral_subspace(gamma, y); };

  p.phi = [](const Vector& x, const Vector& y) { return -x(0) + y(0); };
  p.selector = [](const Vector&, const Vector&) {
    return std::pair<Vector, Vector>{Vector::Constant(1, -1.0), Vector(Vector2d(1.0, 0.0))};
  };
  p.admissible = Polyhedron::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  p.y_start = Vector::Zero(2);
  p.lower = [gamma, f = ge.f](const Vector& x, const Vector&) {
    const Matrix h = Vector2d(1.0, -1.0).asDiagonal();
    const Vector c = Vector2d(-x(0), 0.0);
    EquilibriumResult res;
    res.y = enumerate_polyhedral_qp(h, c, gamma);
    res.residual = stationarity_residual(gamma, res.y, f(x, res.y));
    return res;
  };
  return p;
}

BilevelToyReference bilevel_toy_reference(double x) {
  BilevelToyReference r;
  if (x >= 0.0) {
    r.sigma = Vector2d(4.0 * x / 3.0, 2.0 * x / 3.0);
    r.reduced = x / 3.0;
  } else {
    r.sigma = Vector::Zero(2);
    r.reduced = -x;
  }
  return r;
}

std::array<BasisPair, 4> bilevel_toy_subspaces() {
  Matrix z1(2, 2), y1(2, 2), z3(2, 2), y3(2, 2);
  z1 << 4.0 / 5, 2.0 / 5, 2.0 / 5, 1.0 / 5;
  y1 << 1.0 / 5, -2.0 / 5, -2.0 / 5, 4.0 / 5;
  z3 << 16.0 / 17, -4.0 / 17, -4.0 / 17, 1.0 / 17;
  y3 << 1.0 / 17, 4.0 / 17, 4.0 / 17, 16.0 / 17;
  const Matrix id = Matrix::Identity(2, 2);
  const Matrix zero = Matrix::Zero(2, 2);
  return {BasisPair{z1, y1}, BasisPair{zero, id}, BasisPair{z3, y3}, BasisPair{id, zero}};
}

std::array<Matrix, 4> bilevel_toy_listed_newton_matrices() {
  Matrix m1(2, 2), m3(2, 2), m4(2, 2);
  m1 << 1.0, 0.0, -4.0 / 5, 3.0 / 5;
  m3 << 1.0, 0.0, 8.0 / 17, 14.0 / 17;
  m4 << 1.0, 0.0, 0.0, -1.0;
  return {m1, Matrix::Identity(2, 2), m3, m4};
}

// ---------------------------------------------------------------------------
// Projection bilevel problem

SmoothInequalitySet projection_constraints() {
  SmoothInequalitySet g;
  g.count = 5;
  g.dim = 3;
  g.values = [](const Vector& y) {
    Vector v(5);
    v << 0.5 * y(0) * y(0) + y(0) - y(2), 0.5 * y(0) * y(0) - y(0) - y(2), 0.5 * y(1) * y(1) + y(1) - y(2),
        0.5 * y(1) * y(1) - y(1) - y(2), -y(2);
    return v;
  };
  g.jacobian = [](const Vector& y) {
    Matrix j(5, 3);
    j << y(0) + 1.0, 0.0, -1.0,  //
        y(0) - 1.0, 0.0, -1.0,   //
        0.0, y(1) + 1.0, -1.0,   //
        0.0, y(1) - 1.0, -1.0,   //
        0.0, 0.0, -1.0;
    return j;
  };
  g.hessian = [](Eigen::Index i, const Vector&) {
    Matrix h = Matrix::Zero(3, 3);
    if (i == 0 || i == 1) h(0, 0) = 1.0;
    if (i == 2 || i == 3) h(1, 1) = 1.0;
    return h;
  };
  return g;
}

MpecProblem projection_bilevel(const Vector& y0, double lower, double upper) {
  if (y0.size() != 3) throw Error(Errc::dimension_mismatch, "projection problem needs a target in R^3");
  MpecProblem p;
  p.name = "projection_bilevel";
  const SmoothInequalitySet gamma = projection_constraints();
  p.inequality = gamma;

  GeneralizedEquation& ge = p.ge;
  ge.n = 3;
  ge.m = 3;
  ge.f = [y0](const Vector& x, const Vector& y) -> Vector { return x.cwiseProduct(y - y0); };
  ge.jac_x = [y0](const Vector&, const Vector& y) -> Matrix { return Vector(y - y0).asDiagonal(); };
  ge.jac_y = [](const Vector& x, const Vector&) -> Matrix { return x.asDiagonal(); };
  ge.subspace = [gamma](const Vector&, const Vector& y, const Vector& z) {
    return inequality_subspace(gamma, y, lagrange_multipliers(gamma, y, z));
  };

  p.phi = [](const Vector&, const Vector& y) { return y.lpNorm<1>(); };
  p.selector = [](const Vector&, const Vector& y) {
    Vector gy(3);
    for (Eigen::Index i = 0; i < 3; ++i) gy(i) = y(i) >= 0.0 ? 1.0 : -1.0;
    return std::pair<Vector, Vector>{Vector::Zero(3), gy};
  };
  p.admissible = Polyhedron::box(Vector::Constant(3, lower), Vector::Constant(3, upper));
  p.y_start = Vector::Zero(3);
  p.lower = [gamma, y0](const Vector& x, const Vector& ystart) {
    SmoothObjective obj;
    obj.gradient = [x, y0](const Vector& y) -> Vector { return x.cwiseProduct(y - y0); };
    obj.hessian = [x](const Vector&) -> Matrix { return x.asDiagonal(); };
    const KktResult kkt = solve_kkt_fb(gamma, obj, ystart, Vector::Zero(gamma.count));
    EquilibriumResult res;
    res.y = kkt.y;
    res.residual = kkt.merit;
    res.iterations = kkt.iterations;
    res.multipliers = kkt.lambda;
    return res;
  };
  return p;
}

// ---------------------------------------------------------------------------
// Oligopoly

namespace {

const OligopolyFirm& firm(const OligopolyModel& model, Eigen::Index i) {
  return i == 0 ? model.leader : model.followers[static_cast<std::size_t>(i - 1)];
}

Vector own_production(const OligopolyModel& model, Eigen::Index i, const Vector& x, const Vector& y) {
  return i == 0 ? x : Vector(y.segment((i - 1) * model.n(), model.n()));
}

Vector totals(const OligopolyModel& model, const Vector& x, const Vector& y) {
  Vector t = x;
  for (Eigen::Index k = 0; k < model.l(); ++k) t += y.segment(k * model.n(), model.n());
  return t;
}

double smooth_loss(const OligopolyModel& model, Eigen::Index i, const Vector& x, const Vector& y) {
  const OligopolyFirm& fm = firm(model, i);
  const Vector own = own_production(model, i, x, y);
  const Vector price = model.a - model.b.cwiseProduct(totals(model, x, y));
  return fm.d.dot(own) + 0.5 * fm.e.dot(own.cwiseProduct(own)) - price.dot(own);
}

std::vector<ScalarPiecewiseConvex> change_costs(const OligopolyFirm& fm) {
  std::vector<ScalarPiecewiseConvex> parts;
  for (Eigen::Index j = 0; j < fm.d.size(); ++j) {
    parts.emplace_back(std::vector<double>{fm.ref(j)}, std::vector<double>{-fm.down(j), fm.up(j)}, fm.lower(j),
                       fm.upper(j));
  }
  return parts;
}

/// Cournot-Nash GE among `players` with the remaining production `x` fixed.
/// Each player's block is d + e y_i - (a - b T) + b y_i.
struct CournotBlocks {
  Vector a, b;
  std::vector<const OligopolyFirm*> players;

  Eigen::Index n() const { return a.size(); }
  Eigen::Index count() const { return static_cast<Eigen::Index>(players.size()); }

  Vector f(const Vector& fixed, const Vector& y) const {
    const Eigen::Index n = this->n();
    Vector t = fixed;
    for (Eigen::Index k = 0; k < count(); ++k) t += y.segment(k * n, n);
    const Vector price = a - b.cwiseProduct(t);
    Vector out(n * count());
    for (Eigen::Index k = 0; k < count(); ++k) {
      const OligopolyFirm& fm = *players[static_cast<std::size_t>(k)];
      const Vector yk = y.segment(k * n, n);
      out.segment(k * n, n) = fm.d + fm.e.cwiseProduct(yk) - price + b.cwiseProduct(yk);
    }
    return out;
  }

  Matrix jac_y() const {
    const Eigen::Index n = this->n();
    Matrix j = Matrix::Zero(n * count(), n * count());
    for (Eigen::Index k = 0; k < count(); ++k) {
      for (Eigen::Index r = 0; r < count(); ++r) j.block(k * n, r * n, n, n) = b.asDiagonal();
      j.block(k * n, k * n, n, n) += Vector(players[static_cast<std::size_t>(k)]->e + b).asDiagonal();
    }
    return j;
  }

  Matrix jac_fixed() const {
    const Eigen::Index n = this->n();
    Matrix j(n * count(), n);
    for (Eigen::Index k = 0; k < count(); ++k) j.block(k * n, 0, n, n) = b.asDiagonal();
    return j;
  }
};

GeneralizedEquation cournot_equation(const CournotBlocks& blocks, const SeparableQ& q, Eigen::Index fixed_dim) {
  auto bl = std::make_shared<const CournotBlocks>(blocks);
  auto sq = std::make_shared<const SeparableQ>(q);
  GeneralizedEquation ge;
  ge.n = fixed_dim;
  ge.m = bl->n() * bl->count();
  ge.f = [bl, fixed_dim](const Vector& x, const Vector& y) -> Vector {
    return bl->f(fixed_dim == 0 ? Vector(Vector::Zero(bl->n())) : x, y);
  };
  ge.jac_x = [bl, fixed_dim](const Vector&, const Vector&) -> Matrix {
    return fixed_dim == 0 ? Matrix(bl->n() * bl->count(), 0) : bl->jac_fixed();
  };
  ge.jac_y = [bl](const Vector&, const Vector&) { return bl->jac_y(); };
  ge.subspace = [sq](const Vector&, const Vector& y, const Vector& z) { return sq->subspace(y, z); };
  ge.prox = [sq](const Vector& v, double lambda) { return sq->prox(v, lambda); };
  return ge;
}

SeparableQ stacked_change_costs(const std::vector<const OligopolyFirm*>& players) {
  SeparableQ q;
  for (const OligopolyFirm* fm : players) {
    auto parts = change_costs(*fm);
    q.parts.insert(q.parts.end(), parts.begin(), parts.end());
  }
  return q;
}

Vector start_point(const std::vector<const OligopolyFirm*>& players) {
  Vector y(static_cast<Eigen::Index>(players.size()) * players.front()->d.size());
  Eigen::Index k = 0;
  for (const OligopolyFirm* fm : players) {
    for (Eigen::Index j = 0; j < fm->d.size(); ++j) y(k++) = std::clamp(fm->ref(j), fm->lower(j), fm->upper(j));
  }
  return y;
}

}  // namespace

double OligopolyModel::loss(Eigen::Index i, const Vector& x, const Vector& y) const {
  return smooth_loss(*this, i, x, y) + change_cost(i, own_production(*this, i, x, y));
}

Vector OligopolyModel::loss_gradient(Eigen::Index i, const Vector& x, const Vector& y) const {
  const OligopolyFirm& fm = firm(*this, i);
  const Vector own = own_production(*this, i, x, y);
  const Vector price = a - b.cwiseProduct(totals(*this, x, y));
  return fm.d + fm.e.cwiseProduct(own) - price + b.cwiseProduct(own);
}

double OligopolyModel::change_cost(Eigen::Index i, const Vector& t) const {
  const auto parts = change_costs(firm(*this, i));
  double s = 0.0;
  for (Eigen::Index j = 0; j < t.size(); ++j) s += parts[static_cast<std::size_t>(j)].value(t(j));
  return s;
}

void OligopolyModel::validate() const {
  const Eigen::Index nn = n();
  if (nn == 0) throw Error(Errc::dimension_mismatch, "oligopoly needs at least one commodity");
  if (b.size() != nn) throw Error(Errc::dimension_mismatch, "demand slopes b must have n entries");
  if (followers.empty()) throw Error(Errc::dimension_mismatch, "oligopoly needs at least one follower");
  if ((b.array() <= 0.0).any()) throw Error(Errc::dimension_mismatch, "demand slopes must be positive");
  for (Eigen::Index i = 0; i <= l(); ++i) {
    const OligopolyFirm& fm = firm(*this, i);
    for (const Vector* v : {&fm.d, &fm.e, &fm.ref, &fm.up, &fm.down, &fm.lower, &fm.upper})
      if (v->size() != nn) throw Error(Errc::dimension_mismatch, "firm " + std::to_string(i) + " has wrong dimensions");
    if ((fm.e.array() < 0.0).any() || (fm.up.array() < 0.0).any() || (fm.down.array() < 0.0).any())
      throw Error(Errc::dimension_mismatch, "firm " + std::to_string(i) + ": cost coefficients must be nonnegative");
    if ((fm.lower.array() > fm.upper.array()).any())
      throw Error(Errc::dimension_mismatch, "firm " + std::to_string(i) + ": empty production box");
  }
}

double OligopolyModel::finite_difference_audit(int points, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sample = [&](const OligopolyFirm& fm) {
    Vector t(n());
    for (Eigen::Index j = 0; j < n(); ++j) {
      const double lo = std::isfinite(fm.lower(j)) ? fm.lower(j) : fm.ref(j) - 10.0;
      const double hi = std::isfinite(fm.upper(j)) ? fm.upper(j) : fm.ref(j) + 10.0;
      t(j) = lo + (hi - lo) * unit(rng);
    }
    return t;
  };
  double worst = 0.0;
  for (int s = 0; s < points; ++s) {
    const Vector x = sample(leader);
    Vector y(n() * l());
    for (Eigen::Index k = 0; k < l(); ++k) y.segment(k * n(), n()) = sample(followers[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 1; i <= l(); ++i) {
      const Vector g = loss_gradient(i, x, y);
      for (Eigen::Index j = 0; j < n(); ++j) {
        const Eigen::Index idx = (i - 1) * n() + j;
        const double h = 1e-5 * (1.0 + std::abs(y(idx)));
        Vector yp = y, ym = y;
        yp(idx) += h;
        ym(idx) -= h;
        const double fd = (smooth_loss(*this, i, x, yp) - smooth_loss(*this, i, x, ym)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - g(j)) / (1.0 + std::abs(g(j))));
      }
    }
  }
  return worst;
}

MpecProblem build_oligopoly(const OligopolyModel& model) {
  model.validate();
  auto mdl = std::make_shared<const OligopolyModel>(model);
  std::vector<const OligopolyFirm*> followers;
  for (const OligopolyFirm& fm : mdl->followers) followers.push_back(&fm);

  MpecProblem p;
  p.name = "oligopoly";
  p.ge = cournot_equation(CournotBlocks{mdl->a, mdl->b, followers}, stacked_change_costs(followers), mdl->n());

  const auto leader_q = std::make_shared<const SeparableQ>(SeparableQ{change_costs(mdl->leader)});
  p.phi = [mdl](const Vector& x, const Vector& y) { return mdl->loss(0, x, y); };
  p.selector = [mdl, leader_q](const Vector& x, const Vector& y) {
    Vector gx = mdl->loss_gradient(0, x, y) + leader_q->selector(x);
    Vector gy(y.size());
    for (Eigen::Index k = 0; k < mdl->l(); ++k) gy.segment(k * mdl->n(), mdl->n()) = mdl->b.cwiseProduct(x);
    return std::pair<Vector, Vector>{std::move(gx), std::move(gy)};
  };
  p.admissible = Polyhedron::box(mdl->leader.lower, mdl->leader.upper);
  p.y_start = start_point(followers);
  p.lower = [ge = p.ge, mdl](const Vector& x, const Vector& y0) { return run_ssnewton(ge, x, y0, 1e-10); };
  return p;
}

NashPoint oligopoly_nash(const OligopolyModel& model) {
  model.validate();
  std::vector<const OligopolyFirm*> players{&model.leader};
  for (const OligopolyFirm& fm : model.followers) players.push_back(&fm);
  const GeneralizedEquation ge =
      cournot_equation(CournotBlocks{model.a, model.b, players}, stacked_change_costs(players), 0);
  const EquilibriumResult res = run_ssnewton(ge, Vector(0), start_point(players), 1e-10);
  NashPoint out;
  out.leader = res.y.head(model.n());
  out.followers = res.y.tail(model.n() * model.l());
  out.residual = res.residual;
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic decomposable instances

void QuadraticModel::validate() const {
  const Eigen::Index nn = n();
  const Eigen::Index mm = m();
  if (h.rows() != mm || h.cols() != mm) throw Error(Errc::dimension_mismatch, "H must be m x m");
  if (c.size() != mm || l1_weight.size() != mm || y_lower.size() != mm || y_upper.size() != mm)
    throw Error(Errc::dimension_mismatch, "c, l1_weight and y bounds must have m entries");
  if (p.rows() != nn || p.cols() != nn) throw Error(Errc::dimension_mismatch, "P must be n x n");
  if (r.size() != nn || x_lower.size() != nn || x_upper.size() != nn)
    throw Error(Errc::dimension_mismatch, "r and x bounds must have n entries");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + h.cwiseAbs().maxCoeff()))
    throw Error(Errc::dimension_mismatch, "H must be symmetric");
  if (Eigen::LLT<Matrix>(h).info() != Eigen::Success) throw Error(Errc::dimension_mismatch, "H must be positive definite");
  if ((l1_weight.array() < 0.0).any()) throw Error(Errc::dimension_mismatch, "l1 weights must be nonnegative");
  if (quartic < 0.0) throw Error(Errc::dimension_mismatch, "quartic coefficient must be nonnegative");
}

namespace {

SeparableQ quadratic_q(const QuadraticModel& m) {
  SeparableQ q;
  for (Eigen::Index j = 0; j < m.m(); ++j)
    q.parts.push_back(ScalarPiecewiseConvex::absolute(m.l1_weight(j), 0.0, m.y_lower(j), m.y_upper(j)));
  return q;
}

}  // namespace

DecomposableProblem custom_quadratic(const QuadraticModel& model) {
  model.validate();
  auto md = std::make_shared<const QuadraticModel>(model);
  auto q = std::make_shared<const SeparableQ>(quadratic_q(model));

  DecomposableProblem p;
  p.name = "custom_quadratic";
  p.n = md->n();
  p.m = md->m();
  p.psi = [md](const Vector& x, const Vector& y) {
    return 0.5 * y.dot(md->h * y) - y.dot(md->b * x + md->c) + 0.5 * x.dot(md->p * x) + md->r.dot(x) +
           0.25 * md->quartic * x.array().pow(4).sum();
  };
  p.grad_x = [md](const Vector& x, const Vector& y) -> Vector {
    return md->p * x + md->r + md->quartic * x.array().cube().matrix() - md->b.transpose() * y;
  };
  p.grad_y = [md](const Vector& x, const Vector& y) -> Vector { return md->h * y - md->b * x - md->c; };
  p.hess_xx = [md](const Vector& x, const Vector&) -> Matrix {
    Matrix hx = md->p;
    hx.diagonal() += 3.0 * md->quartic * x.array().square().matrix();
    return hx;
  };
  p.hess_xy = [md](const Vector&, const Vector&) -> Matrix { return -md->b.transpose(); };
  p.hess_yy = [md](const Vector&, const Vector&) { return md->h; };
  p.q_value = [q](const Vector& y) { return q->value(y); };
  p.q_prox = [q](const Vector& v, double lambda) { return q->prox(v, lambda); };
  p.q_subspace = [q](const Vector& y, const Vector& y_star) { return q->subspace(y, y_star); };
  p.y_start = Vector::Zero(md->m()).cwiseMax(md->y_lower).cwiseMin(md->y_upper);
  return p;
}

MpecProblem custom_quadratic_mpec(const QuadraticModel& model) {
  auto dp = std::make_shared<const DecomposableProblem>(custom_quadratic(model));

  MpecProblem p;
  p.name = "custom_quadratic";
  GeneralizedEquation& ge = p.ge;
  ge.n = dp->n;
  ge.m = dp->m;
  ge.f = dp->grad_y;
  ge.jac_x = [dp](const Vector& x, const Vector& y) -> Matrix { return dp->hess_xy(x, y).transpose(); };
  ge.jac_y = dp->hess_yy;
  ge.subspace = [dp](const Vector&, const Vector& y, const Vector& z) { return dp->q_subspace(y, z); };
  ge.prox = dp->q_prox;

  p.phi = [dp](const Vector& x, const Vector& y) { return theta_value(*dp, x, y); };
  // At y = sigma(x) the zero vector belongs to the partial subdifferential in y.
  p.selector = [dp](const Vector& x, const Vector& y) {
    return std::pair<Vector, Vector>{dp->grad_x(x, y), Vector::Zero(y.size())};
  };
  p.admissible = Polyhedron::box(model.x_lower, model.x_upper);
  p.y_start = dp->y_start;
  p.lower = [ge](const Vector& x, const Vector& y0) { return run_ssnewton(ge, x, y0, 1e-12); };
  return p;
}

QuadraticModel soft_threshold_model() {
  QuadraticModel m;
  m.h = Matrix::Constant(1, 1, 2.0);
  m.b = Matrix::Constant(1, 1, 1.0);
  m.c = Vector::Zero(1);
  m.p = Matrix::Constant(1, 1, 1.0);
  m.r = Vector::Zero(1);
  m.l1_weight = Vector::Constant(1, 1.0);
  m.y_lower = Vector::Constant(1, -kInf);
  m.y_upper = Vector::Constant(1, kInf);
  m.x_lower = Vector::Constant(1, -5.0);
  m.x_upper = Vector::Constant(1, 5.0);
  return m;
}

QuadraticModel quadratic_box_model() {
  constexpr Eigen::Index k = 5;
  QuadraticModel m;
  m.h = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    m.h(i, i) = 3.0;
    if (i + 1 < k) m.h(i, i + 1) = m.h(i + 1, i) = -1.0;
  }
  m.b = Matrix::Identity(k, k);
  m.b(0, 1) = 0.5;
  m.b(3, 4) = -0.5;
  m.c = (Vector(k) << 2.0, -2.0, 0.5, 3.0, -0.3).finished();
  m.p = 2.0 * Matrix::Identity(k, k);
  m.r = (Vector(k) << 1.0, -1.0, 0.5, 0.0, -0.5).finished();
  m.quartic = 0.25;
  m.l1_weight = Vector::Zero(k);
  m.y_lower = Vector::Constant(k, -0.5);
  m.y_upper = Vector::Constant(k, 0.5);
  m.x_lower = Vector::Constant(k, -10.0);
  m.x_upper = Vector::Constant(k, 10.0);
  return m;
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw Error(Errc::schema_error, path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path + "/" + key, "missing field");
  return *it;
}

double as_real(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  schema_fail(path, "expected a number or \"inf\"/\"-inf\"");
}

double finite_real(const json& v, const std::string& path) {
  const double d = as_real(v, path);
  if (!std::isfinite(d)) schema_fail(path, "expected a finite number");
  return d;
}

Vector as_vector(const json& v, const std::string& path, bool allow_inf = false) {
  if (!v.is_array()) schema_fail(path, "expected an array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    out(static_cast<Eigen::Index>(i)) = allow_inf ? as_real(v[i], p) : finite_real(v[i], p);
  }
  return out;
}

Vector vector_field(const json& obj, const std::string& key, const std::string& path, Eigen::Index size,
                    bool allow_inf = false) {
  const std::string p = path + "/" + key;
  const Vector v = as_vector(require(obj, key, path), p, allow_inf);
  if (size >= 0 && v.size() != size) {
    schema_fail(p, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

Matrix matrix_field(const json& obj, const std::string& key, const std::string& path, Eigen::Index rows,
                    Eigen::Index cols) {
  const std::string p = path + "/" + key;
  const json& v = require(obj, key, path);
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows) {
    schema_fail(p, "expected an array of " + std::to_string(rows) + " rows");
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string pr = p + "/" + std::to_string(i);
    const Vector row = as_vector(v[static_cast<std::size_t>(i)], pr);
    if (row.size() != cols) schema_fail(pr, "expected " + std::to_string(cols) + " columns");
    out.row(i) = row.transpose();
  }
  return out;
}

double real_field(const json& obj, const std::string& key, const std::string& path, double fallback,
                  bool allow_inf = false) {
  if (!obj.contains(key)) return fallback;
  const std::string p = path + "/" + key;
  return allow_inf ? as_real(obj[key], p) : finite_real(obj[key], p);
}

int int_field(const json& obj, const std::string& key, const std::string& path, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) schema_fail(path + "/" + key, "expected an integer");
  return obj[key].get<int>();
}

OligopolyFirm parse_firm(const json& v, const std::string& path, Eigen::Index n) {
  if (!v.is_object()) schema_fail(path, "expected an object");
  OligopolyFirm fm;
  fm.d = vector_field(v, "d", path, n);
  fm.e = vector_field(v, "e", path, n);
  fm.ref = v.contains("ref") ? vector_field(v, "ref", path, n) : Vector::Zero(n);
  fm.up = v.contains("up") ? vector_field(v, "up", path, n) : Vector::Zero(n);
  fm.down = v.contains("down") ? vector_field(v, "down", path, n) : Vector::Zero(n);
  fm.lower = v.contains("lower") ? vector_field(v, "lower", path, n, true) : Vector::Constant(n, 0.0);
  fm.upper = v.contains("upper") ? vector_field(v, "upper", path, n, true) : Vector::Constant(n, kInf);
  return fm;
}

OligopolyModel parse_oligopoly(const json& cfg) {
  OligopolyModel m;
  const json& demand = require(cfg, "demand", "");
  m.a = vector_field(demand, "a", "/demand", -1);
  const Eigen::Index n = m.a.size();
  if (n == 0) schema_fail("/demand/a", "expected at least one commodity");
  m.b = vector_field(demand, "b", "/demand", n);
  m.leader = parse_firm(require(cfg, "leader", ""), "/leader", n);
  const json& fol = require(cfg, "followers", "");
  if (!fol.is_array() || fol.empty()) schema_fail("/followers", "expected a nonempty array");
  for (std::size_t i = 0; i < fol.size(); ++i)
    m.followers.push_back(parse_firm(fol[i], "/followers/" + std::to_string(i), n));
  return m;
}

OligopolyFixture parse_fixture(const json& v, const OligopolyModel& m) {
  OligopolyFixture fx;
  fx.leader = vector_field(v, "leader", "/reference", m.n());
  const json& fol = require(v, "followers", "/reference");
  if (!fol.is_array() || static_cast<Eigen::Index>(fol.size()) != m.l())
    schema_fail("/reference/followers", "expected one production vector per follower");
  fx.followers.resize(m.n() * m.l());
  for (std::size_t k = 0; k < fol.size(); ++k) {
    const std::string p = "/reference/followers/" + std::to_string(k);
    const Vector yk = as_vector(fol[k], p);
    if (yk.size() != m.n()) schema_fail(p, "expected " + std::to_string(m.n()) + " entries");
    fx.followers.segment(static_cast<Eigen::Index>(k) * m.n(), m.n()) = yk;
  }
  if (v.contains("losses")) {
    const Vector losses = vector_field(v, "losses", "/reference", m.l() + 1);
    fx.losses.assign(losses.data(), losses.data() + losses.size());
  }
  return fx;
}

QuadraticModel parse_quadratic(const json& cfg) {
  QuadraticModel m;
  const json& b = require(cfg, "B", "");
  if (!b.is_array() || b.empty() || !b[0].is_array()) schema_fail("/B", "expected a nonempty m x n array");
  const Eigen::Index mm = static_cast<Eigen::Index>(b.size());
  const Eigen::Index nn = static_cast<Eigen::Index>(b[0].size());
  m.b = matrix_field(cfg, "B", "", mm, nn);
  m.h = matrix_field(cfg, "H", "", mm, mm);
  m.c = cfg.contains("c") ? vector_field(cfg, "c", "", mm) : Vector::Zero(mm);
  m.p = matrix_field(cfg, "P", "", nn, nn);
  m.r = cfg.contains("r") ? vector_field(cfg, "r", "", nn) : Vector::Zero(nn);
  m.quartic = real_field(cfg, "quartic", "", 0.0);
  m.l1_weight = cfg.contains("l1_weight") ? vector_field(cfg, "l1_weight", "", mm) : Vector::Zero(mm);
  m.y_lower = cfg.contains("y_lower") ? vector_field(cfg, "y_lower", "", mm, true) : Vector::Constant(mm, -kInf);
  m.y_upper = cfg.contains("y_upper") ? vector_field(cfg, "y_upper", "", mm, true) : Vector::Constant(mm, kInf);
  m.x_lower = cfg.contains("x_lower") ? vector_field(cfg, "x_lower", "", nn, true) : Vector::Constant(nn, -kInf);
  m.x_upper = cfg.contains("x_upper") ? vector_field(cfg, "x_upper", "", nn, true) : Vector::Constant(nn, kInf);
  return m;
}

void parse_solver_options(const json& cfg, LoadedProblem& out) {
  if (!cfg.contains("solver")) return;
  const json& s = cfg["solver"];
  if (!s.is_object()) schema_fail("/solver", "expected an object");
  if (s.contains("bt")) {
    const json& bt = s["bt"];
    const std::string p = "/solver/bt";
    if (!bt.is_object()) schema_fail(p, "expected an object");
    out.bt.epsilon = real_field(bt, "epsilon", p, out.bt.epsilon);
    out.bt.maxit = int_field(bt, "maxit", p, out.bt.maxit);
    out.bt.max_bundle = int_field(bt, "max_bundle", p, out.bt.max_bundle);
    out.bt.r0 = real_field(bt, "r0", p, out.bt.r0);
    out.bt.r_min = real_field(bt, "r_min", p, out.bt.r_min);
    out.bt.r_max = real_field(bt, "r_max", p, out.bt.r_max);
    out.bt.m_l = real_field(bt, "m_L", p, out.bt.m_l);
    out.bt.m_r = real_field(bt, "m_R", p, out.bt.m_r);
    if (!(0.0 < out.bt.m_l && out.bt.m_l < out.bt.m_r && out.bt.m_r < 1.0)) schema_fail(p, "require 0 < m_L < m_R < 1");
    if (out.bt.max_bundle < 2) schema_fail(p + "/max_bundle", "must be at least 2");
  }
  if (s.contains("ssnewton")) {
    const json& nw = s["ssnewton"];
    const std::string p = "/solver/ssnewton";
    if (!nw.is_object()) schema_fail(p, "expected an object");
    out.newton.tol = real_field(nw, "tol", p, out.newton.tol);
    out.newton.maxit = int_field(nw, "maxit", p, out.newton.maxit);
    if (nw.contains("damped")) {
      if (!nw["damped"].is_boolean()) schema_fail(p + "/damped", "expected a boolean");
      out.newton.damped = nw["damped"].get<bool>();
    }
  }
}

}  // namespace

LoadedProblem load_problem(const std::string& json_text) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::parse_error& e) {
    schema_fail("", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) schema_fail("", "expected an object");
  const json& kind_v = require(cfg, "kind", "");
  if (!kind_v.is_string()) schema_fail("/kind", "expected a string");

  LoadedProblem out;
  out.kind = kind_v.get<std::string>();
  out.id = cfg.contains("id") && cfg["id"].is_string() ? cfg["id"].get<std::string>() : out.kind;

  if (out.kind == "lcp_toy") {
    out.mpec = lcp_toy();
    out.x0 = Vector::Constant(1, 0.5);
  } else if (out.kind == "bilevel_polyhedral") {
    out.mpec = bilevel_toy();
    out.x0 = Vector::Constant(1, 0.7);
  } else if (out.kind == "projection_bilevel") {
    const Vector y0 = vector_field(cfg, "y0", "", 3);
    const double lo = real_field(cfg, "x_lower", "", 1.0);
    const double hi = real_field(cfg, "x_upper", "", 50.0);
    if (!(lo > 0.0 && lo <= hi)) schema_fail("/x_lower", "require 0 < x_lower <= x_upper");
    out.mpec = projection_bilevel(y0, lo, hi);
    out.x0 = Vector::Constant(3, 3.0);
  } else if (out.kind == "oligopoly") {
    OligopolyModel model = parse_oligopoly(cfg);
    model.validate();
    const double audit = model.finite_difference_audit(5, 12345u);
    if (audit > 1e-6) {
      throw Error(Errc::schema_error, "/followers: loss gradients fail the finite-difference audit (" +
                                          std::to_string(audit) + ")");
    }
    out.mpec = build_oligopoly(model);
    if (cfg.contains("reference")) out.fixture = parse_fixture(cfg["reference"], model);
    out.oligopoly = std::move(model);
    if (!cfg.contains("x0")) out.x0 = oligopoly_nash(*out.oligopoly).leader;
  } else if (out.kind == "custom_quadratic") {
    const QuadraticModel model = parse_quadratic(cfg);
    out.decomposable = custom_quadratic(model);
    out.mpec = custom_quadratic_mpec(model);
    out.x0 = Vector::Zero(model.n()).cwiseMax(model.x_lower).cwiseMin(model.x_upper);
  } else {
    schema_fail("/kind", "unknown problem kind '" + out.kind + "'");
  }

  if (cfg.contains("x0")) {
    const Eigen::Index n = out.mpec ? out.mpec->ge.n : out.decomposable->n;
    out.x0 = vector_field(cfg, "x0", "", n);
  }
  parse_solver_options(cfg, out);
  return out;
}

LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::schema_error, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_problem(ss.str());
}

}  // namespace mpecbt
