// Acceptance checks 1-9. Prints one PASS/FAIL/SKIP line per criterion with
// indented sub-check lines ("ok", "bad", "skip"). Exit status is the number
// of failed criteria.

#include "mpecbt/bundle.hpp"
#include "mpecbt/error.hpp"
#include "mpecbt/linalg.hpp"
#include "mpecbt/oracle.hpp"
#include "mpecbt/problems.hpp"
#include "mpecbt/reduced_newton.hpp"
#include "mpecbt/scd.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace {

using namespace mpecbt;
using Clock = std::chrono::steady_clock;

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void check(bool ok, const std::string& what) {
    subs_.push_back((ok ? "    ok   " : "    bad  ") + what);
    ok_ = ok_ && ok;
  }
  void skip(const std::string& what) { subs_.push_back("    skip " + what); }
  void error(const std::string& what) { check(false, "exception: " + what); }

  bool report() const {
    std::printf("%s %d %s\n", ok_ ? "PASS" : "FAIL", id_, title_.c_str());
    for (const std::string& s : subs_) std::printf("%s\n", s.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  int id_;
  std::string title_;
  std::vector<std::string> subs_;
  bool ok_ = true;
};

std::string fmt(const char* f, double a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::string config(const char* name) { return std::string(MPECBT_CONFIG_DIR) + "/" + name; }

struct Run {
  BtResult result;
  int calls = 0;
  double max_lower_residual = 0.0;
  double seconds = 0.0;
};

Run run_bt(const MpecProblem& mpec, const Vector& x0, const BtOptions& opts) {
  ReducedObjective obj(mpec);
  const auto t0 = Clock::now();
  BtResult r = bt_minimize(
      [&](const Vector& x) {
        const OracleOutput o = obj(x);
        return OracleValue{o.value, o.xi};
      },
      mpec.admissible, x0, opts);
  return Run{std::move(r), obj.calls(), obj.max_lower_residual(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------

void criterion1(Criterion& c) {
  const MpecProblem lcp = lcp_toy();
  for (double x0 : {-0.9, -0.3, 0.4, 0.7}) {
    const Run run = run_bt(lcp, vec({x0}), BtOptions{});
    const double err = std::abs(run.result.x(0) - 1.0);
    c.check(err <= 1e-6 && run.result.status == BtStatus::converged,
            fmt("x0 = %+.1f: |x - 1| = %.2e", x0, err));
    c.check(run.calls <= 50, fmt("x0 = %+.1f: %.0f oracle calls (<= 50)", x0, run.calls));
    c.check(run.seconds < 1.0, fmt("x0 = %+.1f: %.4f s (< 1 s)", x0, run.seconds));
  }
}

void criterion2(Criterion& c) {
  const MpecProblem lcp = lcp_toy();
  const double xp = pseudogradient(lcp, vec({0.5})).xi(0);
  const double xm = pseudogradient(lcp, vec({-0.5})).xi(0);
  c.check(std::abs(xp + 0.5) <= 1e-12, fmt("xi(+0.5) = %.17g (expected -0.5)", xp));
  c.check(std::abs(xm + 1.0) <= 1e-12, fmt("xi(-0.5) = %.17g (expected -1)", xm));
}

void criterion3(Criterion& c) {
  const MpecProblem p = bilevel_toy();
  const Vector x = vec({0.0});
  const Vector y = Vector::Zero(2);
  const Matrix jy = p.ge.jac_y(x, y);
  const auto subspaces = bilevel_toy_subspaces();
  const auto listed = bilevel_toy_listed_newton_matrices();
  for (std::size_t i = 0; i < 4; ++i) {
    const Matrix m = jy.transpose() * subspaces[i].z + subspaces[i].y;
    const double diff = max_abs(m - listed[i]);
    const std::string name = "L" + std::to_string(i + 1);
    c.check(diff <= 1e-12, name + " equals listed matrix: " +
                               fmt("max diff %.3e, computed (2,2) entry %.17g", diff, m(1, 1)));
    const double det = m.determinant();
    c.check(std::abs(det) > 1e-12, name + " nonsingular: " + fmt("det = %.6g", det));
  }
  const Run run = run_bt(p, vec({0.7}), BtOptions{});
  c.check(std::abs(run.result.x(0)) <= 1e-6 && run.result.status == BtStatus::converged,
          fmt("bt from 0.7: |x| = %.2e after %.0f oracle calls", std::abs(run.result.x(0)), run.calls));
}

void criterion4(Criterion& c) {
  const LoadedProblem lp = load_problem_file(config("projection_run1.json"));
  const MpecProblem& p = *lp.mpec;
  const Run run = run_bt(p, vec({3.0, 3.0, 3.0}), lp.bt);
  const Vector& x = run.result.x;
  const Vector y = p.lower(x, p.y_start).y;
  const Vector ref = vec({1.000004, 1.648760, 3.007966});
  const double ydiff = (y - ref).lpNorm<Eigen::Infinity>();
  c.check(run.result.status == BtStatus::converged, "converged");
  c.check(x(2) >= 49.99, fmt("x3 = %.10g (>= 49.99)", x(2)));
  c.check(ydiff <= 1e-2, fmt("y = (%.6f, %.6f, %.6f)", y(0), y(1), y(2)) + fmt(", max deviation %.3e", ydiff));
  c.check(run.calls <= 100, fmt("%.0f oracle calls (<= 100)", run.calls));
  c.check(run.seconds < 10.0, fmt("%.3f s (< 10 s)", run.seconds));
}

void criterion5(Criterion& c) {
  const LoadedProblem lp = load_problem_file(config("projection_run2.json"));
  const Run run = run_bt(*lp.mpec, vec({3.0, 3.0, 3.0}), lp.bt);
  c.check(run.result.status == BtStatus::converged, "converged");
  c.check(run.result.value <= 1e-6, fmt("||y||_1 = %.3e (<= 1e-6) after %.0f oracle calls", run.result.value,
                                        run.calls));
}

void criterion6(Criterion& c) {
  const LoadedProblem lp = load_problem_file(config("oligopoly_synthetic.json"));
  const OligopolyModel& model = *lp.oligopoly;
  const MpecProblem& p = *lp.mpec;
  c.check(model.l() == 4 && model.n() == 3 && p.ge.m == 12, "l = 4, n = 3, m = 12");
  const Run run = run_bt(p, lp.x0, lp.bt);
  c.check(run.max_lower_residual <= 1e-8,
          fmt("max lower-level residual over %.0f oracle calls: %.3e (<= 1e-8)", run.calls, run.max_lower_residual));
  c.check(run.result.status == BtStatus::converged && run.result.stat_residual <= 1e-4,
          fmt("stationarity residual %.3e (<= 1e-4)", run.result.stat_residual));
  const NashPoint nash = oligopoly_nash(model);
  const double nash_loss = model.loss(0, nash.leader, nash.followers);
  const Vector y = p.lower(run.result.x, p.y_start).y;
  const double leader_loss = model.loss(0, run.result.x, y);
  c.check(leader_loss <= nash_loss, fmt("leader loss %.6f <= Nash leader loss %.6f", leader_loss, nash_loss));
  if (lp.fixture) {
    const OligopolyFixture& fx = *lp.fixture;
    const double prod = std::max((run.result.x - fx.leader).lpNorm<Eigen::Infinity>(),
                                 (y - fx.followers).lpNorm<Eigen::Infinity>());
    c.check(prod <= 1e-2, fmt("productions match reference to %.3e (<= 1e-2)", prod));
    if (!fx.losses.empty()) {
      double worst = 0.0;
      for (Eigen::Index i = 0; i <= model.l(); ++i)
        worst = std::max(worst, std::abs(model.loss(i, run.result.x, y) - fx.losses[static_cast<std::size_t>(i)]));
      c.check(worst <= 1e-1, fmt("losses match reference to %.3e (<= 1e-1)", worst));
    }
  } else {
    c.skip("reference productions and losses: no external dataset in the config");
  }
}

void criterion7(Criterion& c) {
  struct Entry {
    std::string name;
    MpecProblem mpec;
  };
  std::vector<Entry> entries;
  for (const char* file : {"lcp_toy.json", "bilevel_toy.json", "projection_run1.json", "projection_run2.json",
                           "oligopoly_synthetic.json", "soft_threshold.json", "quadratic_box.json"}) {
    entries.push_back({file, *load_problem_file(config(file)).mpec});
  }
  std::uint64_t seed = 1;
  for (const Entry& e : entries) {
    const auto box = box_bounds(e.mpec.admissible);
    if (!box) {
      c.check(false, e.name + ": admissible set is not a box");
      continue;
    }
    FdAuditOptions opts;
    opts.seed = seed++;
    const FdAuditResult r = finite_difference_audit(e.mpec, box->first, box->second, opts);
    c.check(r.passed >= 95 && r.failures == 0,
            e.name + fmt(": %.0f/100 passed, %.0f kinks excluded", r.passed, r.kinks) +
                fmt(", %.0f unexplained failures, worst error %.2e", r.failures, r.worst));
  }
}

void criterion8(Criterion& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto rand_matrix = [&](Eigen::Index r, Eigen::Index k) {
    Matrix a(r, k);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < k; ++j) a(i, j) = unif(rng);
    return a;
  };
  auto rand_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  // QR reconstruction and Q2^T D = 0.
  double qr_worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index m = rand_int(1, 50), k = rand_int(1, 50);
    const Eigen::Index s = rand_int(1, static_cast<int>(std::min(m, k)));
    const Matrix d = rand_matrix(m, s) * rand_matrix(s, k);
    const QrResult qr = qr_pivoted(d);
    Matrix dp(m, k);
    for (Eigen::Index j = 0; j < k; ++j) dp.col(j) = d.col(qr.perm(j));
    const double dnorm = d.cwiseAbs().rowwise().sum().maxCoeff();
    const OrthonormalSplit split = orthonormal_split(qr);
    qr_worst = std::max(qr_worst, (dp - qr.q * qr.r).lpNorm<Eigen::Infinity>() / dnorm);
    if (split.kernel.cols() > 0) qr_worst = std::max(qr_worst, max_abs(split.kernel.transpose() * d) / dnorm);
  }
  c.check(qr_worst <= 1e-10, fmt("QR reconstruction and kernel orthogonality: worst relative error %.2e", qr_worst));

  // Polyhedral subspaces: rank invariant and E x E-perp orthogonality.
  double orth_worst = 0.0;
  bool rank_ok = true;
  double affine_worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index m = rand_int(1, 8), l = rand_int(1, 10);
    const Vector y = rand_matrix(m, 1).col(0);
    const Matrix normals = rand_matrix(l, m);
    Vector offsets(l);
    for (Eigen::Index i = 0; i < l; ++i) offsets(i) = normals.row(i).dot(y) + (rand_int(0, 1) ? 0.0 : 0.5);
    const Polyhedron poly(normals, offsets);
    const AdjointBasis b = polyhedral_subspace(poly, y);
    rank_ok = rank_ok && b.has_full_rank();
    orth_worst = std::max(orth_worst, max_abs(b.z.transpose() * b.y));

    SmoothInequalitySet g;
    g.count = l;
    g.dim = m;
    g.values = [normals, offsets](const Vector& v) -> Vector { return normals * v - offsets; };
    g.jacobian = [normals](const Vector&) { return normals; };
    g.hessian = [m](Eigen::Index, const Vector&) { return Matrix::Zero(m, m); };
    Vector w = Vector::Zero(l);
    for (Eigen::Index i : active_set_polyhedral(poly, y)) w(i) = 0.5 * (unif(rng) + 1.0);
    const AdjointBasis a = inequality_subspace(g, y, lagrange_multipliers(g, y, normals.transpose() * w));
    affine_worst = std::max({affine_worst, max_abs(a.z - b.z), max_abs(a.y - b.y)});
  }
  c.check(rank_ok, "full-column-rank invariant on 200 polyhedral subspaces");
  c.check(orth_worst <= 1e-10, fmt("E x E-perp orthogonality: max |Z^T Y| = %.2e", orth_worst));
  c.check(affine_worst <= 1e-12, fmt("affine inequality set equals polyhedral construction: %.2e", affine_worst));

  // Basis-change invariance of xi on the built-in problems.
  double inv_worst = 0.0;
  const LoadedProblem olig = load_problem_file(config("oligopoly_synthetic.json"));
  const std::vector<std::pair<MpecProblem, Vector>> probes{
      {lcp_toy(), vec({0.3})},
      {bilevel_toy(), vec({0.4})},
      {projection_bilevel(vec({1.0, 2.0, 3.0})), vec({3.0, 1.0, 50.0})},
      {*olig.mpec, olig.x0},
      {custom_quadratic_mpec(quadratic_box_model()), Vector::Constant(5, 0.2)}};
  for (const auto& [mpec, x] : probes) {
    const OracleOutput ref = pseudogradient(mpec, x);
    for (int k = 0; k < 10; ++k) {
      Matrix cmat = rand_matrix(ref.subspace.dim(), ref.subspace.dim());
      cmat.diagonal().array() += static_cast<double>(ref.subspace.dim()) + 1.0;
      const OracleOutput alt = pseudogradient_from_basis(mpec, x, ref.lower, ref.subspace.transformed(cmat));
      inv_worst = std::max(inv_worst, (alt.xi - ref.xi).norm() / (1.0 + ref.xi.norm()));
    }
  }
  c.check(inv_worst <= 1e-10, fmt("basis-change invariance of xi: worst relative change %.2e", inv_worst));

  // Self-adjointness: scalar subspaces and symmetry of G.
  bool scalar_ok = true;
  const ScalarPiecewiseConvex q({-1.0, 0.0, 1.0}, {-2.0, -0.5, 0.5, 2.0}, -3.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const double tt = 3.0 * unif(rng);
    const auto [lo, hi] = q.subdifferential(tt);
    const ScalarBasis b = scalar_pc_subspace(q, tt, lo);
    scalar_ok = scalar_ok && (b.z == 0.0 || b.z == 1.0) && b.z * b.y == 0.0 && b.z + b.y == 1.0;
    for (double kink : {-1.0, 0.0, 1.0}) {
      const auto [klo, khi] = q.subdifferential(kink);
      const ScalarBasis kb = scalar_pc_subspace(q, kink, klo + 0.5 * (unif(rng) + 1.0) * (khi - klo));
      scalar_ok = scalar_ok && kb.z * kb.y == 0.0 && kb.z + kb.y == 1.0;
    }
  }
  c.check(scalar_ok, "scalar subspaces satisfy b in {0, 1} and b (1 - b) = 0");
  double sym_worst = 0.0;
  QuadraticModel mixed = quadratic_box_model();
  mixed.l1_weight = Vector::Constant(5, 0.4);
  for (const QuadraticModel& qm : {soft_threshold_model(), quadratic_box_model(), mixed}) {
    const DecomposableProblem dp = custom_quadratic(qm);
    for (int t = 0; t < 50; ++t) {
      const Vector x = 3.0 * rand_matrix(qm.n(), 1).col(0);
      const Matrix g = theta_generalized_jacobian(dp, x);
      sym_worst = std::max(sym_worst, max_abs(g - g.transpose()) / max_abs(g));
    }
  }
  c.check(sym_worst <= 1e-8, fmt("symmetry of G: worst relative asymmetry %.2e", sym_worst));

  const double secs = seconds_since(t0);
  c.check(secs < 60.0, fmt("property suites ran in %.3f s (< 60 s)", secs));
}

void tail_check(Criterion& c, const std::string& name, const NewtonResult& r) {
  c.check(r.grad_norm <= 1e-10, name + fmt(": |grad theta| = %.2e after %.0f iterations", r.grad_norm, r.iterations));
  std::vector<double> err;
  for (const NewtonRecord& rec : r.records) err.push_back((rec.x - r.x).norm());
  const std::size_t last = err.size() - 1;
  const std::size_t first = last >= 3 ? last - 3 : 0;
  double prev = std::numeric_limits<double>::infinity();
  bool ok = last >= 1;
  std::string ratios;
  for (std::size_t k = first; k < last; ++k) {
    const double ratio = err[k] > 0.0 ? err[k + 1] / err[k] : 0.0;
    ok = ok && ratio <= 0.5 && ratio < prev;
    prev = ratio;
    ratios += fmt(" %.3e", ratio);
  }
  c.check(ok, name + ": tail ratios" + ratios);
}

void criterion9(Criterion& c) {
  tail_check(c, "soft threshold from x0 = 3", ssnewton_minimize(custom_quadratic(soft_threshold_model()), vec({3.0})));
  tail_check(c, "5-D quadratic with box from x0 = 0",
             ssnewton_minimize(custom_quadratic(quadratic_box_model()), Vector::Zero(5)));
  tail_check(c, "5-D quadratic with box from x0 = 2",
             ssnewton_minimize(custom_quadratic(quadratic_box_model()), Vector::Constant(5, 2.0)));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 1 + t % 4;
    const Eigen::Index m = 1 + t % 5;
    auto rm = [&](Eigen::Index r, Eigen::Index k) {
      Matrix a(r, k);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = unif(rng);
      return a;
    };
    QuadraticModel q;
    const Matrix h = rm(m, m);
    q.h = h * h.transpose() + Matrix::Identity(m, m);
    q.b = rm(m, n);
    q.c = rm(m, 1).col(0);
    const Matrix p = rm(n, n);
    q.p = p * p.transpose() + Matrix::Identity(n, n);
    q.r = rm(n, 1).col(0);
    q.l1_weight = Vector::Zero(m);
    q.y_lower = Vector::Constant(m, -std::numeric_limits<double>::infinity());
    q.y_upper = Vector::Constant(m, std::numeric_limits<double>::infinity());
    q.x_lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
    q.x_upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
    const Matrix g = theta_generalized_jacobian(custom_quadratic(q), rm(n, 1).col(0));
    const Matrix schur = q.p - q.b.transpose() * q.h.ldlt().solve(q.b);
    worst = std::max(worst, max_abs(g - schur));
  }
  c.check(worst <= 1e-10, fmt("Schur complement equality with q = 0: max deviation %.2e", worst));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"LCP toy end-to-end", criterion1},
      {"oracle fixture on the LCP toy", criterion2},
      {"bilevel toy Newton matrices and convergence", criterion3},
      {"projection bilevel run 1", criterion4},
      {"projection bilevel run 2", criterion5},
      {"synthetic oligopoly", criterion6},
      {"finite-difference pseudogradient audit", criterion7},
      {"property suites", criterion8},
      {"reduced Newton tail and Schur complement", criterion9},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only != 0 && id != only) continue;
    Criterion c(id, criteria[i].first);
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.error(e.what());
    }
    if (!c.report()) ++failed;
  }
  return failed;
}
