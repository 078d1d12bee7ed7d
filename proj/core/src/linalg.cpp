#include "mpecbt/linalg.hpp"

#include "mpecbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpecbt {

bool all_finite(const Matrix& a) { return a.allFinite(); }

QrResult qr_pivoted(const Matrix& d, double rank_tol) {
  const Eigen::Index m = d.rows();
  const Eigen::Index k = d.cols();
  QrResult out;
  if (k == 0 || d.cwiseAbs().maxCoeff() == 0.0) {
    out.q = Matrix::Identity(m, m);
    out.r = Matrix::Zero(m, k);
    out.perm = Eigen::VectorXi::LinSpaced(k, 0, static_cast<int>(k) - 1);
    out.rank = 0;
    return out;
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(d);
  out.q = qr.householderQ() * Matrix::Identity(m, m);
  out.r = qr.matrixQR().triangularView<Eigen::Upper>();
  out.perm = qr.colsPermutation().indices();

  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index idx = 0;
    out.q.col(j).cwiseAbs().maxCoeff(&idx);
    if (out.q(idx, j) < 0.0) {
      out.q.col(j) *= -1.0;
      if (j < out.r.rows()) out.r.row(j) *= -1.0;
    }
  }

  const double lead = std::abs(out.r(0, 0));
  const Eigen::Index diag = std::min(m, k);
  int rank = 0;
  for (Eigen::Index i = 0; i < diag; ++i) {
    if (std::abs(out.r(i, i)) > rank_tol * lead) ++rank;
    else break;
  }
  out.rank = rank;
  return out;
}

OrthonormalSplit orthonormal_split(const QrResult& qr) {
  const Eigen::Index m = qr.q.rows();
  const Eigen::Index s = qr.rank;
  return {qr.q.leftCols(s), qr.q.rightCols(m - s)};
}

namespace {

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a, Eigen::Index rhs_rows, bool rhs_finite, double pivot_tol) {
  if (a.rows() != a.cols() || a.rows() != rhs_rows) {
    throw Error(Errc::dimension_mismatch, "solve_dense expects square A and conformable right-hand side");
  }
  if (!a.allFinite() || !rhs_finite) {
    throw Error(Errc::singular_matrix, "non-finite entries in linear system");
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  const double scale = a.cwiseAbs().maxCoeff();
  const Matrix& packed = lu.matrixLU();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    if (!(std::abs(packed(i, i)) > pivot_tol * scale)) {
      throw Error(Errc::singular_matrix, "LU pivot below tolerance");
    }
  }
  return lu;
}

}  // namespace

Vector solve_dense(const Matrix& a, const Vector& b, double pivot_tol) {
  if (a.rows() == 0 && b.size() == 0 && a.cols() == 0) return Vector(0);
  return checked_lu(a, b.size(), b.allFinite(), pivot_tol).solve(b);
}

Matrix solve_dense_columns(const Matrix& a, const Matrix& b, double pivot_tol) {
  if (a.rows() == 0 && b.rows() == 0 && a.cols() == 0) return Matrix(0, b.cols());
  return checked_lu(a, b.rows(), b.allFinite(), pivot_tol).solve(b);
}

double rcond_estimate(const Matrix& a) {
  if (a.rows() == 0) return 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rc = lu.rcond();
  return std::isfinite(rc) ? rc : 0.0;
}

NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter) {
  const Eigen::Index n = a.cols();
  if (a.rows() != b.size()) {
    throw Error(Errc::dimension_mismatch, "nnls: rows of A must match b");
  }
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

  NnlsResult out;
  out.x = Vector::Zero(n);
  if (n == 0) {
    out.residual = b.norm();
    return out;
  }

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * scale * static_cast<double>(std::max<Eigen::Index>(a.rows(), n));

  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vector& x = out.x;
  Vector w = a.transpose() * (b - a * x);

  auto passive_indices = [&] {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    return idx;
  };

  int outer = 0;
  while (outer < max_iter) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    ++outer;

    for (int inner = 0; inner < max_iter; ++inner) {
      const auto idx = passive_indices();
      Matrix ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
      const Vector sp = ap.colPivHouseholderQr().solve(b);

      bool positive = true;
      for (Eigen::Index k = 0; k < sp.size(); ++k)
        if (sp(k) <= 0.0) positive = false;
      if (positive) {
        x.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) x(idx[k]) = sp(static_cast<Eigen::Index>(k));
        break;
      }

      double alpha = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double s = sp(static_cast<Eigen::Index>(k));
        if (s <= 0.0) {
          const double xj = x(idx[k]);
          const double denom = xj - s;
          if (denom > 0.0) alpha = std::min(alpha, xj / denom);
        }
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Eigen::Index j = idx[k];
        x(j) += alpha * (sp(static_cast<Eigen::Index>(k)) - x(j));
        if (x(j) <= 1e-15 * scale) {
          x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }
  out.iterations = outer;
  out.residual = (a * x - b).norm();
  return out;
}

Matrix block_diagonal(std::span<const Matrix> blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

bool has_full_column_rank(const Matrix& a, double rank_tol) {
  if (a.cols() == 0) return true;
  if (a.rows() < a.cols()) return false;
  return qr_pivoted(a, rank_tol).rank == a.cols();
}

Matrix range_projector(const Matrix& basis, double rank_tol) {
  const auto split = orthonormal_split(qr_pivoted(basis, rank_tol));
  return split.range * split.range.transpose();
}

}  // namespace mpecbt
