#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace mpecbt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-10;

/// Column-pivoted Householder QR of an m x k matrix D:  D * P = Q * R.
///
/// Q is the full m x m orthogonal factor. Columns of Q are sign-normalized
/// so that the entry of largest magnitude in each column is positive; R is
/// adjusted accordingly, so the factorization is deterministic for a given D.
struct QrResult {
  Matrix q;
  Matrix r;
  Eigen::VectorXi perm;  // D.col(perm[j]) is the j-th pivoted column
  int rank = 0;
};

/// Rank is the number of diagonal entries with |R(i,i)| > rank_tol * |R(0,0)|.
QrResult qr_pivoted(const Matrix& d, double rank_tol = kDefaultRankTol);

struct OrthonormalSplit {
  Matrix range;   // Q1, m x s, spans rge D
  Matrix kernel;  // Q2, m x (m - s), spans ker D^T
};

OrthonormalSplit orthonormal_split(const QrResult& qr);

/// LU solve with partial pivoting. Throws Errc::singular_matrix when a pivot
/// falls below pivot_tol relative to the largest entry of A.
Vector solve_dense(const Matrix& a, const Vector& b, double pivot_tol = 1e-13);
/// Same as solve_dense for every column of B.
Matrix solve_dense_columns(const Matrix& a, const Matrix& b, double pivot_tol = 1e-13);

/// Reciprocal condition estimate in the 1-norm (0 for singular input).
double rcond_estimate(const Matrix& a);

struct NnlsResult {
  Vector x;
  double residual = 0.0;  // ||A x - b||_2
  int iterations = 0;
};

/// Lawson-Hanson active-set solution of min ||A x - b|| s.t. x >= 0.
NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter = 0);

/// Block-diagonal assembly; blocks may be rectangular.
Matrix block_diagonal(std::span<const Matrix> blocks);

/// True when the matrix has full column rank under the qr_pivoted rule.
bool has_full_column_rank(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Orthogonal projector onto the column span of `basis` (rank-revealing).
Matrix range_projector(const Matrix& basis, double rank_tol = kDefaultRankTol);

bool all_finite(const Matrix& a);

}  // namespace mpecbt
