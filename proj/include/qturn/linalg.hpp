#pragma once

#include <Eigen/Dense>

namespace qturn::linalg {

// Thin (economy) SVD of a real matrix: a = u * s.asDiagonal() * vt.
struct Svd {
  Eigen::MatrixXd u;   // m x r
  Eigen::VectorXd s;   // r, descending
  Eigen::MatrixXd vt;  // r x n
};

// LAPACK divide-and-conquer SVD with an Eigen fallback if it fails to
// converge.  Throws on invalid input (empty matrix).
Svd svd(const Eigen::MatrixXd& a);

struct SvdC {
  Eigen::MatrixXcd u;   // m x r
  Eigen::VectorXd s;    // r, descending
  Eigen::MatrixXcd vh;  // r x n, conjugate-transposed right factor
};

SvdC svd(const Eigen::MatrixXcd& a);

struct TruncationChoice {
  int rank = 0;
  double discarded_weight = 0.0;  // sum of squared dropped singular values
};

// Keep at most max_rank singular values, dropping any below rel_tol * s(0).
// Always keeps at least one.
TruncationChoice truncation_rank(const Eigen::VectorXd& s, int max_rank,
                                 double rel_tol = 0.0);

}  // namespace qturn::linalg
