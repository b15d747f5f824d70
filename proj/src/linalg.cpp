#include "qturn/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <stdexcept>

namespace qturn::linalg {

Svd svd(const Eigen::MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m == 0 || n == 0) throw std::invalid_argument("svd: empty matrix");
  const int r = std::min(m, n);

  Svd out;
  out.u.resize(m, r);
  out.s.resize(r);
  out.vt.resize(r, n);

  Eigen::MatrixXd work = a;
  const int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m,
                                  out.s.data(), out.u.data(), m,
                                  out.vt.data(), r);
  if (info == 0) return out;

  // dgesdd occasionally fails to converge; dgesvd (and Eigen's Jacobi
  // fallback below) are more robust.
  work = a;
  Eigen::VectorXd superb(std::max(1, r - 1));
  const int info2 =
      LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), m,
                     out.s.data(), out.u.data(), m, out.vt.data(), r,
                     superb.data());
  if (info2 == 0) return out;

  Eigen::JacobiSVD<Eigen::MatrixXd> j(a, Eigen::ComputeThinU |
                                             Eigen::ComputeThinV);
  out.u = j.matrixU();
  out.s = j.singularValues();
  out.vt = j.matrixV().transpose();
  return out;
}

SvdC svd(const Eigen::MatrixXcd& a) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m == 0 || n == 0) throw std::invalid_argument("svd: empty matrix");
  const int r = std::min(m, n);

  SvdC out;
  out.u.resize(m, r);
  out.s.resize(r);
  out.vh.resize(r, n);

  Eigen::MatrixXcd work = a;
  auto* wp = reinterpret_cast<lapack_complex_double*>(work.data());
  const int info = LAPACKE_zgesdd(
      LAPACK_COL_MAJOR, 'S', m, n, wp, m, out.s.data(),
      reinterpret_cast<lapack_complex_double*>(out.u.data()), m,
      reinterpret_cast<lapack_complex_double*>(out.vh.data()), r);
  if (info == 0) return out;

  work = a;
  Eigen::VectorXd superb(std::max(1, r - 1));
  const int info2 = LAPACKE_zgesvd(
      LAPACK_COL_MAJOR, 'S', 'S', m, n, wp, m, out.s.data(),
      reinterpret_cast<lapack_complex_double*>(out.u.data()), m,
      reinterpret_cast<lapack_complex_double*>(out.vh.data()), r,
      superb.data());
  if (info2 == 0) return out;

  Eigen::JacobiSVD<Eigen::MatrixXcd> j(a, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
  out.u = j.matrixU();
  out.s = j.singularValues();
  out.vh = j.matrixV().adjoint();
  return out;
}

TruncationChoice truncation_rank(const Eigen::VectorXd& s, int max_rank,
                                 double rel_tol) {
  if (s.size() == 0) throw std::invalid_argument("truncation_rank: empty");
  if (max_rank < 1) throw std::invalid_argument("truncation_rank: max_rank < 1");
  const double cut = rel_tol * s(0);
  int k = static_cast<int>(s.size());
  while (k > 1 && (k > max_rank || s(k - 1) <= cut)) --k;
  TruncationChoice c;
  c.rank = k;
  for (int i = k; i < s.size(); ++i) c.discarded_weight += s(i) * s(i);
  return c;
}

}  // namespace qturn::linalg
