#include "qturn/dmt.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qturn/linalg.hpp"

namespace qturn {

namespace {

void set_bond_factors(Mpdo& m, int b, const Eigen::MatrixXd& u,
                      const Eigen::VectorXd& s, const Eigen::MatrixXd& vt,
                      bool absorb_left) {
  const int k = static_cast<int>(s.size());
  Tensor3 na(m.t[b].dl, m.t[b].dp, k);
  Tensor3 nb(k, m.t[b + 1].dp, m.t[b + 1].dr);
  if (absorb_left) {
    na.lp_r() = u * s.asDiagonal();
    nb.l_pr() = vt;
    m.center = b;
  } else {
    na.lp_r() = u;
    nb.l_pr() = s.asDiagonal() * vt;
    m.center = b + 1;
  }
  m.t[b] = std::move(na);
  m.t[b + 1] = std::move(nb);
}

// Rows spanning every operator assignment on the given positions (trace
// elsewhere), as functionals on the right-facing bond of the last one.
// Tensors are passed explicitly so freshly split factors can stand in.
Eigen::MatrixXd left_functionals(const Mpdo& m, int first_pos,
                                 const std::vector<const Tensor3*>& ts) {
  Eigen::MatrixXd rows = m.trace_env_left(first_pos).transpose();
  for (const Tensor3* t : ts) {
    Eigen::MatrixXd nr(rows.rows() * t->dp, t->dr);
    for (Eigen::Index o = 0; o < rows.rows(); ++o)
      for (int p = 0; p < t->dp; ++p)
        nr.row(o * t->dp + p) = rows.row(o) * t->slice(p);
    rows = std::move(nr);
  }
  return rows;
}

// Mirror image: functionals on the left-facing bond of the first position.
Eigen::MatrixXd right_functionals(const Mpdo& m, int last_pos,
                                  const std::vector<const Tensor3*>& ts) {
  Eigen::MatrixXd rows = m.trace_env_right(last_pos + 1).transpose();
  for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
    const Tensor3* t = *it;
    Eigen::MatrixXd nr(rows.rows() * t->dp, t->dl);
    for (Eigen::Index o = 0; o < rows.rows(); ++o)
      for (int p = 0; p < t->dp; ++p)
        nr.row(o * t->dp + p) = rows.row(o) * t->slice(p).transpose();
    rows = std::move(nr);
  }
  return rows;
}

}  // namespace

int svd_truncate_bond(Mpdo& m, int b, const Eigen::MatrixXd& theta,
                      int max_bond, double rel_tol, bool absorb_left,
                      TruncationReport* rep) {
  const auto sv = linalg::svd(theta);
  const auto ch = linalg::truncation_rank(sv.s, max_bond, rel_tol);
  const int k = ch.rank;
  set_bond_factors(m, b, sv.u.leftCols(k), sv.s.head(k), sv.vt.topRows(k),
                   absorb_left);
  if (rep) {
    const double tot = sv.s.squaredNorm();
    rep->note_cut(tot > 0.0 ? ch.discarded_weight / tot : 0.0, k);
  }
  return k;
}

int dmt_truncate_bond(Mpdo& m, int b, const Eigen::MatrixXd& theta,
                      int max_bond, double zero_tol, bool absorb_left,
                      TruncationReport* rep) {
  if (max_bond < 1) throw std::invalid_argument("dmt: max_bond < 1");
  const auto sv = linalg::svd(theta);
  const double tot = sv.s.squaredNorm();
  const auto ch0 = linalg::truncation_rank(
      sv.s, static_cast<int>(sv.s.size()), zero_tol);
  const int k0 = ch0.rank;
  if (k0 <= max_bond) {
    set_bond_factors(m, b, sv.u.leftCols(k0), sv.s.head(k0),
                     sv.vt.topRows(k0), absorb_left);
    if (rep) rep->note_cut(tot > 0.0 ? ch0.discarded_weight / tot : 0.0, k0);
    return k0;
  }

  // Exact split at full rank; then rotate the bond so the leading rows and
  // columns carry every functional reachable from operators on the <= 2
  // positions flanking the bond.
  Tensor3 na(m.t[b].dl, m.t[b].dp, k0);
  na.lp_r() = sv.u.leftCols(k0);
  Tensor3 nb(k0, m.t[b + 1].dp, m.t[b + 1].dr);
  nb.l_pr() = sv.vt.topRows(k0);

  std::vector<const Tensor3*> lts, rts;
  int lfirst = b, rlast = b + 1;
  if (b - 1 >= 0) {
    lts.push_back(&m.t[b - 1]);
    lfirst = b - 1;
  }
  lts.push_back(&na);
  rts.push_back(&nb);
  if (b + 2 < m.n_sites) {
    rts.push_back(&m.t[b + 2]);
    rlast = b + 2;
  }
  const Eigen::MatrixXd fl = left_functionals(m, lfirst, lts);
  const Eigen::MatrixXd fr = right_functionals(m, rlast, rts);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrl(fl.transpose());
  qrl.setThreshold(1e-12);
  const int kl = std::min<int>(static_cast<int>(qrl.rank()), k0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrr(fr.transpose());
  qrr.setThreshold(1e-12);
  const int kr = std::min<int>(static_cast<int>(qrr.rank()), k0);
  if (kl + kr > max_bond) {
    std::ostringstream msg;
    msg << "dmt_truncate_bond: protected rank " << kl << "+" << kr
        << " exceeds max_bond " << max_bond;
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd ql =
      qrl.householderQ() * Eigen::MatrixXd::Identity(k0, k0);
  Eigen::MatrixXd qr =
      qrr.householderQ() * Eigen::MatrixXd::Identity(k0, k0);

  Eigen::MatrixXd thetat =
      ql.transpose() * (sv.s.head(k0).asDiagonal() * qr);

  const int rd = max_bond - kl - kr;
  auto dblock = thetat.bottomRightCorner(k0 - kl, k0 - kr);
  double dropped = 0.0;
  if (rd <= 0) {
    dropped = dblock.squaredNorm();
    dblock.setZero();
  } else if (std::min(dblock.rows(), dblock.cols()) > rd) {
    const auto dsv = linalg::svd(Eigen::MatrixXd(dblock));
    const auto dch = linalg::truncation_rank(dsv.s, rd, zero_tol);
    dropped = dch.discarded_weight;
    dblock = dsv.u.leftCols(dch.rank) * dsv.s.head(dch.rank).asDiagonal() *
             dsv.vt.topRows(dch.rank);
  }

  const auto sv2 = linalg::svd(thetat);
  const auto ch2 = linalg::truncation_rank(sv2.s, max_bond, 1e-14);
  const int k = ch2.rank;
  const Eigen::MatrixXd u = sv.u.leftCols(k0) * (ql * sv2.u.leftCols(k));
  const Eigen::MatrixXd vt =
      (sv2.vt.topRows(k) * qr.transpose()) * sv.vt.topRows(k0);
  set_bond_factors(m, b, u, sv2.s.head(k), vt, absorb_left);
  if (rep)
    rep->note_cut(
        tot > 0.0 ? (ch0.discarded_weight + dropped + ch2.discarded_weight) /
                        tot
                  : 0.0,
        k);
  return k;
}

int dmt_truncate_bond(Mpdo& m, int b, int max_bond, TruncationReport* rep) {
  if (b < 0 || b + 1 >= m.n_sites)
    throw std::out_of_range("dmt_truncate_bond: bad bond");
  if (m.bond_dim(b) <= max_bond) return m.bond_dim(b);
  m.canonize(b);
  const Eigen::MatrixXd theta = m.t[b].lp_r() * m.t[b + 1].l_pr();
  return dmt_truncate_bond(m, b, theta, max_bond, 1e-15, false, rep);
}

void dmt_sweep(Mpdo& m, int max_bond, TruncationReport* rep) {
  for (int b = 0; b + 1 < m.n_sites; ++b)
    dmt_truncate_bond(m, b, max_bond, rep);
}

}  // namespace qturn
