#include "qturn/mps.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "qturn/linalg.hpp"

namespace qturn {

namespace {

using Eigen::MatrixXcd;

// Lift a two-qubit gate onto two neighbouring sites, either of which may be
// the fused (qubit x ancilla) one; the ancilla bit rides along untouched.
MatrixXcd embed_gate(const Eigen::Matrix4cd& u, int dpa, int dpb) {
  const int dim = dpa * dpb;
  MatrixXcd g = MatrixXcd::Zero(dim, dim);
  for (int pa = 0; pa < dpa; ++pa)
    for (int qa = 0; qa < dpa; ++qa) {
      if (dpa == 4 && (pa & 1) != (qa & 1)) continue;
      const int na = dpa == 4 ? pa >> 1 : pa;
      const int ma = dpa == 4 ? qa >> 1 : qa;
      for (int pb = 0; pb < dpb; ++pb)
        for (int qb = 0; qb < dpb; ++qb) {
          if (dpb == 4 && (pb & 1) != (qb & 1)) continue;
          const int nb = dpb == 4 ? pb >> 1 : pb;
          const int mb = dpb == 4 ? qb >> 1 : qb;
          g(pa * dpb + pb, qa * dpb + qb) = u(2 * na + nb, 2 * ma + mb);
        }
    }
  return g;
}

void apply_site_gate(PureSite& s, const MatrixXcd& g) {
  const int dp = s.dp;
  for (int l = 0; l < s.dl(); ++l)
    s.m.middleRows(l * dp, dp) = (g * s.m.middleRows(l * dp, dp)).eval();
}

// Thin QR split of the center site; the triangular factor moves right.
void center_right(PureState& st) {
  PureSite& a = st.sites[st.center];
  PureSite& b = st.sites[st.center + 1];
  const int rows = static_cast<int>(a.m.rows());
  const int k = std::min(rows, a.dr());
  Eigen::HouseholderQR<MatrixXcd> qr(a.m);
  MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(rows, k);
  const MatrixXcd r =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  a.m = std::move(q);
  MatrixXcd nb(k * b.dp, b.dr());
  for (int p = 0; p < b.dp; ++p) {
    const MatrixXcd np = r * b.slice(p);
    for (int l = 0; l < k; ++l) nb.row(l * b.dp + p) = np.row(l);
  }
  b.m = std::move(nb);
  ++st.center;
}

// Mirror split: QR of the adjoint leaves a row-orthonormal site and pushes
// the triangular factor into the left neighbour.
void center_left(PureState& st) {
  PureSite& b = st.sites[st.center];
  PureSite& a = st.sites[st.center - 1];
  const int dl = b.dl();
  const int dp = b.dp;
  const int dr = b.dr();
  MatrixXcd w(dl, dp * dr);
  for (int p = 0; p < dp; ++p) w.middleCols(p * dr, dr) = b.slice(p);
  const int k = std::min(dl, dp * dr);
  Eigen::HouseholderQR<MatrixXcd> qr(w.adjoint());
  MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(dp * dr, k);
  const MatrixXcd rt =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const MatrixXcd qh = q.adjoint();
  MatrixXcd nb(k * dp, dr);
  for (int p = 0; p < dp; ++p)
    for (int l = 0; l < k; ++l) nb.row(l * dp + p) = qh.block(l, p * dr, 1, dr);
  b.m = std::move(nb);
  a.m = (a.m * rt.adjoint()).eval();
  --st.center;
}

void ensure_center(PureState& st, int target) {
  while (st.center < target) center_right(st);
  while (st.center > target) center_left(st);
}

// Gate on bond (j, j+1). The center sits on one of the two sites, so the
// pair's singular values are the global Schmidt weights: capping the rank
// drops the least total weight and the discarded fraction is exactly the
// norm lost, which the rescale puts back.
void apply_bond_gate(PureState& st, int j, const MatrixXcd& g,
                     const PureEvolveOptions& opt, TruncationReport& rep) {
  PureSite& a = st.sites[j];
  PureSite& b = st.sites[j + 1];
  const int dl = a.dl();
  const int dpa = a.dp;
  const int dpb = b.dp;
  const int dr = b.dr();
  const int dpp = dpa * dpb;

  MatrixXcd theta(dl * dpp, dr);
  for (int pb = 0; pb < dpb; ++pb) {
    const MatrixXcd cp = a.m * b.slice(pb);  // rows (l * dpa + pa)
    for (int la = 0; la < dl * dpa; ++la) theta.row(la * dpb + pb) = cp.row(la);
  }
  for (int l = 0; l < dl; ++l)
    theta.middleRows(l * dpp, dpp) =
        (g * theta.middleRows(l * dpp, dpp)).eval();

  MatrixXcd wide(dl * dpa, dpb * dr);
  for (int la = 0; la < dl * dpa; ++la)
    for (int pb = 0; pb < dpb; ++pb)
      wide.block(la, pb * dr, 1, dr) = theta.block(la * dpb + pb, 0, 1, dr);

  const linalg::SvdC f = linalg::svd(wide);
  const linalg::TruncationChoice cut =
      linalg::truncation_rank(f.s, opt.max_bond, opt.svd_rel_tol);
  const int k = cut.rank;
  const double total = f.s.squaredNorm();
  const double kept = total - cut.discarded_weight;
  if (!(kept > 0.0)) throw std::runtime_error("pure evolve: state vanished");
  rep.note_cut(total > 0.0 ? cut.discarded_weight / total : 0.0, k);

  double scale = 1.0;
  if (cut.discarded_weight > 0.0) {
    scale = std::sqrt(total / kept);
    rep.renorm_log_abs += std::abs(std::log(scale));
    ++rep.renorm_count;
  }

  a.m = f.u.leftCols(k);
  MatrixXcd nb(k * dpb, dr);
  for (int kk = 0; kk < k; ++kk)
    for (int pb = 0; pb < dpb; ++pb)
      nb.row(kk * dpb + pb) = (scale * f.s(kk)) * f.vh.block(kk, pb * dr, 1, dr);
  b.m = std::move(nb);
  st.center = j + 1;
}

}  // namespace

Eigen::MatrixXcd PureSite::slice(int p) const {
  Eigen::MatrixXcd out(dl(), dr());
  for (int l = 0; l < dl(); ++l) out.row(l) = m.row(l * dp + p);
  return out;
}

int PureState::max_bond_dim() const {
  int b = 1;
  for (const PureSite& s : sites) b = std::max({b, s.dl(), s.dr()});
  return b;
}

double PureState::norm_sq() const {
  MatrixXcd g = MatrixXcd::Identity(1, 1);
  for (const PureSite& s : sites) {
    MatrixXcd next = MatrixXcd::Zero(s.dr(), s.dr());
    for (int p = 0; p < s.dp; ++p) {
      const MatrixXcd sp = s.slice(p);
      next += sp.adjoint() * g * sp;
    }
    g = std::move(next);
  }
  return g(0, 0).real();
}

Eigen::Matrix4cd PureState::super_density() const {
  const int c = chain.central;
  MatrixXcd g = MatrixXcd::Identity(1, 1);
  for (int j = 0; j < c; ++j) {
    const PureSite& s = sites[j];
    MatrixXcd next = MatrixXcd::Zero(s.dr(), s.dr());
    for (int p = 0; p < s.dp; ++p) {
      const MatrixXcd sp = s.slice(p);
      next += sp.adjoint() * g * sp;
    }
    g = std::move(next);
  }
  MatrixXcd h = MatrixXcd::Identity(1, 1);
  for (int j = static_cast<int>(sites.size()) - 1; j > c; --j) {
    const PureSite& s = sites[j];
    MatrixXcd next = MatrixXcd::Zero(s.dl(), s.dl());
    for (int p = 0; p < s.dp; ++p) {
      const MatrixXcd sp = s.slice(p);
      next += sp * h * sp.adjoint();
    }
    h = std::move(next);
  }
  const PureSite& s = sites[c];
  Eigen::Matrix4cd rho;
  for (int p = 0; p < 4; ++p) {
    const MatrixXcd gph = g * s.slice(p) * h;
    for (int q = 0; q < 4; ++q)
      rho(p, q) = gph.cwiseProduct(s.slice(q).conjugate()).sum();
  }
  rho /= rho.trace();
  return rho;
}

std::pair<double, double> PureState::ancilla_xy() const {
  const Eigen::Matrix4cd rho = super_density();
  const std::complex<double> off = rho(0, 1) + rho(2, 3);
  return {2.0 * off.real(), -2.0 * off.imag()};
}

PureState pure_from_product(const InitialStateSpec& spec,
                            const ChainSpec& chain) {
  chain.validate();
  const std::vector<double> probs = spec.site_probabilities(chain.n_sites);
  PureState st;
  st.chain = chain;
  st.sites.resize(chain.n_sites);
  const double amp = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < chain.n_sites; ++j) {
    const double p = probs[j];
    if (p != 0.0 && p != 1.0)
      throw std::invalid_argument(
          "pure evolution requires deterministic site occupations");
    const int occ = p == 1.0 ? 1 : 0;
    PureSite& s = st.sites[j];
    if (j == chain.central) {
      s.dp = 4;
      s.m = MatrixXcd::Zero(4, 1);
      s.m(2 * occ, 0) = amp;      // ancilla starts in |+>
      s.m(2 * occ + 1, 0) = amp;
    } else {
      s.dp = 2;
      s.m = MatrixXcd::Zero(2, 1);
      s.m(occ, 0) = 1.0;
    }
  }
  return st;
}

PureEvolveResult evolve_pure(PureState& st, const CircuitSchedule& sched,
                             const PureEvolveOptions& opt) {
  if (st.chain.n_sites != sched.chain.n_sites ||
      st.chain.central != sched.chain.central)
    throw std::invalid_argument("pure evolve: schedule chain mismatch");
  if (opt.max_bond < 1)
    throw std::invalid_argument("pure evolve: max_bond must be positive");

  const auto t0 = std::chrono::steady_clock::now();
  PureEvolveResult out;
  out.report.max_bond_seen = st.max_bond_dim();

  auto record = [&](int cycle) {
    const auto [x, y] = st.ancilla_xy();
    out.points.push_back({cycle, x, y});
  };
  record(0);

  const int fused = st.chain.central;
  for (std::size_t c = 0; c < sched.cycle_events.size(); ++c) {
    for (const GateEvent& ev : sched.cycle_events[c]) {
      if (ev.kind == GateEvent::Kind::turnstile) {
        if (ev.a != fused || ev.b != st.chain.ancilla())
          throw std::invalid_argument("pure evolve: misplaced turnstile");
        // the fused index 2*occ + ancilla matches the gate's own ordering
        apply_site_gate(st.sites[fused], ev.u);
        continue;
      }
      if (ev.b != ev.a + 1)
        throw std::invalid_argument("pure evolve: gate on non-adjacent sites");
      if (st.center < ev.a)
        ensure_center(st, ev.a);
      else if (st.center > ev.a + 1)
        ensure_center(st, ev.a + 1);
      apply_bond_gate(
          st, ev.a, embed_gate(ev.u, st.sites[ev.a].dp, st.sites[ev.a + 1].dp),
          opt, out.report);
    }
    const int cycle = static_cast<int>(c) + 1;
    record(cycle);
    if (opt.observer) opt.observer(cycle, st);
  }

  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace qturn
