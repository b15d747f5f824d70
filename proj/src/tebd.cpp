#include "qturn/tebd.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qturn/dmt.hpp"

namespace qturn {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

const Eigen::Matrix2cd& pauli(int p) {
  using C = std::complex<double>;
  static const std::array<Eigen::Matrix2cd, 4> s = [] {
    std::array<Eigen::Matrix2cd, 4> a;
    a[0] << 1, 0, 0, 1;
    a[1] << 0, 1, 1, 0;
    a[2] << C(0, 0), C(0, -1), C(0, 1), C(0, 0);
    a[3] << 1, 0, 0, -1;
    return a;
  }();
  return s[p];
}

Eigen::Matrix4cd kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

}  // namespace

Eigen::MatrixXd qubit_unitary_superop(const Eigen::Matrix2cd& u) {
  KrausSet ks;
  ks.k = {u};
  return kraus_superop(ks);
}

Eigen::MatrixXd kraus_superop(const KrausSet& ks) {
  Eigen::MatrixXd s(4, 4);
  for (int c = 0; c < 4; ++c) {
    Eigen::Matrix2cd w = Eigen::Matrix2cd::Zero();
    for (const auto& k : ks.k)
      w += k * (pauli(c) / kSqrt2) * k.adjoint();
    for (int r = 0; r < 4; ++r)
      s(r, c) = ((pauli(r) / kSqrt2) * w).trace().real();
  }
  return s;
}

Eigen::MatrixXd two_qubit_superop(const Eigen::Matrix4cd& u) {
  std::array<Eigen::Matrix4cd, 16> basis;
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      basis[4 * p + q] = kron2(pauli(p), pauli(q)) / 2.0;
  Eigen::MatrixXd s(16, 16);
  for (int c = 0; c < 16; ++c) {
    const Eigen::Matrix4cd w = u * basis[c] * u.adjoint();
    for (int r = 0; r < 16; ++r)
      s(r, c) = (basis[r] * w).trace().real();
  }
  return s;
}

Eigen::MatrixXd embed_central(const Eigen::MatrixXd& e4) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(16, 16);
  for (int ip = 0; ip < 4; ++ip)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        e(4 * ip + j, 4 * i + j) = e4(ip, i);
  return e;
}

Eigen::MatrixXd embed_ancilla(const Eigen::MatrixXd& e4) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(16, 16);
  for (int i = 0; i < 4; ++i)
    for (int jp = 0; jp < 4; ++jp)
      for (int j = 0; j < 4; ++j)
        e(4 * i + jp, 4 * i + j) = e4(jp, j);
  return e;
}

namespace {

// Combined coefficient-space operator on the (p_left, p_right) pair of the
// two positions under a data gate, p_left major.
Eigen::MatrixXd bond_middle_op(const Mpdo& m, const GateEvent& ev) {
  const Eigen::MatrixXd g2 = two_qubit_superop(ev.u);
  const bool lsuper = (ev.a == m.super_pos);
  const bool rsuper = (ev.b == m.super_pos);
  if (!lsuper && !rsuper) return g2;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(64, 64);
  if (rsuper) {
    // gate qubits (data q, central i); ancilla index j rides along
    for (int qp = 0; qp < 4; ++qp)
      for (int ip = 0; ip < 4; ++ip)
        for (int q = 0; q < 4; ++q)
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
              e(qp * 16 + 4 * ip + j, q * 16 + 4 * i + j) =
                  g2(qp * 4 + ip, q * 4 + i);
  } else {
    // gate qubits (central i, data q)
    for (int qp = 0; qp < 4; ++qp)
      for (int ip = 0; ip < 4; ++ip)
        for (int q = 0; q < 4; ++q)
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
              e((4 * ip + j) * 4 + qp, (4 * i + j) * 4 + q) =
                  g2(ip * 4 + qp, i * 4 + q);
  }
  return e;
}

// theta[(l pa), (pb r)] <- sum_{pa' pb'} s[(pa pb), (pa' pb')] theta[(l pa'), (pb' r)]
void apply_middle(Eigen::MatrixXd& theta, const Eigen::MatrixXd& s, int dl,
                  int da, int db, int dr) {
  Eigen::MatrixXd in(da * db, dr), out(da * db, dr);
  for (int l = 0; l < dl; ++l) {
    for (int pa = 0; pa < da; ++pa)
      for (int pb = 0; pb < db; ++pb)
        in.row(pa * db + pb) =
            theta.row(l * da + pa).segment(pb * dr, dr);
    out.noalias() = s * in;
    for (int pa = 0; pa < da; ++pa)
      for (int pb = 0; pb < db; ++pb)
        theta.row(l * da + pa).segment(pb * dr, dr) =
            out.row(pa * db + pb);
  }
}

}  // namespace

void apply_gate_event(Mpdo& m, const GateEvent& ev, const GateTruncation& tr,
                      TruncationReport* rep) {
  if (ev.kind == GateEvent::Kind::turnstile) {
    if (m.super_pos < 0)
      throw std::logic_error("apply_gate_event: turnstile without ancilla");
    // orthogonal in coefficient space, so canonical flags survive
    m.apply_site_superop(m.super_pos, two_qubit_superop(ev.u));
    return;
  }
  const int b = ev.a;
  if (ev.b != ev.a + 1 || b < 0 || b + 1 >= m.n_sites)
    throw std::invalid_argument(
        "apply_gate_event: data gate must act on adjacent positions");
  m.canonize(b);
  const int dl = m.t[b].dl, da = m.t[b].dp;
  const int db = m.t[b + 1].dp, dr = m.t[b + 1].dr;
  Eigen::MatrixXd theta = m.t[b].lp_r() * m.t[b + 1].l_pr();
  apply_middle(theta, bond_middle_op(m, ev), dl, da, db, dr);
  if (tr.scheme == TruncScheme::dmt)
    dmt_truncate_bond(m, b, theta, tr.max_bond, 1e-15, tr.absorb_left, rep);
  else
    svd_truncate_bond(m, b, theta, tr.max_bond, tr.rel_tol, tr.absorb_left,
                      rep);
}

void apply_noise_round(Mpdo& m, const NoiseSpec& noise) {
  if (!noise.enabled()) return;
  const Eigen::MatrixXd e4 = kraus_superop(noise.kraus());
  const Eigen::MatrixXd e16 = m.super_pos >= 0 ? embed_central(e4) : e4;
  for (int k = 0; k < m.n_sites; ++k)
    m.apply_site_superop(k, k == m.super_pos ? e16 : e4);
  if (noise.on_ancilla && m.super_pos >= 0)
    m.apply_site_superop(m.super_pos, embed_ancilla(e4));
  m.center = -1;  // channels are not isometries on the coefficients
}

namespace {

void renormalize(Mpdo& m, TruncationReport& rep) {
  const double tr = m.trace();
  if (!(tr > 0.0))
    throw std::runtime_error("evolve: state trace collapsed");
  const double drift = std::abs(tr - 1.0);
  if (drift > rep.max_trace_drift) rep.max_trace_drift = drift;
  if (drift > 1e-15) {
    m.scale(1.0 / tr);
    rep.renorm_log_abs += std::abs(std::log(tr));
    rep.renorm_count += 1;
  }
}

}  // namespace

EvolveResult evolve(Mpdo& m, const CircuitSchedule& sched,
                    const EvolveOptions& opt) {
  sched.chain.validate();
  if (m.n_sites != sched.chain.n_sites || m.super_pos != sched.chain.central)
    throw std::invalid_argument("evolve: state/schedule chain mismatch");
  if (static_cast<int>(sched.cycle_events.size()) < sched.cycles)
    throw std::invalid_argument("evolve: schedule shorter than cycle count");

  const auto t0 = std::chrono::steady_clock::now();
  EvolveResult res;
  {
    auto [x, y] = mpdo_ancilla_xy(m);
    res.points.push_back({0, x, y});
  }

  const bool sublayer_noise = opt.noise.enabled() &&
                              opt.noise.placement == NoiseSpec::Placement::sublayer_end;
  const bool cycle_noise = opt.noise.enabled() &&
                           opt.noise.placement == NoiseSpec::Placement::cycle_end;

  bool ltr = true;  // data sublayers sweep in alternating directions
  for (int c = 0; c < sched.cycles && !res.report.aborted; ++c) {
    const auto& events = sched.cycle_events[c];
    bool data_pending = false;
    size_t i = 0;
    while (i < events.size()) {
      const GateEvent& ev = events[i];
      if (ev.kind == GateEvent::Kind::turnstile) {
        apply_gate_event(m, ev, {}, &res.report);
        if (data_pending && sublayer_noise) apply_noise_round(m, opt.noise);
        data_pending = false;
        ++i;
        continue;
      }
      size_t j = i;
      while (j < events.size() && events[j].kind == GateEvent::Kind::data) ++j;
      GateTruncation g;
      g.absorb_left = !ltr;
      if (opt.scheme == TruncScheme::dmt &&
          opt.cadence == DmtCadence::sublayer) {
        g.scheme = TruncScheme::svd;  // exact split; DMT pass afterwards
        g.rel_tol = 1e-15;
      } else {
        g.scheme = opt.scheme;
        g.max_bond = opt.max_bond;
        g.rel_tol = opt.scheme == TruncScheme::dmt ? 1e-15 : opt.svd_rel_tol;
      }
      if (ltr) {
        for (size_t k = i; k < j; ++k)
          apply_gate_event(m, events[k], g, &res.report);
      } else {
        for (size_t k = j; k-- > i;)
          apply_gate_event(m, events[k], g, &res.report);
      }
      if (opt.scheme == TruncScheme::dmt && opt.cadence == DmtCadence::sublayer)
        dmt_sweep(m, opt.max_bond, &res.report);
      renormalize(m, res.report);
      ltr = !ltr;
      data_pending = true;
      i = j;
      if (res.report.discarded_weight > opt.discarded_weight_budget) {
        res.report.aborted = true;
        res.report.aborted_cycle = c + 1;
        break;
      }
    }
    if (res.report.aborted) break;
    if (cycle_noise) apply_noise_round(m, opt.noise);
    auto [x, y] = mpdo_ancilla_xy(m);
    res.points.push_back({c + 1, x, y});
    if (opt.observer) opt.observer(c + 1, m);
  }
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

Mpdo random_mpdo(int n_sites, std::uint64_t seed, int target_bond) {
  if (n_sites < 2) throw std::invalid_argument("random_mpdo: n_sites < 2");
  Rng rng(mix_seed({seed, 0x6d70646fULL}));
  Mpdo m;
  m.n_sites = n_sites;
  m.super_pos = -1;
  m.t.reserve(n_sites);
  for (int k = 0; k < n_sites; ++k) {
    Tensor3 a(1, 4, 1);
    const double p = rng.uniform(0.15, 0.85);
    a.at(0, 0, 0) = 1.0 / kSqrt2;
    a.at(0, 3, 0) = (1.0 - 2.0 * p) / kSqrt2;
    m.t.push_back(std::move(a));
  }
  m.center = 0;

  const Eigen::MatrixXd e4 = kraus_superop(depolarizing_kraus(0.05));
  GateTruncation g;
  g.max_bond = target_bond;
  g.rel_tol = 1e-14;
  for (int layer = 0; layer < 10; ++layer) {
    for (int b = layer % 2; b + 1 < n_sites; b += 2) {
      GateEvent ev{GateEvent::Kind::data, b, b + 1, haar_u1_gate(rng).m};
      apply_gate_event(m, ev, g, nullptr);
    }
    for (int k = 0; k < n_sites; ++k) m.apply_site_superop(k, e4);
    m.center = -1;
  }
  m.scale(1.0 / m.trace());
  return m;
}

}  // namespace qturn
