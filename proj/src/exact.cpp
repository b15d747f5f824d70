#include "qturn/exact.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <iostream>
#include <stdexcept>

namespace qturn {

using std::complex;

namespace {

constexpr int kMixedQubitCap = 13;

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

// In-place two-site gate on a contiguous amplitude vector. Site a supplies
// the high bit of the local index.
void apply2_vec(complex<double>* v, std::int64_t dim, const Eigen::Matrix4cd& u,
                std::int64_t ma, std::int64_t mb) {
  const std::int64_t skip = ma | mb;
  for (std::int64_t i = 0; i < dim; ++i) {
    if (i & skip) continue;
    complex<double> a0 = v[i];
    complex<double> a1 = v[i | mb];
    complex<double> a2 = v[i | ma];
    complex<double> a3 = v[i | ma | mb];
    v[i] = u(0, 0) * a0 + u(0, 1) * a1 + u(0, 2) * a2 + u(0, 3) * a3;
    v[i | mb] = u(1, 0) * a0 + u(1, 1) * a1 + u(1, 2) * a2 + u(1, 3) * a3;
    v[i | ma] = u(2, 0) * a0 + u(2, 1) * a1 + u(2, 2) * a2 + u(2, 3) * a3;
    v[i | ma | mb] = u(3, 0) * a0 + u(3, 1) * a1 + u(3, 2) * a2 + u(3, 3) * a3;
  }
}

void apply1_vec(complex<double>* v, std::int64_t dim, const Eigen::Matrix2cd& u,
                std::int64_t m) {
  for (std::int64_t i = 0; i < dim; ++i) {
    if (i & m) continue;
    complex<double> a0 = v[i];
    complex<double> a1 = v[i | m];
    v[i] = u(0, 0) * a0 + u(0, 1) * a1;
    v[i | m] = u(1, 0) * a0 + u(1, 1) * a1;
  }
}

// rho <- (gate on row index) rho
template <typename GateMat>
void left_mul(Mat& rho, const GateMat& u, std::int64_t ma, std::int64_t mb) {
  const std::int64_t dim = rho.rows();
  for (std::int64_t c = 0; c < dim; ++c) {
    if constexpr (GateMat::RowsAtCompileTime == 4)
      apply2_vec(rho.col(c).data(), dim, u, ma, mb);
    else
      apply1_vec(rho.col(c).data(), dim, u, ma);
  }
}

// rho <- rho (gate on column index)^T applied as columns mixing, i.e.
// rho <- rho u^dag when called with u = conj(gate).
void right_mix2(Mat& rho, const Eigen::Matrix4cd& v, std::int64_t ma,
                std::int64_t mb) {
  const std::int64_t dim = rho.rows();
  const std::int64_t skip = ma | mb;
  Mat buf(dim, 4);
  for (std::int64_t c = 0; c < dim; ++c) {
    if (c & skip) continue;
    buf.col(0) = rho.col(c);
    buf.col(1) = rho.col(c | mb);
    buf.col(2) = rho.col(c | ma);
    buf.col(3) = rho.col(c | ma | mb);
    rho.col(c) = v(0, 0) * buf.col(0) + v(0, 1) * buf.col(1) +
                 v(0, 2) * buf.col(2) + v(0, 3) * buf.col(3);
    rho.col(c | mb) = v(1, 0) * buf.col(0) + v(1, 1) * buf.col(1) +
                      v(1, 2) * buf.col(2) + v(1, 3) * buf.col(3);
    rho.col(c | ma) = v(2, 0) * buf.col(0) + v(2, 1) * buf.col(1) +
                      v(2, 2) * buf.col(2) + v(2, 3) * buf.col(3);
    rho.col(c | ma | mb) = v(3, 0) * buf.col(0) + v(3, 1) * buf.col(1) +
                           v(3, 2) * buf.col(2) + v(3, 3) * buf.col(3);
  }
}

void right_mix1(Mat& rho, const Eigen::Matrix2cd& v, std::int64_t m) {
  const std::int64_t dim = rho.rows();
  Mat buf(dim, 2);
  for (std::int64_t c = 0; c < dim; ++c) {
    if (c & m) continue;
    buf.col(0) = rho.col(c);
    buf.col(1) = rho.col(c | m);
    rho.col(c) = v(0, 0) * buf.col(0) + v(0, 1) * buf.col(1);
    rho.col(c | m) = v(1, 0) * buf.col(0) + v(1, 1) * buf.col(1);
  }
}

void check_site(const DenseState& s, int site) {
  if (site < 0 || site >= s.n_qubits)
    throw std::out_of_range("site index outside register");
}

}  // namespace

double DenseState::trace() const {
  if (mixed) return rho.trace().real();
  return psi.squaredNorm();
}

void DenseState::promote_to_mixed() {
  if (mixed) return;
  if (n_qubits > kMixedQubitCap)
    throw std::runtime_error(
        "density-matrix mode is capped at 13 qubits by the memory budget");
  std::clog << "[exact] promoting " << n_qubits
            << "-qubit statevector to a density matrix\n";
  rho = psi * psi.adjoint();
  psi.resize(0);
  mixed = true;
}

std::vector<double> InitialStateSpec::site_probabilities(int n) const {
  if (n < 2 || n % 2) throw std::invalid_argument("chain length must be even");
  std::vector<double> p(n);
  switch (kind) {
    case Kind::domain_wall: {
      // Single-site weights exp(+-mu/2) for occupied/empty on the favoured
      // side; <2n-1> per left-half site is tanh(mu/2).
      const double hi = std::exp(mu / 2.0) /
                        (std::exp(mu / 2.0) + std::exp(-mu / 2.0));
      for (int i = 0; i < n; ++i) p[i] = (i < n / 2) ? hi : 1.0 - hi;
      break;
    }
    case Kind::neel:
      for (int i = 0; i < n; ++i) p[i] = (i % 2 == 0) ? 1.0 : 0.0;
      break;
    case Kind::polarized_domain_wall:
      for (int i = 0; i < n; ++i) p[i] = (i < n / 2) ? 1.0 : 0.0;
      break;
    case Kind::custom:
      if (static_cast<int>(p_occupied.size()) != n)
        throw std::invalid_argument(
            "custom state length does not match the chain");
      for (double v : p_occupied)
        if (!(v >= 0.0 && v <= 1.0))
          throw std::invalid_argument("occupation probability outside [0, 1]");
      p = p_occupied;
      break;
  }
  return p;
}

bool InitialStateSpec::is_pure(int n) const {
  for (double v : site_probabilities(n))
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

DenseState build_initial(const InitialStateSpec& spec, const ChainSpec& chain) {
  chain.validate();
  const int n = chain.n_sites;
  const auto p = spec.site_probabilities(n);
  DenseState s;
  s.n_qubits = n + 1;
  const std::int64_t dim = s.dim();
  const std::int64_t anc = std::int64_t{1} << n;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  if (spec.is_pure(n)) {
    std::int64_t base = 0;
    for (int i = 0; i < n; ++i)
      if (p[i] == 1.0) base |= std::int64_t{1} << i;
    s.psi = Vec::Zero(dim);
    s.psi(base) = inv_sqrt2;
    s.psi(base | anc) = inv_sqrt2;
    return s;
  }

  if (s.n_qubits > kMixedQubitCap)
    throw std::runtime_error(
        "density-matrix mode is capped at 13 qubits by the memory budget");
  s.mixed = true;
  s.rho = Mat::Zero(dim, dim);
  const std::int64_t data_dim = std::int64_t{1} << n;
  for (std::int64_t b = 0; b < data_dim; ++b) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) w *= (b >> i) & 1 ? p[i] : 1.0 - p[i];
    if (w == 0.0) continue;
    s.rho(b, b) = 0.5 * w;
    s.rho(b, b | anc) = 0.5 * w;
    s.rho(b | anc, b) = 0.5 * w;
    s.rho(b | anc, b | anc) = 0.5 * w;
  }
  return s;
}

void apply_two_site(DenseState& s, const Eigen::Matrix4cd& u, int a, int b) {
  check_site(s, a);
  check_site(s, b);
  if (a == b) throw std::invalid_argument("gate sites must differ");
  const std::int64_t ma = std::int64_t{1} << a;
  const std::int64_t mb = std::int64_t{1} << b;
  if (s.mixed) {
    left_mul(s.rho, u, ma, mb);
    right_mix2(s.rho, u.conjugate(), ma, mb);
  } else {
    apply2_vec(s.psi.data(), s.dim(), u, ma, mb);
  }
}

void apply_one_site(DenseState& s, const Eigen::Matrix2cd& u, int site) {
  check_site(s, site);
  const std::int64_t m = std::int64_t{1} << site;
  if (s.mixed) {
    left_mul(s.rho, u, m, 0);
    right_mix1(s.rho, u.conjugate(), m);
  } else {
    apply1_vec(s.psi.data(), s.dim(), u, m);
  }
}

void apply_channel(DenseState& s, const KrausSet& kraus, int site) {
  check_site(s, site);
  s.promote_to_mixed();
  const std::int64_t m = std::int64_t{1} << site;
  Mat acc = Mat::Zero(s.rho.rows(), s.rho.cols());
  Mat tmp;
  for (const auto& k : kraus.k) {
    tmp = s.rho;
    left_mul(tmp, k, m, 0);
    right_mix1(tmp, k.conjugate(), m);
    acc += tmp;
  }
  s.rho.swap(acc);
}

namespace {

void apply_noise_round(DenseState& s, const NoiseSpec& noise,
                       const KrausSet& kraus, const ChainSpec& chain) {
  for (int i = 0; i < chain.n_sites; ++i) apply_channel(s, kraus, i);
  if (noise.on_ancilla) apply_channel(s, kraus, chain.ancilla());
}

}  // namespace

void run_schedule(DenseState& s, const CircuitSchedule& sched,
                  const NoiseSpec& noise,
                  const std::function<void(int, const DenseState&)>& observer) {
  const bool noisy = noise.enabled();
  KrausSet kraus;
  if (noisy) kraus = noise.kraus();

  for (int k = 0; k < sched.cycles; ++k) {
    int data_gates_pending = 0;
    for (const auto& ev : sched.cycle_events[k]) {
      apply_two_site(s, ev.u, ev.a, ev.b);
      if (ev.kind == GateEvent::Kind::data) {
        ++data_gates_pending;
      } else if (noisy && noise.placement == NoiseSpec::Placement::sublayer_end &&
                 data_gates_pending > 0) {
        apply_noise_round(s, noise, kraus, sched.chain);
        data_gates_pending = 0;
      }
    }
    if (noisy && noise.placement == NoiseSpec::Placement::cycle_end)
      apply_noise_round(s, noise, kraus, sched.chain);
    if (observer) observer(k + 1, s);
  }
}

std::pair<double, double> ancilla_xy(const DenseState& s) {
  const std::int64_t anc = std::int64_t{1} << (s.n_qubits - 1);
  complex<double> sum = 0.0;
  if (s.mixed) {
    for (std::int64_t b = 0; b < anc; ++b) sum += s.rho(b, b | anc);
    return {2.0 * sum.real(), -2.0 * sum.imag()};
  }
  for (std::int64_t b = 0; b < anc; ++b)
    sum += std::conj(s.psi(b)) * s.psi(b | anc);
  return {2.0 * sum.real(), 2.0 * sum.imag()};
}

double occupation(const DenseState& s, int site) {
  check_site(s, site);
  const std::int64_t m = std::int64_t{1} << site;
  double acc = 0.0;
  for (std::int64_t b = 0; b < s.dim(); ++b) {
    if (!(b & m)) continue;
    acc += s.mixed ? s.rho(b, b).real() : std::norm(s.psi(b));
  }
  return acc;
}

double total_occupation(const DenseState& s, const ChainSpec& chain) {
  double acc = 0.0;
  for (int i = 0; i < chain.n_sites; ++i) acc += occupation(s, i);
  return acc;
}

namespace {

int right_charge(std::int64_t b, std::int64_t right_mask) {
  return std::popcount(static_cast<std::uint64_t>(b & right_mask));
}

}  // namespace

std::vector<ChargeDistribution> two_point_oracle(const DenseState& initial,
                                                 const CircuitSchedule& sched) {
  if (sched.lambda != 0.0)
    throw std::invalid_argument("two_point_oracle requires a lambda = 0 schedule");
  const ChainSpec& chain = sched.chain;
  const int nr_sites = chain.n_sites - (chain.central + 1);
  std::int64_t right_mask = 0;
  for (int i = chain.central + 1; i < chain.n_sites; ++i)
    right_mask |= std::int64_t{1} << i;

  const std::int64_t dim = initial.dim();

  // Sector decomposition; projectors act on right-half charge only.
  std::vector<DenseState> sector_states;
  std::vector<int> sector_charge;
  if (!initial.mixed) {
    std::vector<double> w(nr_sites + 1, 0.0);
    for (std::int64_t b = 0; b < dim; ++b)
      w[right_charge(b, right_mask)] += std::norm(initial.psi(b));
    int support = -1;
    for (int n = 0; n <= nr_sites; ++n) {
      if (w[n] < 1e-14) continue;
      if (support >= 0)
        throw std::invalid_argument(
            "two_point_oracle: pure state spans several right-half charge "
            "sectors (coherences between sectors)");
      support = n;
    }
    sector_states.push_back(initial);
    sector_charge.push_back(support);
  } else {
    double off = 0.0;
    for (std::int64_t r = 0; r < dim; ++r)
      for (std::int64_t c = 0; c < dim; ++c)
        if (right_charge(r, right_mask) != right_charge(c, right_mask))
          off = std::max(off, std::abs(initial.rho(r, c)));
    if (off > 1e-12)
      throw std::invalid_argument(
          "two_point_oracle: initial state has coherences between right-half "
          "charge sectors");
    for (int n = 0; n <= nr_sites; ++n) {
      DenseState sec = initial;
      double weight = 0.0;
      for (std::int64_t r = 0; r < dim; ++r) {
        if (right_charge(r, right_mask) != n) {
          sec.rho.row(r).setZero();
          sec.rho.col(r).setZero();
        } else {
          weight += sec.rho(r, r).real();
        }
      }
      if (weight < 1e-14) continue;
      sector_states.push_back(std::move(sec));
      sector_charge.push_back(n);
    }
  }

  std::vector<ChargeDistribution> out;
  NoiseSpec no_noise;
  for (int k = 0; k < sched.cycles; ++k) {
    for (auto& sec : sector_states)
      for (const auto& ev : sched.cycle_events[k])
        apply_two_site(sec, ev.u, ev.a, ev.b);

    ChargeDistribution d;
    d.q_min = -nr_sites;
    d.p.assign(2 * nr_sites + 1, 0.0);
    for (size_t si = 0; si < sector_states.size(); ++si) {
      const auto& sec = sector_states[si];
      for (std::int64_t b = 0; b < dim; ++b) {
        const int q = right_charge(b, right_mask) - sector_charge[si];
        const double w =
            sec.mixed ? sec.rho(b, b).real() : std::norm(sec.psi(b));
        d.p[q + nr_sites] += w;
      }
    }
    d.trim();
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace qturn
