#include "qturn/gates.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace qturn {

using std::complex;
namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
const complex<double> kI{0.0, 1.0};
}  // namespace

double TwoSiteUnitary::unitarity_defect() const {
  return (m.adjoint() * m - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff();
}

double TwoSiteUnitary::u1_defect() const {
  // Sectors by particle number: {0}, {1,2}, {3}.
  static const int sector[4] = {0, 1, 1, 2};
  double worst = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (sector[r] != sector[c]) worst = std::max(worst, std::abs(m(r, c)));
  return worst;
}

TwoSiteUnitary xxz_gate(double theta, double phi) {
  TwoSiteUnitary g;
  g.m.setZero();
  g.m(0, 0) = 1.0;
  g.m(1, 1) = std::cos(theta);
  g.m(1, 2) = -kI * std::sin(theta);
  g.m(2, 1) = -kI * std::sin(theta);
  g.m(2, 2) = std::cos(theta);
  g.m(3, 3) = std::exp(kI * phi);
  return g;
}

double anisotropy(double theta, double phi) {
  const double s = std::sin(theta);
  if (s == 0.0)
    throw std::invalid_argument("anisotropy: sin(theta) == 0");
  return std::sin(phi / 2.0) / s;
}

TwoSiteUnitary turnstile_gate(double lambda, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("turnstile_gate: sign must be +1 or -1");
  TwoSiteUnitary g;
  g.m.setIdentity();
  g.m(3, 3) = std::exp(kI * (sign * lambda));
  return g;
}

TwoSiteUnitary haar_u1_gate(Rng& rng) {
  // Haar on U(2) for the middle block: uniform point on S^3 plus a global
  // phase. |b|^2 is uniform on [0,1] for a uniform S^3 point.
  const double chi = std::asin(std::sqrt(rng.uniform()));
  const double psi = rng.uniform(0.0, 2.0 * kPi);
  const double xi = rng.uniform(0.0, 2.0 * kPi);
  const double alpha = rng.uniform(0.0, 2.0 * kPi);
  const complex<double> ga = std::exp(kI * alpha);
  TwoSiteUnitary g;
  g.m.setZero();
  g.m(0, 0) = std::exp(kI * rng.uniform(0.0, 2.0 * kPi));
  g.m(1, 1) = ga * std::exp(kI * psi) * std::cos(chi);
  g.m(1, 2) = ga * std::exp(kI * xi) * std::sin(chi);
  g.m(2, 1) = -ga * std::exp(-kI * xi) * std::sin(chi);
  g.m(2, 2) = ga * std::exp(-kI * psi) * std::cos(chi);
  g.m(3, 3) = std::exp(kI * rng.uniform(0.0, 2.0 * kPi));
  return g;
}

ChainSpec ChainSpec::standard(int n_sites) {
  ChainSpec c;
  c.n_sites = n_sites;
  c.central = n_sites / 2 - 1;
  c.validate();
  return c;
}

void ChainSpec::validate() const {
  if (n_sites < 2 || n_sites % 2 != 0)
    throw std::invalid_argument("ChainSpec: n_sites must be even and >= 2");
  if (central < 0 || central > n_sites - 2)
    throw std::invalid_argument(
        "ChainSpec: central site must have a right neighbour");
}

std::vector<int> sublayer_bonds(const ChainSpec& chain, int parity) {
  std::vector<int> bonds;
  for (int i = parity; i + 1 < chain.n_sites; i += 2) bonds.push_back(i);
  return bonds;
}

int CircuitSchedule::turnstile_event_count() const {
  int n = 0;
  for (const auto& cy : cycle_events)
    for (const auto& ev : cy)
      if (ev.kind == GateEvent::Kind::turnstile) ++n;
  return n;
}

namespace {

// Assembles the per-cycle event stream around a data-gate source.
template <typename GateAt>
CircuitSchedule build_schedule(const ChainSpec& chain, double lambda,
                               int cycles, bool with_leading, GateAt&& gate_at) {
  chain.validate();
  if (cycles < 0) throw std::invalid_argument("schedule: cycles must be >= 0");
  CircuitSchedule s;
  s.chain = chain;
  s.lambda = lambda;
  s.cycles = cycles;
  s.with_leading_turnstile = with_leading;
  s.cycle_events.resize(cycles);

  const auto left = sublayer_bonds(chain, chain.left_parity());
  const auto right = sublayer_bonds(chain, chain.right_parity());
  const int c = chain.central;
  const int anc = chain.ancilla();

  for (int k = 0; k < cycles; ++k) {
    auto& ev = s.cycle_events[k];
    auto emit_turnstile = [&](int sign) {
      ev.push_back({GateEvent::Kind::turnstile, c, anc,
                    turnstile_gate(lambda, sign).m});
    };
    if (k == 0 && with_leading) emit_turnstile(-1);
    for (int b : left)
      ev.push_back({GateEvent::Kind::data, b, b + 1, gate_at(k, b)});
    emit_turnstile(+1);
    for (int b : right)
      ev.push_back({GateEvent::Kind::data, b, b + 1, gate_at(k, b)});
    emit_turnstile(-1);
  }
  return s;
}

}  // namespace

CircuitSchedule build_xxz_schedule(const ChainSpec& chain, double theta,
                                   double phi, double lambda, int cycles,
                                   bool with_leading_turnstile) {
  const Eigen::Matrix4cd u = xxz_gate(theta, phi).m;
  return build_schedule(chain, lambda, cycles, with_leading_turnstile,
                        [&](int, int) { return u; });
}

TwoSiteUnitary random_gate_at(std::uint64_t seed, int cycle, int bond) {
  Rng rng(mix_seed({seed, static_cast<std::uint64_t>(cycle),
                    static_cast<std::uint64_t>(bond)}));
  return haar_u1_gate(rng);
}

CircuitSchedule build_random_schedule(const ChainSpec& chain,
                                      std::uint64_t seed, double lambda,
                                      int cycles,
                                      bool with_leading_turnstile) {
  return build_schedule(
      chain, lambda, cycles, with_leading_turnstile,
      [&](int cycle, int bond) { return random_gate_at(seed, cycle, bond).m; });
}

}  // namespace qturn
