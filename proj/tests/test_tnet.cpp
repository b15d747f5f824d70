#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include <doctest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "qturn/dmt.hpp"
#include "qturn/exact.hpp"
#include "qturn/mpdo.hpp"
#include "qturn/tebd.hpp"

using namespace qturn;
using std::complex;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

Eigen::Matrix2cd pauli(int k) {
  Eigen::Matrix2cd m;
  const complex<double> i(0, 1);
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// Coefficients of rho in the orthonormal Hermitian bases used by the MPDO:
// sigma_k/sqrt(2) for one qubit, kron(sigma_a, sigma_b)/2 for a pair with
// the first factor on the high bit.
Eigen::VectorXd coeffs1(const Eigen::Matrix2cd& rho) {
  Eigen::VectorXd c(4);
  for (int k = 0; k < 4; ++k)
    c(k) = ((pauli(k) * rho).trace() / std::sqrt(2.0)).real();
  return c;
}

Eigen::Matrix2cd from_coeffs1(const Eigen::VectorXd& c) {
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (int k = 0; k < 4; ++k) rho += c(k) * pauli(k) / std::sqrt(2.0);
  return rho;
}

Eigen::VectorXd coeffs2(const Eigen::Matrix4cd& rho) {
  Eigen::VectorXd c(16);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Eigen::Matrix4cd basis =
          0.5 * Eigen::kroneckerProduct(pauli(a), pauli(b)).eval();
      c(4 * a + b) = (basis * rho).trace().real();
    }
  return c;
}

Eigen::Matrix4cd from_coeffs2(const Eigen::VectorXd& c) {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      rho += c(4 * a + b) * 0.5 *
             Eigen::kroneckerProduct(pauli(a), pauli(b)).eval();
  return rho;
}

Eigen::Matrix2cd random_density1(Rng& rng) {
  Eigen::Matrix2cd a;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      a(r, c) = complex<double>(rng.gaussian(), rng.gaussian());
  Eigen::Matrix2cd rho = a * a.adjoint();
  return rho / rho.trace();
}

Eigen::Matrix4cd random_density2(Rng& rng) {
  Eigen::Matrix4cd a;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      a(r, c) = complex<double>(rng.gaussian(), rng.gaussian());
  Eigen::Matrix4cd rho = a * a.adjoint();
  return rho / rho.trace();
}
}  // namespace

TEST_CASE("single-qubit superoperators match dense conjugation") {
  Rng rng(21);
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::Matrix2cd rho = random_density1(rng);
    // random unitary from a haar two-site gate's middle block
    const TwoSiteUnitary g = haar_u1_gate(rng);
    Eigen::Matrix2cd u;
    u << g.m(1, 1), g.m(1, 2), g.m(2, 1), g.m(2, 2);

    const Eigen::VectorXd got = qubit_unitary_superop(u) * coeffs1(rho);
    const Eigen::Matrix2cd want = u * rho * u.adjoint();
    CHECK((from_coeffs1(got) - want).cwiseAbs().maxCoeff() < 1e-13);

    const KrausSet ks = depolarizing_kraus(0.3);
    const Eigen::VectorXd gk = kraus_superop(ks) * coeffs1(rho);
    Eigen::Matrix2cd wk = Eigen::Matrix2cd::Zero();
    for (const auto& k : ks.k) wk += k * rho * k.adjoint();
    CHECK((from_coeffs1(gk) - wk).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("two-qubit superoperator matches dense conjugation") {
  Rng rng(22);
  for (int rep = 0; rep < 6; ++rep) {
    const Eigen::Matrix4cd rho = random_density2(rng);
    const Eigen::Matrix4cd u = haar_u1_gate(rng).m;
    const Eigen::VectorXd got = two_qubit_superop(u) * coeffs2(rho);
    const Eigen::Matrix4cd want = u * rho * u.adjoint();
    CHECK((from_coeffs2(got) - want).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("unitary superoperators are orthogonal matrices") {
  Rng rng(23);
  const Eigen::MatrixXd s = two_qubit_superop(turnstile_gate(0.77, 1).m);
  CHECK((s.transpose() * s - Eigen::MatrixXd::Identity(16, 16))
            .cwiseAbs()
            .maxCoeff() < 1e-13);
  const Eigen::MatrixXd h = two_qubit_superop(haar_u1_gate(rng).m);
  CHECK((h.transpose() * h - Eigen::MatrixXd::Identity(16, 16))
            .cwiseAbs()
            .maxCoeff() < 1e-13);
}

TEST_CASE("product construction reproduces the dense state") {
  const ChainSpec c = ChainSpec::standard(4);
  for (const InitialStateSpec& init :
       {InitialStateSpec::neel(), InitialStateSpec::domain_wall(0.6),
        InitialStateSpec::custom({0.2, 1.0, 0.0, 0.7})}) {
    const Mpdo m = mpdo_from_product(init, c);
    CHECK(m.n_sites == 4);
    CHECK(m.super_pos == c.central);
    CHECK(m.trace() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.max_bond_dim() == 1);

    DenseState s = build_initial(init, c);
    const Eigen::MatrixXcd want =
        s.mixed ? s.rho : Eigen::MatrixXcd(s.psi * s.psi.adjoint());
    CHECK((m.dense_matrix() - want).cwiseAbs().maxCoeff() < 1e-14);

    const auto xy = mpdo_ancilla_xy(m);
    CHECK(xy.first == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(xy.second == doctest::Approx(0.0).epsilon(1e-13));
    const auto p = init.site_probabilities(4);
    for (int j = 0; j < 4; ++j)
      CHECK(mpdo_occupation(m, j) == doctest::Approx(p[j]).epsilon(1e-13));
  }
}

TEST_CASE("one hop gate grows a product bond to at most 4") {
  const ChainSpec c = ChainSpec::standard(8);
  Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
  GateEvent ev{GateEvent::Kind::data, 0, 1,
               xxz_gate(0.4 * kPi, 0.8 * kPi).m};
  apply_gate_event(m, ev, GateTruncation{});
  CHECK(m.bond_dim(0) <= 4);
  CHECK(m.trace() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("data gates must act on adjacent positions") {
  const ChainSpec c = ChainSpec::standard(6);
  Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
  GateEvent ev{GateEvent::Kind::data, 0, 2,
               xxz_gate(0.3, 0.5).m};
  CHECK_THROWS(apply_gate_event(m, ev, GateTruncation{}));
}

namespace {
// Ancilla (x, y) per cycle from the dense engine.
std::vector<std::pair<double, double>> exact_xy(const InitialStateSpec& init,
                                                const ChainSpec& chain,
                                                const CircuitSchedule& sched,
                                                const NoiseSpec& noise) {
  DenseState s = build_initial(init, chain);
  std::vector<std::pair<double, double>> out{ancilla_xy(s)};
  run_schedule(s, sched, noise, [&](int, const DenseState& st) {
    out.push_back(ancilla_xy(st));
  });
  return out;
}
}  // namespace

TEST_CASE("tensor evolution matches the dense engine") {
  const ChainSpec c = ChainSpec::standard(8);
  const double lam = 0.5;
  const int cycles = 4;
  const CircuitSchedule sched =
      build_xxz_schedule(c, 0.4 * kPi, 0.8 * kPi, lam, cycles);

  SUBCASE("noiseless, svd and dmt schemes") {
    const auto want = exact_xy(InitialStateSpec::neel(), c, sched, NoiseSpec{});
    for (TruncScheme scheme : {TruncScheme::svd, TruncScheme::dmt}) {
      Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
      EvolveOptions opt;
      opt.max_bond = 256;
      opt.scheme = scheme;
      const EvolveResult res = evolve(m, sched, opt);
      REQUIRE(res.points.size() == want.size());
      for (std::size_t k = 0; k < want.size(); ++k) {
        CHECK(std::abs(res.points[k].x - want[k].first) < 1e-8);
        CHECK(std::abs(res.points[k].y - want[k].second) < 1e-8);
      }
      CHECK(std::abs(m.trace() - 1.0) < 1e-8);
    }
  }

  SUBCASE("depolarizing channel") {
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::depolarizing;
    noise.gamma = 0.15;
    const auto want = exact_xy(InitialStateSpec::neel(), c, sched, noise);
    Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
    EvolveOptions opt;
    opt.max_bond = 256;
    opt.noise = noise;
    const EvolveResult res = evolve(m, sched, opt);
    REQUIRE(res.points.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(std::abs(res.points[k].x - want[k].first) < 1e-7);
      CHECK(std::abs(res.points[k].y - want[k].second) < 1e-7);
    }
  }

  SUBCASE("damping channel at the sublayer cadence") {
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::amplitude_damping;
    noise.gamma = 0.1;
    noise.placement = NoiseSpec::Placement::sublayer_end;
    const auto want =
        exact_xy(InitialStateSpec::domain_wall(0.7), c, sched, noise);
    Mpdo m = mpdo_from_product(InitialStateSpec::domain_wall(0.7), c);
    EvolveOptions opt;
    opt.max_bond = 256;
    opt.noise = noise;
    const EvolveResult res = evolve(m, sched, opt);
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(std::abs(res.points[k].x - want[k].first) < 1e-7);
      CHECK(std::abs(res.points[k].y - want[k].second) < 1e-7);
    }
  }
}

TEST_CASE("zero counting field pins f at one") {
  const ChainSpec c = ChainSpec::standard(6);
  NoiseSpec noise;
  noise.kind = NoiseSpec::Kind::depolarizing;
  noise.gamma = 0.15;
  const CircuitSchedule sched = build_random_schedule(c, 99, 0.0, 4);
  for (TruncScheme scheme : {TruncScheme::svd, TruncScheme::dmt}) {
    Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
    EvolveOptions opt;
    opt.max_bond = 64;
    opt.scheme = scheme;
    opt.noise = noise;
    const EvolveResult res = evolve(m, sched, opt);
    for (const CyclePoint& p : res.points) {
      CHECK(std::abs(p.x - 1.0) < 1e-10);
      CHECK(std::abs(p.y) < 1e-10);
    }
  }
}

TEST_CASE("zero cycles reports the initial point") {
  const ChainSpec c = ChainSpec::standard(6);
  const CircuitSchedule sched =
      build_xxz_schedule(c, 0.4 * kPi, 0.8 * kPi, 0.3, 0);
  Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
  const EvolveResult res = evolve(m, sched, EvolveOptions{});
  REQUIRE(res.points.size() == 1);
  CHECK(res.points[0].cycle == 0);
  CHECK(res.points[0].x == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(res.points[0].y == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("canonical form is verifiable") {
  Mpdo m = random_mpdo(8, 5, 32);
  for (int j : {0, 3, 7}) {
    m.canonize(j);
    CHECK(m.center == j);
    CHECK(m.canonical_defect() < 1e-10);
  }
  CHECK(m.trace() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bond truncation leaves small bonds untouched") {
  Mpdo m = random_mpdo(8, 17, 16);
  const Mpdo before = m;
  for (int b = 0; b < 7; ++b) {
    const int got = dmt_truncate_bond(m, b, 64);
    CHECK(got == before.bond_dim(b));
  }
  for (int j = 0; j < 8; ++j) {
    CHECK(m.t[j].dl == before.t[j].dl);
    CHECK(m.t[j].dr == before.t[j].dr);
  }
  CHECK((m.dense_matrix() - before.dense_matrix()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("dmt keeps trace and local windows while halving bonds") {
  Mpdo m = random_mpdo(8, 31, 64);
  REQUIRE(m.max_bond_dim() > 32);
  const double tr0 = m.trace();
  std::vector<Eigen::MatrixXcd> windows;
  for (int first = 0; first + 3 <= 8; ++first)
    windows.push_back(m.reduced_density(first, 3));

  TruncationReport rep;
  dmt_sweep(m, 32, &rep);
  CHECK(m.max_bond_dim() <= 32);
  CHECK(rep.discarded_weight > 0.0);
  CHECK(std::abs(m.trace() - tr0) < 1e-12);
  for (int first = 0; first + 3 <= 8; ++first) {
    const Eigen::MatrixXcd after = m.reduced_density(first, 3);
    CHECK((after - windows[static_cast<std::size_t>(first)])
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  }
}

TEST_CASE("dmt refuses bonds below the protected rank") {
  Mpdo m = random_mpdo(8, 41, 64);
  REQUIRE(m.bond_dim(3) > 32);
  CHECK_THROWS_AS(dmt_truncate_bond(m, 3, 4), std::runtime_error);
}

TEST_CASE("state serialization round trips") {
  Mpdo m = random_mpdo(6, 77, 32);
  m.canonize(2);
  std::stringstream ss;
  m.save(ss, "run settings echo");
  std::string echo;
  const Mpdo back = Mpdo::load(ss, &echo);
  CHECK(echo == "run settings echo");
  CHECK(back.n_sites == m.n_sites);
  CHECK(back.super_pos == m.super_pos);
  CHECK(back.center == m.center);
  for (int j = 0; j < 6; ++j) {
    REQUIRE(back.t[j].v.size() == m.t[j].v.size());
    CHECK((back.t[j].v - m.t[j].v).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("discarded-weight budget aborts a run with partial results") {
  const ChainSpec c = ChainSpec::standard(6);
  const CircuitSchedule sched = build_random_schedule(c, 12, 0.4, 6);
  Mpdo m = mpdo_from_product(InitialStateSpec::neel(), c);
  EvolveOptions opt;
  opt.max_bond = 2;
  opt.discarded_weight_budget = 1e-30;
  const EvolveResult res = evolve(m, sched, opt);
  CHECK(res.report.aborted);
  CHECK(res.report.aborted_cycle >= 1);
  CHECK(res.points.size() < 7);
  CHECK(res.points.size() >= 1);
}
