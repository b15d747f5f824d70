#include <cmath>
#include <complex>

#include <doctest.h>

#include "qturn/gates.hpp"
#include "qturn/rng.hpp"

using namespace qturn;
using std::complex;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("xxz gate structure and symmetries") {
  const double theta = 0.37, phi = 1.21;
  const TwoSiteUnitary g = xxz_gate(theta, phi);
  CHECK(g.unitarity_defect() < 1e-15);
  CHECK(g.u1_defect() == 0.0);
  CHECK(g.m(0, 0) == complex<double>(1.0, 0.0));
  CHECK(g.m(1, 1).real() == doctest::Approx(std::cos(theta)).epsilon(1e-15));
  CHECK(g.m(1, 2).imag() == doctest::Approx(-std::sin(theta)).epsilon(1e-15));
  CHECK(std::abs(g.m(3, 3) - std::exp(complex<double>(0, phi))) < 1e-15);
  // swap symmetry: exchanging the two sites leaves the gate invariant
  CHECK(g.m(1, 2) == g.m(2, 1));
}

TEST_CASE("anisotropy at the interacting working point is exactly 1") {
  CHECK(std::abs(anisotropy(0.4 * kPi, 0.8 * kPi) - 1.0) < 1e-15);
  CHECK(anisotropy(0.5 * kPi, kPi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(anisotropy(0.3, 0.0) == 0.0);  // free fermion point
  CHECK_THROWS_AS(anisotropy(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("turnstile gate is a controlled phase") {
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const double lam = rng.uniform(-kPi, kPi);
    for (int sign : {+1, -1}) {
      const TwoSiteUnitary t = turnstile_gate(lam, sign);
      CHECK(t.unitarity_defect() < 1e-15);
      for (int d = 0; d < 3; ++d) CHECK(t.m(d, d) == complex<double>(1, 0));
      CHECK(std::abs(t.m(3, 3) - std::exp(complex<double>(0, sign * lam))) <
            1e-15);
    }
  }
  CHECK_THROWS_AS(turnstile_gate(0.2, 0), std::invalid_argument);
}

TEST_CASE("haar gates are unitary and number conserving") {
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const TwoSiteUnitary g = haar_u1_gate(rng);
    CHECK(g.unitarity_defect() < 1e-13);
    CHECK(g.u1_defect() == 0.0);
  }
}

TEST_CASE("haar single-particle block covers the group") {
  // |m(1,1)|^2 should be uniform on [0,1]: mean 1/2, second moment 1/3.
  Rng rng(9);
  double s1 = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double p = std::norm(haar_u1_gate(rng).m(1, 1));
    s1 += p;
    s2 += p * p;
  }
  CHECK(s1 / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("chain spec geometry") {
  const ChainSpec c = ChainSpec::standard(8);
  CHECK(c.central == 3);
  CHECK(c.ancilla() == 8);
  CHECK(c.left_parity() == 0);
  CHECK(c.right_parity() == 1);
  CHECK(sublayer_bonds(c, 0) == std::vector<int>{0, 2, 4, 6});
  CHECK(sublayer_bonds(c, 1) == std::vector<int>{1, 3, 5});

  CHECK_THROWS_AS(ChainSpec::standard(7), std::invalid_argument);
  ChainSpec bad = c;
  bad.central = 7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.central = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("schedule event stream") {
  const ChainSpec c = ChainSpec::standard(6);  // central 2, parities (1, 0)
  const double lam = 0.83;
  const CircuitSchedule s = build_xxz_schedule(c, 0.3, 0.5, lam, 3);
  CHECK(s.cycles == 3);
  CHECK(s.turnstile_event_count() == 6);
  const auto left = sublayer_bonds(c, c.left_parity());
  const auto right = sublayer_bonds(c, c.right_parity());
  for (const auto& cyc : s.cycle_events) {
    REQUIRE(cyc.size() == left.size() + right.size() + 2);
    std::size_t i = 0;
    for (int b : left) {
      CHECK(cyc[i].kind == GateEvent::Kind::data);
      CHECK(cyc[i].a == b);
      CHECK(cyc[i].b == b + 1);
      ++i;
    }
    CHECK(cyc[i].kind == GateEvent::Kind::turnstile);
    CHECK(cyc[i].a == c.central);
    CHECK(cyc[i].b == c.ancilla());
    CHECK(std::abs(cyc[i].u(3, 3) - std::exp(complex<double>(0, lam))) <
          1e-15);
    ++i;
    for (int b : right) {
      CHECK(cyc[i].kind == GateEvent::Kind::data);
      CHECK(cyc[i].a == b);
      ++i;
    }
    CHECK(cyc[i].kind == GateEvent::Kind::turnstile);
    CHECK(std::abs(cyc[i].u(3, 3) - std::exp(complex<double>(0, -lam))) <
          1e-15);
  }

  const CircuitSchedule lead = build_xxz_schedule(c, 0.3, 0.5, lam, 2, true);
  CHECK(lead.turnstile_event_count() == 5);
  CHECK(lead.cycle_events[0][0].kind == GateEvent::Kind::turnstile);
  CHECK(std::abs(lead.cycle_events[0][0].u(3, 3) -
                 std::exp(complex<double>(0, -lam))) < 1e-15);
  CHECK(lead.cycle_events[1][0].kind == GateEvent::Kind::data);
}

TEST_CASE("random gate stream is reproducible elementwise") {
  const std::uint64_t seed = 1234;
  const ChainSpec c = ChainSpec::standard(8);
  const CircuitSchedule s = build_random_schedule(c, seed, 0.2, 4);
  for (int cyc = 0; cyc < 4; ++cyc) {
    for (const auto& ev : s.cycle_events[cyc]) {
      if (ev.kind != GateEvent::Kind::data) continue;
      const TwoSiteUnitary again = random_gate_at(seed, cyc, ev.a);
      CHECK((again.m - ev.u).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // different coordinates give different gates
  CHECK((random_gate_at(seed, 0, 0).m - random_gate_at(seed, 0, 2).m)
            .cwiseAbs()
            .maxCoeff() > 1e-3);
  CHECK((random_gate_at(seed, 0, 0).m - random_gate_at(seed + 1, 0, 0).m)
            .cwiseAbs()
            .maxCoeff() > 1e-3);
}
