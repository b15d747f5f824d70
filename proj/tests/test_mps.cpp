#include <cmath>
#include <complex>

#include <doctest.h>

#include "qturn/exact.hpp"
#include "qturn/gates.hpp"
#include "qturn/mps.hpp"
#include "qturn/rng.hpp"

using namespace qturn;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// per-cycle ancilla trajectory from the dense engine
std::vector<std::pair<double, double>> dense_xy(const InitialStateSpec& init,
                                                const CircuitSchedule& sched) {
  DenseState s = build_initial(init, sched.chain);
  std::vector<std::pair<double, double>> out{ancilla_xy(s)};
  run_schedule(s, sched, NoiseSpec{},
               [&](int, const DenseState& st) { out.push_back(ancilla_xy(st)); });
  return out;
}

}  // namespace

TEST_CASE("pure product construction") {
  const ChainSpec chain = ChainSpec::standard(4);
  const PureState st = pure_from_product(InitialStateSpec::neel(), chain);
  CHECK(st.sites.size() == 4);
  CHECK(st.max_bond_dim() == 1);
  CHECK(st.norm_sq() == doctest::Approx(1.0).epsilon(1e-14));
  const auto xy = st.ancilla_xy();
  CHECK(xy.first == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(xy.second == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(st.super_density().trace().real() ==
        doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(pure_from_product(InitialStateSpec::domain_wall(0.8), chain),
                  std::invalid_argument);
}

TEST_CASE("pure engine reproduces the single-crossing phase") {
  const ChainSpec chain = ChainSpec::standard(6);
  Rng rng(41);
  for (int rep = 0; rep < 5; ++rep) {
    const double lam = rng.uniform(-3.0, 3.0);
    const CircuitSchedule sched =
        build_xxz_schedule(chain, 0.5 * kPi, 0.23, lam, 1);

    std::vector<double> p(6, 0.0);
    p[1] = 1.0;  // crosses left to right within the cycle
    PureState st = pure_from_product(InitialStateSpec::custom(p), chain);
    PureEvolveResult res = evolve_pure(st, sched, PureEvolveOptions{});
    CHECK(res.points.back().x == doctest::Approx(std::cos(lam)).epsilon(1e-12));
    CHECK(res.points.back().y == doctest::Approx(std::sin(lam)).epsilon(1e-12));

    std::fill(p.begin(), p.end(), 0.0);
    p[4] = 1.0;  // mirrored: one right-to-left crossing
    PureState st2 = pure_from_product(InitialStateSpec::custom(p), chain);
    PureEvolveResult res2 = evolve_pure(st2, sched, PureEvolveOptions{});
    CHECK(res2.points.back().x ==
          doctest::Approx(std::cos(lam)).epsilon(1e-12));
    CHECK(res2.points.back().y ==
          doctest::Approx(-std::sin(lam)).epsilon(1e-12));
  }
}

TEST_CASE("pure engine matches the dense engine") {
  const ChainSpec chain = ChainSpec::standard(8);
  struct Case {
    InitialStateSpec init;
    double lambda;
  };
  const std::vector<Case> cases{
      {InitialStateSpec::neel(), 0.5},
      {InitialStateSpec::neel(), 2.8},
      {InitialStateSpec::polarized_domain_wall(), 0.9},
      {InitialStateSpec::custom({1, 0, 0, 1, 1, 0, 1, 0}), -1.3},
  };
  for (const Case& cs : cases) {
    const CircuitSchedule sched =
        build_xxz_schedule(chain, 0.4 * kPi, 0.8 * kPi, cs.lambda, 6);
    const auto want = dense_xy(cs.init, sched);

    PureState st = pure_from_product(cs.init, chain);
    PureEvolveOptions opt;
    opt.max_bond = 256;
    const PureEvolveResult res = evolve_pure(st, sched, opt);

    REQUIRE(res.points.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(res.points[k].x ==
            doctest::Approx(want[k].first).scale(1.0).epsilon(1e-10));
      CHECK(res.points[k].y ==
            doctest::Approx(want[k].second).scale(1.0).epsilon(1e-10));
    }
    // a pure 9-qubit state never needs more than 16 Schmidt values here
    CHECK(st.max_bond_dim() <= 16);
    CHECK(res.report.discarded_weight == 0.0);
    CHECK(st.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pure engine matches the dense engine on random circuits") {
  const ChainSpec chain = ChainSpec::standard(8);
  const CircuitSchedule sched = build_random_schedule(chain, 904, 0.7, 5);
  const auto want = dense_xy(InitialStateSpec::neel(), sched);

  PureState st = pure_from_product(InitialStateSpec::neel(), chain);
  PureEvolveOptions opt;
  opt.max_bond = 256;
  const PureEvolveResult res = evolve_pure(st, sched, opt);
  REQUIRE(res.points.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    CHECK(res.points[k].x ==
          doctest::Approx(want[k].first).scale(1.0).epsilon(1e-10));
    CHECK(res.points[k].y ==
          doctest::Approx(want[k].second).scale(1.0).epsilon(1e-10));
  }
}

TEST_CASE("pure engine pins f at zero counting field") {
  const ChainSpec chain = ChainSpec::standard(10);
  const CircuitSchedule sched =
      build_xxz_schedule(chain, 0.4 * kPi, 0.8 * kPi, 0.0, 8);
  PureState st = pure_from_product(InitialStateSpec::neel(), chain);
  PureEvolveOptions opt;
  opt.max_bond = 64;
  const PureEvolveResult res = evolve_pure(st, sched, opt);
  for (const CyclePoint& p : res.points) {
    CHECK(std::abs(p.x - 1.0) < 1e-10);
    CHECK(std::abs(p.y) < 1e-10);
  }
}

TEST_CASE("pure engine stays normalized under a binding cap") {
  const ChainSpec chain = ChainSpec::standard(12);
  const CircuitSchedule sched =
      build_xxz_schedule(chain, 0.4 * kPi, 0.8 * kPi, 0.5, 8);
  PureState st = pure_from_product(InitialStateSpec::neel(), chain);
  PureEvolveOptions opt;
  opt.max_bond = 8;
  const PureEvolveResult res = evolve_pure(st, sched, opt);
  CHECK(res.report.discarded_weight > 0.0);
  CHECK(res.report.renorm_count > 0);
  CHECK(st.max_bond_dim() <= 8);
  CHECK(st.norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
  for (const CyclePoint& p : res.points)
    CHECK(p.x * p.x + p.y * p.y <= 1.0 + 1e-9);

  // zero cycles leave the initial point only
  const CircuitSchedule none =
      build_xxz_schedule(chain, 0.4 * kPi, 0.8 * kPi, 0.5, 0);
  PureState st2 = pure_from_product(InitialStateSpec::neel(), chain);
  const PureEvolveResult res2 = evolve_pure(st2, none, PureEvolveOptions{});
  REQUIRE(res2.points.size() == 1);
  CHECK(res2.points[0].x == doctest::Approx(1.0).epsilon(1e-13));

  // chain mismatch is rejected
  PureState st3 = pure_from_product(InitialStateSpec::neel(),
                                    ChainSpec::standard(10));
  CHECK_THROWS_AS(evolve_pure(st3, sched, PureEvolveOptions{}),
                  std::invalid_argument);
}
