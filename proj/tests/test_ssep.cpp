#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "qturn/fcs.hpp"
#include "qturn/ssep.hpp"

using namespace qturn;
using std::complex;

namespace {
// Exact mean/variance of the transferred charge at one time, from the
// biased master equation via a small-field cumulant fit.
CumulantSet exact_cumulants(const SsepParams& p, double t) {
  std::vector<double> lams;
  std::vector<complex<double>> f;
  for (int k = -7; k <= 7; ++k) {
    const double lam = 0.03 * k;
    lams.push_back(lam);
    if (k == 0) {
      f.push_back(1.0);
      continue;
    }
    f.push_back(ssep_gf_exact(p, lam, {t}).at(0));
  }
  return cumulants_from_fit(lams, f, 4, 0.22);
}
}  // namespace

TEST_CASE("two-site walker matches the telegraph law") {
  SsepParams p;
  p.n_sites = 2;
  p.p_init = {1.0, 0.0};
  const std::vector<double> times = {0.2, 0.5, 1.0, 2.0};
  const SsepSeries s = ssep_sample(p, times, 40000, 31);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double want = telegraph_p_right(times[i]);
    CHECK(std::abs(s.mean_q[i] - want) < 5.0 * s.se_mean[i] + 1e-12);
    CHECK(std::abs(s.var_q[i] - want * (1.0 - want)) <
          5.0 * s.se_var[i] + 1e-12);
  }
}

TEST_CASE("sampled moments agree with the biased master equation") {
  SsepParams p;
  p.n_sites = 6;
  p.p_init = {1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  const std::vector<double> times = {0.5, 1.5};
  const SsepSeries s = ssep_sample(p, times, 30000, 7);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const CumulantSet want = exact_cumulants(p, times[i]);
    CHECK(std::abs(s.mean_q[i] - want.mean) < 5.0 * s.se_mean[i]);
    CHECK(std::abs(s.var_q[i] - want.variance) < 5.0 * s.se_var[i]);
  }
}

TEST_CASE("generating function basics") {
  SsepParams p;
  p.n_sites = 4;
  p.p_init = {0.8, 0.3, 0.6, 0.1};
  // unbiased field: f = 1 at every time
  for (const auto& f : {ssep_gf_exact(p, 0.0, {0.3, 0.9})}) {
    for (const auto& v : f) CHECK(std::abs(v - 1.0) < 1e-9);
  }
  // conjugate symmetry
  const auto plus = ssep_gf_exact(p, 0.4, {0.7});
  const auto minus = ssep_gf_exact(p, -0.4, {0.7});
  CHECK(std::abs(plus[0] - std::conj(minus[0])) < 1e-9);
  // probability conservation: |f| <= 1
  CHECK(std::abs(plus[0]) <= 1.0 + 1e-12);
}

TEST_CASE("half-filled symmetric profile keeps zero mean current") {
  SsepParams p;
  p.n_sites = 8;
  p.p_init.assign(8, 0.5);
  const SsepSeries s = ssep_sample(p, {1.0, 3.0}, 20000, 11);
  CHECK(std::abs(s.mean_q[0]) < 5.0 * s.se_mean[0]);
  CHECK(std::abs(s.mean_q[1]) < 5.0 * s.se_mean[1]);
  CHECK(s.var_q[1] > s.var_q[0]);  // fluctuations keep spreading
}

TEST_CASE("trajectory streams are reproducible") {
  SsepParams p;
  p.n_sites = 4;
  p.p_init = {1.0, 1.0, 0.0, 0.0};
  const SsepSeries a = ssep_sample(p, {0.5, 1.0}, 500, 42);
  const SsepSeries b = ssep_sample(p, {0.5, 1.0}, 500, 42);
  CHECK(a.mean_q == b.mean_q);
  CHECK(a.var_q == b.var_q);
  const SsepSeries c = ssep_sample(p, {0.5, 1.0}, 500, 43);
  CHECK(a.mean_q != c.mean_q);
}

TEST_CASE("input validation") {
  SsepParams p;
  p.n_sites = 4;
  p.p_init = {1.0, 0.0, 0.0, 1.0};
  CHECK_THROWS(ssep_sample(p, {1.0, 0.5}, 100, 1));   // not increasing
  CHECK_THROWS(ssep_sample(p, {-1.0, 0.5}, 100, 1));  // negative time
  CHECK_THROWS(ssep_sample(p, {0.5}, 0, 1));          // no trajectories
  SsepParams bad = p;
  bad.p_init = {1.0, 0.5};  // wrong length
  CHECK_THROWS(ssep_sample(bad, {0.5}, 100, 1));
  SsepParams big;
  big.n_sites = 20;
  big.p_init.assign(20, 0.5);
  CHECK_THROWS(ssep_gf_exact(big, 0.3, {1.0}));  // dense cap
}
