#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace qturn {

// Symmetric simple exclusion process on an open chain with reflecting ends:
// every occupied/empty nearest-neighbour pair exchanges at rate hop_rate.
// Q counts net particle crossings of the central bond (n/2 - 1, n/2),
// rightward positive.
struct SsepParams {
  int n_sites = 0;  // even, >= 2
  double hop_rate = 1.0;
  std::vector<double> p_init;  // per-site occupation probabilities

  void validate() const;
  int central_bond() const { return n_sites / 2 - 1; }
};

struct SsepSeries {
  std::vector<double> times;
  std::vector<double> mean_q;
  std::vector<double> var_q;
  std::vector<double> se_mean;  // standard errors across trajectories
  std::vector<double> se_var;
  std::int64_t trajectories = 0;
};

// Kinetic Monte Carlo over independent trajectories. Trajectory i draws its
// randomness from (seed, i) alone, so any subset is reproducible.
SsepSeries ssep_sample(const SsepParams& p, const std::vector<double>& times,
                       std::int64_t trajectories, std::uint64_t seed);

// Exact counting-field generating function f(lambda, t) = <e^{i lambda Q}>
// for small chains (n <= 12), integrating the biased master equation with
// fixed-step RK4 over the full configuration space; p_init enters as a
// product measure.
std::vector<std::complex<double>> ssep_gf_exact(
    const SsepParams& p, double lambda, const std::vector<double>& times,
    double dt = 1e-3);

// Two-site chain with one particle starting on the left: probability the
// particle sits on the right at time t (equals P(Q = 1)).
double telegraph_p_right(double t, double hop_rate = 1.0);

}  // namespace qturn
