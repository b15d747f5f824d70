// Full-counting-statistics analysis: generating-function assembly, cumulant
// extraction, distribution inversion, and measurement-cost estimates.
// Throughout, f(lambda) = <X> + i<Y> of the ancilla = sum_Q p_Q e^{i Q lambda}.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qturn/rng.hpp"

namespace qturn {

struct ChargeDistribution {
  int q_min = 0;
  std::vector<double> p;  // p[k] = P(Q = q_min + k)

  int q_max() const { return q_min + static_cast<int>(p.size()) - 1; }
  double probability(int q) const;
  double total() const;
  double mean() const;
  double variance() const;
  double third_central() const;
  std::complex<double> gf(double lambda) const;  // sum_Q p_Q e^{iQ lambda}
  // Drops leading/trailing probabilities below tol.
  void trim(double tol = 1e-14);
};

// One turnstile run at fixed lambda; f per recorded cycle.
struct LambdaRun {
  double lambda = 0.0;
  std::vector<std::complex<double>> f;
};

struct GFSamples {
  std::vector<double> lambdas;     // ascending, distinct
  std::vector<int> cycle_index;    // recorded cycles
  // values[c][k] = f(lambdas[k]) at cycle cycle_index[c]
  std::vector<std::vector<std::complex<double>>> values;

  int n_lambdas() const { return static_cast<int>(lambdas.size()); }
  int n_cycles() const { return static_cast<int>(cycle_index.size()); }
};

// Collects per-lambda runs into a grid. All runs must cover the same cycles.
// When synthesize_zero is set and lambda = 0 is absent, it is inserted with
// the exact value 1; a measured lambda = 0 column is snapped to 1 after
// checking it is within 1e-9 of it. Duplicate lambdas throw.
GFSamples assemble_gf(const std::vector<LambdaRun>& runs,
                      const std::vector<int>& cycles,
                      bool synthesize_zero = true);

// Extends samples to negative lambda via f(-l) = conj f(l).
GFSamples symmetrize_gf(const GFSamples& gf);

struct CumulantSet {
  double mean = 0.0;
  double variance = 0.0;
  double kappa3 = 0.0;
  double skewness_normalized = 0.0;  // kappa3 / variance^{3/2}
  double fit_residual = 0.0;         // rms residual of the chi(lambda) fit
  int fit_order = 0;
  double fit_window = 0.0;
};

// Least-squares fit of chi(lambda) = log f(lambda) by sum_{m=1..order}
// c_m lambda^m on |lambda| <= window, using conjugate-symmetric samples;
// kappa_m = m! c_m / i^m. Requires at least order+2 grid points in the
// window and |f| >= 1e-6 throughout it.
CumulantSet cumulants_from_fit(const std::vector<double>& lambdas,
                               const std::vector<std::complex<double>>& f,
                               int order = 4, double window = 0.2);

// Fourier inversion p_Q = (1/M) sum_k f(lambda_k) e^{-iQ lambda_k} on a
// uniform M-point grid congruent to (-pi, pi]. Throws when the imaginary
// residue exceeds 1e-6 (aliasing) or when clipping negative probabilities
// would move more than clip_tol of mass.
ChargeDistribution distribution_from_gf(
    const std::vector<double>& lambdas,
    const std::vector<std::complex<double>>& f, double clip_tol = 1e-4);

// Exact cumulants of a charge distribution (moment route).
CumulantSet cumulants_of(const ChargeDistribution& d);

// Shots needed to resolve the distribution tail at counting field lambda
// after time t with dephasing time t2: min(1/lambda^2, (t/t2)^2/lambda^4).
double shots_required(double lambda, double t, double t2);

struct ReadoutSample {
  double x = 0.0, y = 0.0;
};

// Finite-shot estimate of (x, y) from independent X and Y measurement
// rounds, shots of each. shots == 0 means the infinite-shot limit and
// returns (x, y) exactly. Estimator variance per component is
// (1 - x^2)/shots.
ReadoutSample sample_readout(double x, double y, std::int64_t shots, Rng& rng);

}  // namespace qturn
