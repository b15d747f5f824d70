// Two-site gates and turnstile circuit schedules for a 1D qubit chain with
// one counting ancilla. Sites are 0-based; data sites run 0..n_sites-1 and
// the ancilla sits at index n_sites. |1> is the occupied (spin-up) state.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qturn/rng.hpp"

namespace qturn {

// 4x4 unitary on an ordered site pair, basis |00>,|01>,|10>,|11>.
struct TwoSiteUnitary {
  Eigen::Matrix4cd m;

  double unitarity_defect() const;
  // Max magnitude of any entry that mixes particle-number sectors
  // {00},{01,10},{11}.
  double u1_defect() const;
};

// XXZ Trotter gate: diag blocks [1], [[cos t, -i sin t],[-i sin t, cos t]],
// [e^{i phi}].
TwoSiteUnitary xxz_gate(double theta, double phi);

// Effective anisotropy sin(phi/2)/sin(theta). Throws when sin(theta) == 0.
double anisotropy(double theta, double phi);

// Controlled phase diag(1,1,1,e^{i sign lambda}) on (central, ancilla).
TwoSiteUnitary turnstile_gate(double lambda, int sign);

// Haar-random particle-number-conserving gate: independent uniform phases on
// |00> and |11>, Haar U(2) on the single-particle block.
TwoSiteUnitary haar_u1_gate(Rng& rng);

struct ChainSpec {
  int n_sites = 0;  // even, >= 2
  int central = 0;  // 0 <= central <= n_sites-2; the half cut is the bond
                    // (central, central+1)

  int ancilla() const { return n_sites; }
  // Parity (bond start index mod 2) of the sublayer coupling the central
  // site to its left / right neighbour.
  int left_parity() const { return (central + 1) % 2; }
  int right_parity() const { return central % 2; }

  // central = n/2 - 1, i.e. the last site of the left half.
  static ChainSpec standard(int n_sites);
  void validate() const;  // throws std::invalid_argument
};

// Bond start indices of the brickwork sublayer with the given parity,
// ascending. Parity 0 has n/2 bonds, parity 1 has n/2 - 1 (open chain).
std::vector<int> sublayer_bonds(const ChainSpec& chain, int parity);

struct GateEvent {
  enum class Kind { data, turnstile };
  Kind kind;
  int a, b;  // acts on ordered pair (a, b); turnstile uses (central, ancilla)
  Eigen::Matrix4cd u;
};

// Per cycle: [T(-lambda), first cycle only, if with_leading_turnstile]
// left-coupling sublayer, T(+lambda), right-coupling sublayer, T(-lambda).
// Reading the ancilla after any full cycle then measures the net number of
// particles that crossed the bond (central, central+1) to the right.
struct CircuitSchedule {
  ChainSpec chain;
  double lambda = 0.0;
  int cycles = 0;
  bool with_leading_turnstile = false;
  std::vector<std::vector<GateEvent>> cycle_events;

  int turnstile_event_count() const;
};

CircuitSchedule build_xxz_schedule(const ChainSpec& chain, double theta,
                                   double phi, double lambda, int cycles,
                                   bool with_leading_turnstile = false);

// The gate on a given (cycle, bond) is a pure function of
// (seed, cycle, bond), so any element of the stream is reproducible in
// isolation.
TwoSiteUnitary random_gate_at(std::uint64_t seed, int cycle, int bond);

CircuitSchedule build_random_schedule(const ChainSpec& chain,
                                      std::uint64_t seed, double lambda,
                                      int cycles,
                                      bool with_leading_turnstile = false);

}  // namespace qturn
