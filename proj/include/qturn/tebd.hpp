#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qturn/channels.hpp"
#include "qturn/gates.hpp"
#include "qturn/mpdo.hpp"
#include "qturn/truncation.hpp"

namespace qturn {

// Real matrices acting on the stored operator-basis coefficients.
Eigen::MatrixXd qubit_unitary_superop(const Eigen::Matrix2cd& u);
// Index p_a*4 + p_b where qubit a is the high bit of u's basis order.
Eigen::MatrixXd two_qubit_superop(const Eigen::Matrix4cd& u);
Eigen::MatrixXd kraus_superop(const KrausSet& ks);
// Lift a single-qubit coefficient map onto the super-site's central resp.
// ancilla factor.
Eigen::MatrixXd embed_central(const Eigen::MatrixXd& e4);
Eigen::MatrixXd embed_ancilla(const Eigen::MatrixXd& e4);

// Applies one schedule event: turnstiles become exact superops on the
// super-site; data gates contract the two adjacent positions, apply the
// gate in coefficient space, and re-split the bond per `tr`. Throws if a
// data gate addresses non-adjacent positions.
void apply_gate_event(Mpdo& m, const GateEvent& ev, const GateTruncation& tr,
                      TruncationReport* rep = nullptr);

// One noise round: channel on every data site (and optionally the ancilla).
void apply_noise_round(Mpdo& m, const NoiseSpec& noise);

struct EvolveOptions {
  int max_bond = 256;
  double svd_rel_tol = 1e-12;
  TruncScheme scheme = TruncScheme::svd;
  // dmt only: truncate in a full sweep after each data sublayer (gates are
  // applied exactly in between), or bond-by-bond at each gate.
  DmtCadence cadence = DmtCadence::sublayer;
  NoiseSpec noise{};
  double discarded_weight_budget = std::numeric_limits<double>::infinity();
  std::function<void(int cycle, const Mpdo&)> observer;
};

struct CyclePoint {
  int cycle = 0;
  double x = 1.0, y = 0.0;
};

struct EvolveResult {
  std::vector<CyclePoint> points;  // cycle 0 = initial state, then per cycle
  TruncationReport report;
};

// Runs the schedule, recording the ancilla (x, y) after every cycle. The
// trace is renormalized (and the factor logged) after each truncation.
// Stops early, flagging the report, if the cumulative discarded weight
// exceeds the budget.
EvolveResult evolve(Mpdo& m, const CircuitSchedule& sched,
                    const EvolveOptions& opt);

// Physical random test state without an ancilla: a random product state
// scrambled by brickwork Haar layers with weak depolarizing noise, bond
// dimensions capped at target_bond.
Mpdo random_mpdo(int n_sites, std::uint64_t seed, int target_bond);

}  // namespace qturn
