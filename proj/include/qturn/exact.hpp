// Dense reference engine: statevector or density matrix over the data chain
// plus ancilla. Qubit k is bit k of the basis index (ancilla is the top
// bit). Pure states are promoted to density matrices when a channel first
// acts; mixed mode is capped at 13 qubits.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "qturn/channels.hpp"
#include "qturn/fcs.hpp"
#include "qturn/gates.hpp"
#include "qturn/state_spec.hpp"

namespace qturn {

struct DenseState {
  int n_qubits = 0;
  bool mixed = false;
  Eigen::VectorXcd psi;
  Eigen::MatrixXcd rho;

  std::int64_t dim() const { return std::int64_t{1} << n_qubits; }
  double trace() const;
  void promote_to_mixed();  // no-op when already mixed
};

// Data state from spec, ancilla appended in |+>.
DenseState build_initial(const InitialStateSpec& spec, const ChainSpec& chain);

void apply_two_site(DenseState& s, const Eigen::Matrix4cd& u, int a, int b);
void apply_one_site(DenseState& s, const Eigen::Matrix2cd& u, int site);

// rho -> sum_j K_j rho K_j^dag; promotes pure states (logged once per state).
void apply_channel(DenseState& s, const KrausSet& kraus, int site);

// Runs the full schedule with the given noise policy. The observer, when
// set, is called after every completed cycle (1-based cycle count).
void run_schedule(DenseState& s, const CircuitSchedule& sched,
                  const NoiseSpec& noise,
                  const std::function<void(int, const DenseState&)>& observer =
                      nullptr);

// <X>, <Y> of the ancilla.
std::pair<double, double> ancilla_xy(const DenseState& s);

// Occupation <n> of one site.
double occupation(const DenseState& s, int site);

// Total data-chain particle number expectation.
double total_occupation(const DenseState& s, const ChainSpec& chain);

// Two-point projective oracle: decomposes the initial state over right-half
// particle-number sectors, evolves each through the lambda = 0 schedule,
// and accumulates p_Q from the final sector weights. Returns one
// distribution per completed cycle. Throws if the schedule has lambda != 0
// or the state carries coherences between sectors.
std::vector<ChargeDistribution> two_point_oracle(
    const DenseState& initial, const CircuitSchedule& sched);

}  // namespace qturn
