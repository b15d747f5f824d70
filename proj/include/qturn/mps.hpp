// State-vector matrix product simulation for noiseless runs from
// deterministic product states. The ancilla is fused with the central qubit
// into one four-dimensional site, so turnstile gates become on-site phases
// and every data gate acts on adjacent positions. Exact whenever the bond
// cap never binds; plain singular-value truncation beyond that.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "qturn/gates.hpp"
#include "qturn/state_spec.hpp"
#include "qturn/tebd.hpp"
#include "qturn/truncation.hpp"

namespace qturn {

struct PureSite {
  // coefficients as a (dl * dp) x dr matrix, row = l * dp + p
  Eigen::MatrixXcd m;
  int dp = 2;

  int dl() const { return static_cast<int>(m.rows()) / dp; }
  int dr() const { return static_cast<int>(m.cols()); }
  // dl x dr slice at fixed physical index
  Eigen::MatrixXcd slice(int p) const;
};

struct PureState {
  ChainSpec chain;
  std::vector<PureSite> sites;  // one per data site; chain.central has dp = 4
  // orthogonality center: sites left of it are left-isometric, sites right
  // of it right-isometric
  int center = 0;

  int max_bond_dim() const;
  double norm_sq() const;
  // density matrix of the fused (central qubit, ancilla) site
  Eigen::Matrix4cd super_density() const;
  std::pair<double, double> ancilla_xy() const;
};

// Bond-dimension-1 product state; every site probability must be exactly
// 0 or 1 (throws otherwise). The fused site starts as (qubit) x |+>.
PureState pure_from_product(const InitialStateSpec& spec,
                            const ChainSpec& chain);

struct PureEvolveOptions {
  int max_bond = 256;
  double svd_rel_tol = 1e-14;
  std::function<void(int cycle, const PureState&)> observer;
};

struct PureEvolveResult {
  std::vector<CyclePoint> points;  // cycle 0 = initial state, then per cycle
  TruncationReport report;
};

PureEvolveResult evolve_pure(PureState& st, const CircuitSchedule& sched,
                             const PureEvolveOptions& opt);

}  // namespace qturn
