#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qturn/gates.hpp"
#include "qturn/state_spec.hpp"
#include "qturn/tensor3.hpp"

namespace qturn {

// Matrix-product density operator over the chain's data sites, with the
// ancilla merged into the central site (one super-site of Hilbert dimension
// 4). Tensors hold real coefficients in a normalized Hermitian operator
// basis: {1, X, Y, Z}/sqrt(2) per qubit, and the 16 pairwise products /2 on
// the super-site with the central qubit's index major (p = 4*i_central +
// j_ancilla). Unitary conjugation and Kraus channels act as real matrices on
// these coefficients, so every tensor stays real.
struct Mpdo {
  int n_sites = 0;     // tensor positions; equals the chain's data-site count
  int super_pos = -1;  // position carrying the ancilla, -1 if none
  int center = -1;     // orthogonality center, -1 when unknown
  std::vector<Tensor3> t;

  int phys_dim(int j) const { return j == super_pos ? 16 : 4; }
  // bond b joins positions b and b+1
  int bond_dim(int b) const { return t[b + 1].dl; }
  int max_bond_dim() const;

  double trace() const;
  // Trace contraction of positions [0, k) resp. [k, n); O(n chi^2).
  Eigen::VectorXd trace_env_left(int k) const;
  Eigen::VectorXd trace_env_right(int k) const;

  // Mixed-canonical form with the center at position j (QR moves only).
  void canonize(int j);
  // Max isometry violation of the off-center tensors; requires center >= 0.
  double canonical_defect() const;

  void scale(double f);  // multiplies the state (center tensor if known)
  // e acts on the operator index of position j; e is phys_dim x phys_dim.
  void apply_site_superop(int j, const Eigen::MatrixXd& e);

  double site_expectation(int j, const Eigen::VectorXd& opvec) const;

  // Density matrix of positions [first, first+count), tracing the rest.
  // Leftmost position is the most significant factor; the super-site
  // contributes a 4-dim factor ordered (central, ancilla).
  Eigen::MatrixXcd reduced_density(int first, int count) const;
  // Full density matrix with the exact-engine qubit order: site k = bit k,
  // ancilla = top bit. Only sensible for small n.
  Eigen::MatrixXcd dense_matrix() const;

  void save(std::ostream& os, const std::string& config_echo) const;
  static Mpdo load(std::istream& is, std::string* config_echo = nullptr);
};

Mpdo mpdo_from_product(const InitialStateSpec& spec, const ChainSpec& chain);

// Coefficient row of a Hermitian observable in the stored basis, i.e.
// <O> at site j = contraction with this vector at j and the trace elsewhere.
Eigen::VectorXd qubit_op_vec(const Eigen::Matrix2cd& o);
Eigen::VectorXd super_op_vec(const Eigen::Matrix4cd& o);  // central (x) ancilla

// (<X>, <Y>) of the ancilla
std::pair<double, double> mpdo_ancilla_xy(const Mpdo& m);
double mpdo_occupation(const Mpdo& m, int site);

}  // namespace qturn
