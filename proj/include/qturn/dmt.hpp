#pragma once

#include <Eigen/Dense>

#include "qturn/mpdo.hpp"
#include "qturn/truncation.hpp"

namespace qturn {

// Plain SVD truncation of bond b given the pre-contracted two-site block
// theta ((dl*dp_b) x (dp_{b+1}*dr)); the canonical center must be at b or
// b+1. Keeps at most max_bond singular values and drops those below
// rel_tol * s_max. The retained weight is absorbed into position b
// (absorb_left) or b+1. Returns the new bond dimension.
int svd_truncate_bond(Mpdo& m, int b, const Eigen::MatrixXd& theta,
                      int max_bond, double rel_tol, bool absorb_left,
                      TruncationReport* rep);

// DMT step on the same footing: first splits theta exactly, then, if the
// bond exceeds max_bond, reduces it while exactly preserving every
// functional tr(rho O) whose operator content on one side of the bond is
// supported on the <= 2 positions adjacent to it (the other side arbitrary).
// A full sweep therefore preserves the trace and all reduced density
// matrices of up to 3 consecutive positions. Throws std::runtime_error when
// max_bond is smaller than the protected rank.
int dmt_truncate_bond(Mpdo& m, int b, const Eigen::MatrixXd& theta,
                      int max_bond, double zero_tol, bool absorb_left,
                      TruncationReport* rep);

// Convenience form: contracts the two site tensors itself. Bonds already
// within max_bond are left untouched.
int dmt_truncate_bond(Mpdo& m, int b, int max_bond,
                      TruncationReport* rep = nullptr);

// Left-to-right DMT pass over every bond above max_bond.
void dmt_sweep(Mpdo& m, int max_bond, TruncationReport* rep = nullptr);

}  // namespace qturn
