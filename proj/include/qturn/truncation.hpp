#pragma once

#include <limits>

namespace qturn {

enum class TruncScheme { svd, dmt };
enum class DmtCadence { sublayer, gate };

struct TruncationReport {
  double discarded_weight = 0.0;  // cumulative relative 2-norm loss
  double max_bond_discard = 0.0;  // worst single truncation
  int max_bond_seen = 1;
  double max_trace_drift = 0.0;  // largest |trace - 1| before renormalizing
  double renorm_log_abs = 0.0;   // sum of |log(rescale factor)|
  int renorm_count = 0;
  bool aborted = false;
  int aborted_cycle = -1;
  double wall_seconds = 0.0;

  void note_cut(double relative_weight, int new_bond) {
    discarded_weight += relative_weight;
    if (relative_weight > max_bond_discard) max_bond_discard = relative_weight;
    if (new_bond > max_bond_seen) max_bond_seen = new_bond;
  }
};

struct GateTruncation {
  TruncScheme scheme = TruncScheme::svd;
  int max_bond = std::numeric_limits<int>::max() / 2;
  double rel_tol = 1e-12;   // relative singular-value floor
  bool absorb_left = false;  // which side keeps the bond weights
};

}  // namespace qturn
