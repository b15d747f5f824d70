// Single-qubit Kraus channels and the per-cycle noise policy.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qturn {

struct KrausSet {
  std::vector<Eigen::Matrix2cd> k;

  // Max-magnitude deviation of sum K^dag K from identity.
  double completeness_defect() const;
};

// {sqrt(1-3g/4) I, sqrt(g/4) X, sqrt(g/4) Y, sqrt(g/4) Z}, 0 <= g <= 1.
KrausSet depolarizing_kraus(double gamma);

// {diag(1, sqrt(1-g)), sqrt(g) |0><1|}, decay of the occupied state.
KrausSet amplitude_damping_kraus(double gamma);

struct NoiseSpec {
  enum class Kind { none, depolarizing, amplitude_damping };
  // cycle_end: one channel per data site after the cycle's final turnstile.
  // sublayer_end: channels after the turnstile closing each data sublayer.
  enum class Placement { cycle_end, sublayer_end };

  Kind kind = Kind::none;
  double gamma = 0.0;
  bool on_ancilla = false;
  Placement placement = Placement::cycle_end;

  bool enabled() const { return kind != Kind::none && gamma > 0.0; }
  KrausSet kraus() const;
};

}  // namespace qturn
