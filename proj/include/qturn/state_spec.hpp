// Product initial states for the data chain. Site occupation probabilities
// fully describe every supported kind; a state is pure exactly when each
// probability is 0 or 1.
#pragma once

#include <stdexcept>
#include <vector>

namespace qturn {

struct InitialStateSpec {
  enum class Kind {
    domain_wall,            // exp(mu Sz/..) biased halves, mu finite
    neel,                   // occupied on even sites
    polarized_domain_wall,  // left half occupied, right half empty (mu -> inf)
    custom                  // explicit per-site occupation probabilities
  };

  Kind kind = Kind::neel;
  double mu = 0.0;
  std::vector<double> p_occupied;  // custom only

  static InitialStateSpec domain_wall(double mu) {
    InitialStateSpec s;
    s.kind = Kind::domain_wall;
    s.mu = mu;
    return s;
  }
  static InitialStateSpec neel() { return InitialStateSpec{}; }
  static InitialStateSpec polarized_domain_wall() {
    InitialStateSpec s;
    s.kind = Kind::polarized_domain_wall;
    return s;
  }
  static InitialStateSpec custom(std::vector<double> p) {
    InitialStateSpec s;
    s.kind = Kind::custom;
    s.p_occupied = std::move(p);
    return s;
  }

  // Occupation probability per data site for an n-site chain.
  std::vector<double> site_probabilities(int n) const;
  bool is_pure(int n) const;
};

}  // namespace qturn
