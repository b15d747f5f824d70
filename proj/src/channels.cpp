#include "qturn/channels.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace qturn {

using std::complex;

double KrausSet::completeness_defect() const {
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
  for (const auto& m : k) acc += m.adjoint() * m;
  return (acc - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

namespace {
void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("channel strength must lie in [0, 1]");
}
}  // namespace

KrausSet depolarizing_kraus(double gamma) {
  check_gamma(gamma);
  const double w = std::sqrt(gamma / 4.0);
  KrausSet ks;
  ks.k.resize(4);
  ks.k[0] = std::sqrt(1.0 - 0.75 * gamma) * Eigen::Matrix2cd::Identity();
  ks.k[1] << 0, w, w, 0;                                          // X
  ks.k[2] << 0, complex<double>(0, -w), complex<double>(0, w), 0;  // Y
  ks.k[3] << w, 0, 0, -w;                                          // Z
  return ks;
}

KrausSet amplitude_damping_kraus(double gamma) {
  check_gamma(gamma);
  KrausSet ks;
  ks.k.resize(2);
  ks.k[0] << 1, 0, 0, std::sqrt(1.0 - gamma);
  ks.k[1] << 0, std::sqrt(gamma), 0, 0;
  return ks;
}

KrausSet NoiseSpec::kraus() const {
  switch (kind) {
    case Kind::depolarizing:
      return depolarizing_kraus(gamma);
    case Kind::amplitude_damping:
      return amplitude_damping_kraus(gamma);
    case Kind::none:
      break;
  }
  throw std::logic_error("NoiseSpec::kraus called with no channel selected");
}

}  // namespace qturn
