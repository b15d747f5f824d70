#include "qturn/ssep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qturn/rng.hpp"

namespace qturn {

void SsepParams::validate() const {
  if (n_sites < 2 || n_sites % 2 != 0)
    throw std::invalid_argument("ssep: n_sites must be even and >= 2");
  if (!(hop_rate > 0.0))
    throw std::invalid_argument("ssep: hop_rate must be positive");
  if (static_cast<int>(p_init.size()) != n_sites)
    throw std::invalid_argument("ssep: p_init size mismatch");
  for (double p : p_init)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("ssep: occupation probability outside [0,1]");
}

namespace {

// Active bonds of configuration c: bits where neighbours differ.
inline std::uint64_t active_mask(std::uint64_t c, int n) {
  return (c ^ (c >> 1)) & ((std::uint64_t(1) << (n - 1)) - 1);
}

inline int nth_set_bit(std::uint64_t m, int k) {
  for (;;) {
    const int b = std::countr_zero(m);
    if (k-- == 0) return b;
    m &= m - 1;
  }
}

}  // namespace

SsepSeries ssep_sample(const SsepParams& p, const std::vector<double>& times,
                       std::int64_t trajectories, std::uint64_t seed) {
  p.validate();
  if (trajectories < 1) throw std::invalid_argument("ssep: no trajectories");
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw std::invalid_argument("ssep: times must be increasing");
  if (!times.empty() && times.front() < 0.0)
    throw std::invalid_argument("ssep: negative time");

  const int n = p.n_sites;
  const int cb = p.central_bond();
  const size_t nt = times.size();
  std::vector<double> s1(nt, 0.0), s2(nt, 0.0), s3(nt, 0.0), s4(nt, 0.0);

  for (std::int64_t traj = 0; traj < trajectories; ++traj) {
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(traj), 0x73736570ULL}));
    std::uint64_t c = 0;
    for (int k = 0; k < n; ++k)
      if (rng.uniform() < p.p_init[k]) c |= std::uint64_t(1) << k;

    double t = 0.0;
    int q = 0;
    size_t next = 0;
    while (next < nt) {
      const std::uint64_t am = active_mask(c, n);
      const int na = std::popcount(am);
      double t_jump;
      if (na == 0) {
        t_jump = std::numeric_limits<double>::infinity();
      } else {
        t_jump = t + rng.exponential(p.hop_rate * na);
      }
      while (next < nt && times[next] < t_jump) {
        const double x = q;
        s1[next] += x;
        s2[next] += x * x;
        s3[next] += x * x * x;
        s4[next] += x * x * x * x;
        ++next;
      }
      if (next >= nt) break;
      t = t_jump;
      const int b = nth_set_bit(am, static_cast<int>(rng.below(na)));
      const bool moved_right = (c >> b) & 1;  // occupied on the left side
      c ^= (std::uint64_t(0b11) << b);
      if (b == cb) q += moved_right ? 1 : -1;
    }
  }

  SsepSeries out;
  out.times = times;
  out.trajectories = trajectories;
  const double m = static_cast<double>(trajectories);
  out.mean_q.resize(nt);
  out.var_q.resize(nt);
  out.se_mean.resize(nt);
  out.se_var.resize(nt);
  for (size_t i = 0; i < nt; ++i) {
    const double m1 = s1[i] / m;
    const double m2 = s2[i] / m;
    const double m3 = s3[i] / m;
    const double m4 = s4[i] / m;
    const double var = m2 - m1 * m1;
    // central moments for the variance's sampling error
    const double c2 = var;
    const double c4 =
        m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    out.mean_q[i] = m1;
    out.var_q[i] = var;
    out.se_mean[i] = std::sqrt(std::max(0.0, c2 / m));
    out.se_var[i] = std::sqrt(std::max(0.0, (c4 - c2 * c2) / m));
  }
  return out;
}

std::vector<std::complex<double>> ssep_gf_exact(
    const SsepParams& p, double lambda, const std::vector<double>& times,
    double dt) {
  p.validate();
  if (p.n_sites > 12)
    throw std::invalid_argument("ssep_gf_exact: chain too large");
  if (!(dt > 0.0)) throw std::invalid_argument("ssep_gf_exact: bad dt");
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw std::invalid_argument("ssep_gf_exact: times must be increasing");

  using C = std::complex<double>;
  const int n = p.n_sites;
  const size_t dim = size_t(1) << n;
  const int cb = p.central_bond();
  const C up = std::exp(C(0.0, lambda));
  const C dn = std::exp(C(0.0, -lambda));

  std::vector<C> v(dim);
  for (size_t c = 0; c < dim; ++c) {
    double w = 1.0;
    for (int k = 0; k < n; ++k)
      w *= ((c >> k) & 1) ? p.p_init[k] : 1.0 - p.p_init[k];
    v[c] = w;
  }

  auto deriv = [&](const std::vector<C>& x, std::vector<C>& out) {
    std::fill(out.begin(), out.end(), C(0.0));
    for (size_t c = 0; c < dim; ++c) {
      const std::uint64_t am = active_mask(c, n);
      const int na = std::popcount(am);
      if (na == 0) continue;
      const C xc = x[c] * p.hop_rate;
      out[c] -= static_cast<double>(na) * xc;
      std::uint64_t mm = am;
      while (mm) {
        const int b = std::countr_zero(mm);
        mm &= mm - 1;
        const size_t c2 = c ^ (std::uint64_t(0b11) << b);
        C w = xc;
        if (b == cb) w *= ((c >> b) & 1) ? up : dn;
        out[c2] += w;
      }
    }
  };

  std::vector<C> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  std::vector<C> result;
  result.reserve(times.size());
  double t = 0.0;
  for (double target : times) {
    if (target < t)
      throw std::invalid_argument("ssep_gf_exact: negative time");
    while (t < target - 1e-15) {
      const double h = std::min(dt, target - t);
      deriv(v, k1);
      for (size_t i = 0; i < dim; ++i) tmp[i] = v[i] + 0.5 * h * k1[i];
      deriv(tmp, k2);
      for (size_t i = 0; i < dim; ++i) tmp[i] = v[i] + 0.5 * h * k2[i];
      deriv(tmp, k3);
      for (size_t i = 0; i < dim; ++i) tmp[i] = v[i] + h * k3[i];
      deriv(tmp, k4);
      for (size_t i = 0; i < dim; ++i)
        v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
    }
    C f = 0.0;
    for (const C& x : v) f += x;
    result.push_back(f);
  }
  return result;
}

double telegraph_p_right(double t, double hop_rate) {
  return 0.5 * (1.0 - std::exp(-2.0 * hop_rate * t));
}

}  // namespace qturn
