#include "qturn/fcs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qturn {

using std::complex;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

double ChargeDistribution::probability(int q) const {
  const int k = q - q_min;
  if (k < 0 || k >= static_cast<int>(p.size())) return 0.0;
  return p[k];
}

double ChargeDistribution::total() const {
  double t = 0.0;
  for (double v : p) t += v;
  return t;
}

double ChargeDistribution::mean() const {
  double m = 0.0;
  for (size_t k = 0; k < p.size(); ++k) m += p[k] * (q_min + static_cast<int>(k));
  return m;
}

double ChargeDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    const double d = q_min + static_cast<int>(k) - m;
    v += p[k] * d * d;
  }
  return v;
}

double ChargeDistribution::third_central() const {
  const double m = mean();
  double v = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    const double d = q_min + static_cast<int>(k) - m;
    v += p[k] * d * d * d;
  }
  return v;
}

complex<double> ChargeDistribution::gf(double lambda) const {
  complex<double> f = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    const double q = q_min + static_cast<int>(k);
    f += p[k] * std::exp(complex<double>(0.0, q * lambda));
  }
  return f;
}

void ChargeDistribution::trim(double tol) {
  int lo = 0, hi = static_cast<int>(p.size()) - 1;
  while (lo < hi && std::abs(p[lo]) <= tol) ++lo;
  while (hi > lo && std::abs(p[hi]) <= tol) --hi;
  p = std::vector<double>(p.begin() + lo, p.begin() + hi + 1);
  q_min += lo;
}

GFSamples assemble_gf(const std::vector<LambdaRun>& runs,
                      const std::vector<int>& cycles, bool synthesize_zero) {
  if (runs.empty()) throw std::invalid_argument("assemble_gf: no runs");
  const size_t nc = cycles.size();
  for (const auto& r : runs)
    if (r.f.size() != nc)
      throw std::invalid_argument(
          "assemble_gf: run does not cover the requested cycles");

  std::vector<size_t> order(runs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return runs[a].lambda < runs[b].lambda;
  });
  for (size_t i = 1; i < order.size(); ++i)
    if (runs[order[i]].lambda == runs[order[i - 1]].lambda)
      throw std::invalid_argument("assemble_gf: duplicate lambda value");

  GFSamples gf;
  gf.cycle_index = cycles;
  gf.values.assign(nc, {});
  bool have_zero = false;
  for (size_t i : order) {
    gf.lambdas.push_back(runs[i].lambda);
    if (runs[i].lambda == 0.0) have_zero = true;
  }
  for (size_t c = 0; c < nc; ++c) {
    gf.values[c].reserve(order.size());
    for (size_t i : order) {
      complex<double> v = runs[i].f[c];
      if (runs[i].lambda == 0.0) {
        if (std::abs(v - 1.0) > 1e-9)
          throw std::invalid_argument(
              "assemble_gf: f(0) deviates from 1 beyond 1e-9");
        v = 1.0;
      }
      gf.values[c].push_back(v);
    }
  }

  if (!have_zero && synthesize_zero) {
    auto pos = std::upper_bound(gf.lambdas.begin(), gf.lambdas.end(), 0.0);
    const auto idx = pos - gf.lambdas.begin();
    gf.lambdas.insert(pos, 0.0);
    for (auto& row : gf.values) row.insert(row.begin() + idx, 1.0);
  }
  return gf;
}

GFSamples symmetrize_gf(const GFSamples& gf) {
  std::map<double, size_t> have;
  for (size_t k = 0; k < gf.lambdas.size(); ++k) have[gf.lambdas[k]] = k;

  GFSamples out;
  out.cycle_index = gf.cycle_index;
  std::vector<std::pair<double, std::pair<size_t, bool>>> cols;  // (idx, conj)
  for (auto& [l, k] : have) {
    cols.push_back({l, {k, false}});
    if (l != 0.0 && !have.count(-l)) cols.push_back({-l, {k, true}});
  }
  std::sort(cols.begin(), cols.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  for (auto& [l, src] : cols) out.lambdas.push_back(l);
  out.values.assign(gf.values.size(), {});
  for (size_t c = 0; c < gf.values.size(); ++c) {
    for (auto& [l, src] : cols) {
      const complex<double> v = gf.values[c][src.first];
      out.values[c].push_back(src.second ? std::conj(v) : v);
    }
  }
  return out;
}

CumulantSet cumulants_from_fit(const std::vector<double>& lambdas,
                               const std::vector<complex<double>>& f,
                               int order, double window) {
  if (order < 1) throw std::invalid_argument("cumulant fit order must be >= 1");
  if (!(window > 0.0))
    throw std::invalid_argument("cumulant fit window must be positive");
  if (lambdas.size() != f.size())
    throw std::invalid_argument("cumulant fit: grid/value size mismatch");

  // Conjugate-symmetric completion, then restrict to the window.
  std::map<double, complex<double>> samples;
  for (size_t k = 0; k < lambdas.size(); ++k) samples[lambdas[k]] = f[k];
  for (size_t k = 0; k < lambdas.size(); ++k)
    if (lambdas[k] != 0.0 && !samples.count(-lambdas[k]))
      samples[-lambdas[k]] = std::conj(f[k]);

  std::vector<double> xs;
  std::vector<complex<double>> fs;
  for (auto& [l, v] : samples) {
    if (std::abs(l) > window + 1e-12) continue;
    xs.push_back(l);
    fs.push_back(v);
  }
  const int n = static_cast<int>(xs.size());
  if (n < order + 2)
    throw std::invalid_argument(
        "cumulant fit: fewer than order+2 grid points inside the window");
  for (const auto& v : fs)
    if (std::abs(v) < 1e-6)
      throw std::invalid_argument(
          "cumulant fit: |f| < 1e-6 inside the window");

  // chi = log f with the phase unwrapped outward from the smallest |lambda|.
  int anchor = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(xs[i]) < std::abs(xs[anchor])) anchor = i;
  std::vector<double> phase(n);
  phase[anchor] = std::arg(fs[anchor]);
  for (int i = anchor + 1; i < n; ++i) {
    const double raw = std::arg(fs[i]);
    phase[i] = raw + kTwoPi * std::round((phase[i - 1] - raw) / kTwoPi);
  }
  for (int i = anchor - 1; i >= 0; --i) {
    const double raw = std::arg(fs[i]);
    phase[i] = raw + kTwoPi * std::round((phase[i + 1] - raw) / kTwoPi);
  }

  Eigen::MatrixXd a(n, order);
  Eigen::VectorXd br(n), bi(n);
  for (int i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int m = 0; m < order; ++m) {
      pw *= xs[i];
      a(i, m) = pw;
    }
    br(i) = std::log(std::abs(fs[i]));
    bi(i) = phase[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::VectorXd xr = qr.solve(br);
  const Eigen::VectorXd xi = qr.solve(bi);

  const double res2 = (a * xr - br).squaredNorm() + (a * xi - bi).squaredNorm();

  CumulantSet cs;
  cs.fit_order = order;
  cs.fit_window = window;
  cs.fit_residual = std::sqrt(res2 / n);
  auto kappa = [&](int m) {
    const complex<double> cm(xr(m - 1), xi(m - 1));
    const complex<double> im = std::pow(complex<double>(0.0, 1.0), m);
    double fact = 1.0;
    for (int j = 2; j <= m; ++j) fact *= j;
    return (fact * cm / im).real();
  };
  cs.mean = kappa(1);
  if (order >= 2) cs.variance = kappa(2);
  if (order >= 3) cs.kappa3 = kappa(3);
  cs.skewness_normalized =
      cs.variance > 0.0 ? cs.kappa3 / std::pow(cs.variance, 1.5) : 0.0;
  return cs;
}

ChargeDistribution distribution_from_gf(const std::vector<double>& lambdas,
                                        const std::vector<complex<double>>& f,
                                        double clip_tol) {
  const int m = static_cast<int>(lambdas.size());
  if (m < 2 || f.size() != lambdas.size())
    throw std::invalid_argument("distribution_from_gf: bad grid");
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return lambdas[a] < lambdas[b]; });
  const double h = kTwoPi / m;
  for (int i = 0; i < m; ++i) {
    const double l = lambdas[order[i]];
    if (l <= -kPi - 1e-9 || l > kPi + 1e-9)
      throw std::invalid_argument(
          "distribution_from_gf: grid point outside (-pi, pi]");
    if (i > 0 &&
        std::abs(lambdas[order[i]] - lambdas[order[i - 1]] - h) > 1e-9)
      throw std::invalid_argument(
          "distribution_from_gf: grid must be uniform with spacing 2pi/M");
  }

  const int q_lo = -(m / 2);
  std::vector<double> p(m);
  double max_imag = 0.0;
  for (int j = 0; j < m; ++j) {
    const int q = q_lo + j;
    complex<double> acc = 0.0;
    for (int k = 0; k < m; ++k)
      acc += f[k] * std::exp(complex<double>(0.0, -q * lambdas[k]));
    acc /= static_cast<double>(m);
    max_imag = std::max(max_imag, std::abs(acc.imag()));
    p[j] = acc.real();
  }
  if (max_imag > 1e-6)
    throw std::runtime_error(
        "distribution_from_gf: imaginary residue above 1e-6 (support outside "
        "the grid window?)");

  double clipped = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      clipped += -v;
      v = 0.0;
    }
  }
  if (clipped > clip_tol)
    throw std::runtime_error(
        "distribution_from_gf: negative probability mass beyond tolerance");
  if (clipped > 0.0) {
    double t = 0.0;
    for (double v : p) t += v;
    if (t > 0.0)
      for (double& v : p) v /= t;
  }

  ChargeDistribution d;
  d.q_min = q_lo;
  d.p = std::move(p);
  d.trim();
  return d;
}

CumulantSet cumulants_of(const ChargeDistribution& d) {
  CumulantSet cs;
  cs.mean = d.mean();
  cs.variance = d.variance();
  cs.kappa3 = d.third_central();
  cs.skewness_normalized =
      cs.variance > 0.0 ? cs.kappa3 / std::pow(cs.variance, 1.5) : 0.0;
  return cs;
}

double shots_required(double lambda, double t, double t2) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("shots_required: lambda must be positive");
  if (!(t2 > 0.0))
    throw std::invalid_argument("shots_required: t2 must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("shots_required: t < 0");
  const double l2 = lambda * lambda;
  const double r = t / t2;
  return std::min(1.0 / l2, r * r / (l2 * l2));
}

ReadoutSample sample_readout(double x, double y, std::int64_t shots, Rng& rng) {
  if (x * x + y * y > 1.0 + 1e-9)
    throw std::invalid_argument("sample_readout: |f| exceeds 1");
  if (shots < 0) throw std::invalid_argument("sample_readout: negative shots");
  if (shots == 0) return {x, y};  // infinite-shot limit
  auto estimate = [&](double mean) {
    const double p_up = 0.5 * (1.0 + mean);
    std::int64_t up = 0;
    for (std::int64_t i = 0; i < shots; ++i)
      if (rng.uniform() < p_up) ++up;
    return 2.0 * static_cast<double>(up) / static_cast<double>(shots) - 1.0;
  };
  ReadoutSample s;
  s.x = estimate(x);
  s.y = estimate(y);
  return s;
}

}  // namespace qturn
