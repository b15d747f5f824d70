#include "qturn/mpdo.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace qturn {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

const Eigen::Matrix2cd& pauli(int p) {
  using C = std::complex<double>;
  static const std::array<Eigen::Matrix2cd, 4> s = [] {
    std::array<Eigen::Matrix2cd, 4> a;
    a[0] << 1, 0, 0, 1;
    a[1] << 0, 1, 1, 0;
    a[2] << C(0, 0), C(0, -1), C(0, 1), C(0, 0);
    a[3] << 1, 0, 0, -1;
    return a;
  }();
  return s[p];
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// tr(B_0) per site kind; all other basis elements are traceless
double trace_weight(int dp) { return dp == 16 ? 2.0 : kSqrt2; }

// e'[l] = sum_{r,p} w[p] T[l,p,r] e[r]
Eigen::VectorXd step_left(const Eigen::VectorXd& e, const Tensor3& t,
                          const Eigen::VectorXd& w) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.dl);
  for (int p = 0; p < t.dp; ++p)
    if (w[p] != 0.0) out.noalias() += w[p] * (t.slice(p) * e);
  return out;
}

}  // namespace

int Mpdo::max_bond_dim() const {
  int b = 1;
  for (const auto& a : t) b = std::max(b, std::max(a.dl, a.dr));
  return b;
}

Eigen::VectorXd Mpdo::trace_env_left(int k) const {
  Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
  for (int j = 0; j < k; ++j)
    e = trace_weight(t[j].dp) * (t[j].slice(0).transpose() * e);
  return e;
}

Eigen::VectorXd Mpdo::trace_env_right(int k) const {
  Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
  for (int j = n_sites - 1; j >= k; --j)
    e = trace_weight(t[j].dp) * (t[j].slice(0) * e);
  return e;
}

double Mpdo::trace() const { return trace_env_left(n_sites)(0); }

namespace {

void left_step(std::vector<Tensor3>& ts, int k) {
  Tensor3& a = ts[k];
  Eigen::MatrixXd m = a.lp_r();
  const int kk = static_cast<int>(std::min(m.rows(), m.cols()));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), kk);
  Eigen::MatrixXd r = Eigen::MatrixXd(qr.matrixQR()
                                          .topRows(kk)
                                          .triangularView<Eigen::Upper>());
  for (int i = 0; i < kk; ++i)
    if (r(i, i) < 0.0) {
      r.row(i) = -r.row(i);
      q.col(i) = -q.col(i);
    }
  Tensor3 na(a.dl, a.dp, kk);
  na.lp_r() = q;
  Tensor3& b = ts[k + 1];
  Tensor3 nb(kk, b.dp, b.dr);
  nb.l_pr() = r * b.l_pr();
  ts[k] = std::move(na);
  ts[k + 1] = std::move(nb);
}

void right_step(std::vector<Tensor3>& ts, int k) {
  Tensor3& a = ts[k];
  Eigen::MatrixXd mt = a.l_pr().transpose();
  const int kk = static_cast<int>(std::min(mt.rows(), mt.cols()));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(mt);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(mt.rows(), kk);
  Eigen::MatrixXd r = Eigen::MatrixXd(qr.matrixQR()
                                          .topRows(kk)
                                          .triangularView<Eigen::Upper>());
  for (int i = 0; i < kk; ++i)
    if (r(i, i) < 0.0) {
      r.row(i) = -r.row(i);
      q.col(i) = -q.col(i);
    }
  Tensor3 na(kk, a.dp, a.dr);
  na.l_pr() = q.transpose();
  Tensor3& b = ts[k - 1];
  Tensor3 nb(b.dl, b.dp, kk);
  nb.lp_r() = b.lp_r() * r.transpose();
  ts[k] = std::move(na);
  ts[k - 1] = std::move(nb);
}

}  // namespace

void Mpdo::canonize(int j) {
  if (j < 0 || j >= n_sites) throw std::out_of_range("canonize: bad position");
  if (center == j) return;
  if (center < 0) {
    for (int k = 0; k < j; ++k) left_step(t, k);
    for (int k = n_sites - 1; k > j; --k) right_step(t, k);
  } else if (center < j) {
    for (int k = center; k < j; ++k) left_step(t, k);
  } else {
    for (int k = center; k > j; --k) right_step(t, k);
  }
  center = j;
}

double Mpdo::canonical_defect() const {
  if (center < 0) throw std::logic_error("canonical_defect: center unknown");
  double d = 0.0;
  for (int k = 0; k < n_sites; ++k) {
    if (k == center) continue;
    if (k < center) {
      Eigen::MatrixXd m = t[k].lp_r();
      d = std::max(d, (m.transpose() * m -
                       Eigen::MatrixXd::Identity(m.cols(), m.cols()))
                          .cwiseAbs()
                          .maxCoeff());
    } else {
      Eigen::MatrixXd m = t[k].l_pr();
      d = std::max(d, (m * m.transpose() -
                       Eigen::MatrixXd::Identity(m.rows(), m.rows()))
                          .cwiseAbs()
                          .maxCoeff());
    }
  }
  return d;
}

void Mpdo::scale(double f) { t[center >= 0 ? center : 0].v *= f; }

void Mpdo::apply_site_superop(int j, const Eigen::MatrixXd& e) {
  Tensor3& a = t[j];
  if (e.rows() != a.dp || e.cols() != a.dp)
    throw std::invalid_argument("apply_site_superop: dimension mismatch");
  using Map = Eigen::Map<Tensor3::RowMajor>;
  for (int l = 0; l < a.dl; ++l) {
    Map blk(a.v.data() + static_cast<std::int64_t>(l) * a.dp * a.dr, a.dp,
            a.dr);
    blk = (e * blk).eval();
  }
}

double Mpdo::site_expectation(int j, const Eigen::VectorXd& opvec) const {
  if (opvec.size() != phys_dim(j))
    throw std::invalid_argument("site_expectation: op size mismatch");
  const Eigen::VectorXd el = trace_env_left(j);
  const Eigen::VectorXd er = trace_env_right(j + 1);
  return el.dot(step_left(er, t[j], opvec));
}

Eigen::MatrixXcd Mpdo::reduced_density(int first, int count) const {
  if (first < 0 || count < 1 || first + count > n_sites)
    throw std::out_of_range("reduced_density: bad window");
  const Eigen::VectorXd el = trace_env_left(first);
  const Eigen::VectorXd er = trace_env_right(first + count);

  auto basis = [&](int pos, int p) -> Eigen::MatrixXcd {
    if (pos == super_pos) return kron(pauli(p / 4), pauli(p % 4)) / 2.0;
    return pauli(p) / kSqrt2;
  };

  Eigen::Index dim = 1;
  for (int w = 0; w < count; ++w) dim *= (first + w == super_pos) ? 4 : 2;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);

  std::vector<int> idx(count, 0);
  for (;;) {
    Eigen::VectorXd v = er;
    for (int w = count - 1; w >= 0; --w) v = t[first + w].slice(idx[w]) * v;
    const double coeff = el.dot(v);
    if (coeff != 0.0) {
      Eigen::MatrixXcd m = basis(first, idx[0]);
      for (int w = 1; w < count; ++w) m = kron(m, basis(first + w, idx[w]));
      rho += coeff * m;
    }
    int w = count - 1;
    while (w >= 0 && ++idx[w] == phys_dim(first + w)) idx[w--] = 0;
    if (w < 0) break;
  }
  return rho;
}

Eigen::MatrixXcd Mpdo::dense_matrix() const {
  const int n_q = n_sites + (super_pos >= 0 ? 1 : 0);
  if (n_q > 12) throw std::invalid_argument("dense_matrix: system too large");
  const Eigen::Index dim = Eigen::Index(1) << n_q;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);

  std::vector<int> idx(n_sites, 0);
  for (;;) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(1);
    for (int w = n_sites - 1; w >= 0; --w) v = t[w].slice(idx[w]) * v;
    const double coeff = v(0);
    if (coeff != 0.0) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(1, 1);
      if (super_pos >= 0) m = pauli(idx[super_pos] % 4) / kSqrt2;  // ancilla
      for (int k = n_sites - 1; k >= 0; --k) {
        const int p = (k == super_pos) ? idx[k] / 4 : idx[k];
        m = kron(m, pauli(p) / kSqrt2);
      }
      rho += coeff * m;
    }
    int w = n_sites - 1;
    while (w >= 0 && ++idx[w] == phys_dim(w)) idx[w--] = 0;
    if (w < 0) break;
  }
  return rho;
}

void Mpdo::save(std::ostream& os, const std::string& config_echo) const {
  const char magic[8] = {'Q', 'T', 'M', 'P', 'D', 'O', '0', '1'};
  os.write(magic, 8);
  auto w32 = [&](std::int32_t x) {
    os.write(reinterpret_cast<const char*>(&x), 4);
  };
  const std::int64_t len = static_cast<std::int64_t>(config_echo.size());
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(config_echo.data(), len);
  w32(n_sites);
  w32(super_pos);
  w32(center);
  for (const auto& a : t) {
    w32(a.dl);
    w32(a.dp);
    w32(a.dr);
    os.write(reinterpret_cast<const char*>(a.v.data()),
             static_cast<std::streamsize>(a.v.size()) * 8);
  }
  if (!os) throw std::runtime_error("mpdo save: stream failure");
}

Mpdo Mpdo::load(std::istream& is, std::string* config_echo) {
  char magic[8];
  is.read(magic, 8);
  static const char want[8] = {'Q', 'T', 'M', 'P', 'D', 'O', '0', '1'};
  if (!is || std::memcmp(magic, want, 8) != 0)
    throw std::runtime_error("mpdo load: bad magic");
  auto r32 = [&] {
    std::int32_t x;
    is.read(reinterpret_cast<char*>(&x), 4);
    return x;
  };
  std::int64_t len;
  is.read(reinterpret_cast<char*>(&len), 8);
  if (!is || len < 0 || len > (std::int64_t(1) << 30))
    throw std::runtime_error("mpdo load: bad header");
  std::string echo(static_cast<size_t>(len), '\0');
  is.read(echo.data(), len);
  if (config_echo) *config_echo = echo;

  Mpdo m;
  m.n_sites = r32();
  m.super_pos = r32();
  m.center = r32();
  if (!is || m.n_sites < 1 || m.n_sites > 65536 ||
      m.super_pos >= m.n_sites || m.center >= m.n_sites)
    throw std::runtime_error("mpdo load: bad shape");
  m.t.reserve(m.n_sites);
  for (int k = 0; k < m.n_sites; ++k) {
    const int dl = r32(), dp = r32(), dr = r32();
    if (!is || dl < 1 || dp < 1 || dr < 1 || dp > 16 ||
        std::int64_t(dl) * dp * dr > (std::int64_t(1) << 32))
      throw std::runtime_error("mpdo load: bad tensor shape");
    Tensor3 a(dl, dp, dr);
    is.read(reinterpret_cast<char*>(a.v.data()),
            static_cast<std::streamsize>(a.v.size()) * 8);
    m.t.push_back(std::move(a));
  }
  if (!is) throw std::runtime_error("mpdo load: truncated stream");
  if (m.t.front().dl != 1 || m.t.back().dr != 1)
    throw std::runtime_error("mpdo load: open boundary bonds must be 1");
  for (int k = 0; k + 1 < m.n_sites; ++k)
    if (m.t[k].dr != m.t[k + 1].dl)
      throw std::runtime_error("mpdo load: bond mismatch");
  return m;
}

Mpdo mpdo_from_product(const InitialStateSpec& spec, const ChainSpec& chain) {
  chain.validate();
  const auto p = spec.site_probabilities(chain.n_sites);
  Mpdo m;
  m.n_sites = chain.n_sites;
  m.super_pos = chain.central;
  m.t.reserve(m.n_sites);
  for (int k = 0; k < m.n_sites; ++k) {
    const double z = 1.0 - 2.0 * p[k];
    if (k == m.super_pos) {
      Tensor3 a(1, 16, 1);
      a.at(0, 0, 0) = 0.5;      // I (x) I
      a.at(0, 1, 0) = 0.5;      // I (x) X  (ancilla |+>)
      a.at(0, 12, 0) = 0.5 * z;  // Z (x) I
      a.at(0, 13, 0) = 0.5 * z;  // Z (x) X
      m.t.push_back(std::move(a));
    } else {
      Tensor3 a(1, 4, 1);
      a.at(0, 0, 0) = 1.0 / kSqrt2;
      a.at(0, 3, 0) = z / kSqrt2;
      m.t.push_back(std::move(a));
    }
  }
  m.center = 0;
  return m;
}

Eigen::VectorXd qubit_op_vec(const Eigen::Matrix2cd& o) {
  Eigen::VectorXd v(4);
  for (int p = 0; p < 4; ++p)
    v(p) = (pauli(p) * o).trace().real() / kSqrt2;
  return v;
}

Eigen::VectorXd super_op_vec(const Eigen::Matrix4cd& o) {
  Eigen::VectorXd v(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      v(4 * i + j) =
          (kron(pauli(i), pauli(j)) * Eigen::MatrixXcd(o)).trace().real() /
          2.0;
  return v;
}

std::pair<double, double> mpdo_ancilla_xy(const Mpdo& m) {
  if (m.super_pos < 0)
    throw std::logic_error("mpdo_ancilla_xy: state has no ancilla");
  const Eigen::VectorXd el = m.trace_env_left(m.super_pos);
  const Eigen::VectorXd er = m.trace_env_right(m.super_pos + 1);
  const Tensor3& a = m.t[m.super_pos];
  const double x = 2.0 * el.dot(a.slice(1) * er);   // I (x) X
  const double y = 2.0 * el.dot(a.slice(2) * er);   // I (x) Y
  return {x, y};
}

double mpdo_occupation(const Mpdo& m, int site) {
  Eigen::Matrix2cd n;
  n << 0, 0, 0, 1;
  if (site == m.super_pos) {
    Eigen::Matrix4cd o = kron(n, pauli(0));
    return m.site_expectation(site, super_op_vec(o));
  }
  return m.site_expectation(site, qubit_op_vec(n));
}

}  // namespace qturn
