#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace qturn {

// Rank-3 real tensor T[l, p, r], row-major (r fastest).
struct Tensor3 {
  int dl = 0, dp = 0, dr = 0;
  Eigen::VectorXd v;

  Tensor3() = default;
  Tensor3(int l, int p, int r)
      : dl(l), dp(p), dr(r),
        v(Eigen::VectorXd::Zero(static_cast<std::int64_t>(l) * p * r)) {}

  double& at(int l, int p, int r) {
    return v[(static_cast<std::int64_t>(l) * dp + p) * dr + r];
  }
  double at(int l, int p, int r) const {
    return v[(static_cast<std::int64_t>(l) * dp + p) * dr + r];
  }

  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // (l p) x r view
  Eigen::Map<RowMajor> lp_r() {
    return {v.data(), static_cast<Eigen::Index>(dl) * dp, dr};
  }
  Eigen::Map<const RowMajor> lp_r() const {
    return {v.data(), static_cast<Eigen::Index>(dl) * dp, dr};
  }
  // l x (p r) view
  Eigen::Map<RowMajor> l_pr() {
    return {v.data(), dl, static_cast<Eigen::Index>(dp) * dr};
  }
  Eigen::Map<const RowMajor> l_pr() const {
    return {v.data(), dl, static_cast<Eigen::Index>(dp) * dr};
  }
  // T[., p, .] slice as a dl x dr matrix
  Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>> slice(int p) const {
    return {v.data() + static_cast<std::int64_t>(p) * dr, dl, dr,
            Eigen::OuterStride<>(static_cast<Eigen::Index>(dp) * dr)};
  }
};

}  // namespace qturn
