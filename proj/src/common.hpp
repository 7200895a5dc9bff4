#pragma once

#include <complex>

#include <Eigen/Dense>

namespace lrthcr {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// (g + g^H)/2. Removes floating-point drift before structural operations.
inline CMat hermitize(const CMat& g) { return 0.5 * (g + g.adjoint()); }

/// (c + c^T)/2 for matrices that should be complex symmetric.
inline CMat symmetrize(const CMat& c) { return 0.5 * (c + c.transpose()); }

inline double relative_deviation(const CMat& a, const CMat& b) {
  double denom = std::max(1.0, b.norm());
  return (a - b).norm() / denom;
}

}  // namespace lrthcr
