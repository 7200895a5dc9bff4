#include "residual.hpp"

#include <utility>
#include <vector>

#include "chi2.hpp"
#include "errors.hpp"
#include "structured.hpp"

namespace lrthcr {

namespace {

// Index of every moment-vector entry inside the augmented covariance:
// q = [vec(R_y); subvec(C_y); conj(subvec(C_y))] and
// R_y = Rz(0:N,0:N), C_y = Rz(0:N,N:2N), conj(C_y) = Rz(N:2N,0:N).
std::vector<std::pair<int, int>> moment_index_map(int n) {
  std::vector<std::pair<int, int>> idx;
  idx.reserve(2 * n * n + n);
  for (int col = 0; col < n; ++col)
    for (int row = 0; row < n; ++row) idx.emplace_back(row, col);
  for (int col = 0; col < n; ++col)
    for (int row = col; row < n; ++row) idx.emplace_back(row, col + n);
  for (int col = 0; col < n; ++col)
    for (int row = col; row < n; ++row) idx.emplace_back(row + n, col);
  return idx;
}

}  // namespace

ResidualModel estimate_rq(const SampleMoments& m, double p_deviation) {
  if (m.snapshot_count < 2)
    fail(ErrorCode::InsufficientSnapshots, "moment-error covariance needs L >= 2");
  const int n = static_cast<int>(m.cov.rows());
  const int d = 2 * n * n + n;

  const CMat rz = build_rz(m);
  CMat cz(2 * n, 2 * n);  // Rz P: swapped column blocks
  cz.leftCols(n) = rz.rightCols(n);
  cz.rightCols(n) = rz.leftCols(n);

  const auto idx = moment_index_map(n);
  const double inv_l = 1.0 / m.snapshot_count;
  CMat rq(d, d);
  for (int a = 0; a < d; ++a) {
    const auto [i, j] = idx[a];
    for (int b = 0; b < d; ++b) {
      const auto [k, l] = idx[b];
      rq(a, b) = inv_l * (rz(i, k) * std::conj(rz(j, l)) +
                          cz(i, l) * std::conj(cz(j, k)));
    }
  }
  rq = hermitize(rq);

  Eigen::SelfAdjointEigenSolver<CMat> eig(rq);
  const RVec vals = eig.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  RVec inv_sqrt = RVec::Zero(d);
  for (int i = 0; i < d; ++i)
    if (top > 0.0 && vals[i] > 1e-12 * top) inv_sqrt[i] = 1.0 / std::sqrt(vals[i]);

  ResidualModel out;
  out.r_q = std::move(rq);
  out.whitener = eig.eigenvectors() * inv_sqrt.asDiagonal() *
                 eig.eigenvectors().adjoint();
  out.eta = chi2_quantile(d, p_deviation);
  return out;
}

}  // namespace lrthcr
