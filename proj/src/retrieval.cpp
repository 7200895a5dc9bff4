#include "retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "errors.hpp"

namespace lrthcr {

namespace {

constexpr double kValueFloor = 1e-30;

RVec make_grid(double step, int* n_out) {
  if (!(step > 0.0) || step > 0.5)
    fail(ErrorCode::InvalidArgument, "grid step must lie in (0, 1/2]");
  const int n = std::max(8, static_cast<int>(std::llround(1.0 / step)));
  RVec grid(n);
  for (int i = 0; i < n; ++i) grid[i] = -0.5 + static_cast<double>(i + 1) / n;
  *n_out = n;
  return grid;
}

// Steering matrix with one grid frequency per column.
CMat grid_manifold(const RVec& grid, int m) {
  CMat a(m, grid.size());
  for (Eigen::Index c = 0; c < grid.size(); ++c) {
    const double f = grid[c];
    for (int r = 0; r < m; ++r) a(r, c) = std::polar(1.0, kTwoPi * r * f);
  }
  return a;
}

// Noise-subspace projector E_n E_n^H from the minor eigenvectors.
CMat noise_projector(const CMat& cov, int k) {
  const int dim = static_cast<int>(cov.rows());
  Eigen::SelfAdjointEigenSolver<CMat> eig(hermitize(cov));
  const CMat en = eig.eigenvectors().leftCols(dim - k);
  return en * en.adjoint();
}

// Top-k strict local maxima on the circular grid, by descending value with
// ties broken toward the lower frequency; reported ascending.
RVec pick_peaks(const RVec& grid, const RVec& values, int k) {
  const int n = static_cast<int>(grid.size());
  std::vector<int> maxima;
  for (int i = 0; i < n; ++i) {
    const double left = values[(i + n - 1) % n];
    const double right = values[(i + 1) % n];
    if (values[i] > left && values[i] > right) maxima.push_back(i);
  }
  if (static_cast<int>(maxima.size()) < k)
    fail(ErrorCode::RetrievalFailure,
         "found " + std::to_string(maxima.size()) + " spectrum peaks, need " +
             std::to_string(k));
  std::sort(maxima.begin(), maxima.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return grid[a] < grid[b];
  });
  maxima.resize(k);
  RVec peaks(k);
  for (int i = 0; i < k; ++i) peaks[i] = grid[maxima[i]];
  std::sort(peaks.data(), peaks.data() + k);
  return peaks;
}

void check_spectrum_args(const CMat& cov, int k, int manifold_rank_limit,
                         const char* what) {
  if (cov.rows() != cov.cols())
    fail(ErrorCode::InvalidDimension, std::string(what) + " must be square");
  if ((cov - cov.adjoint()).norm() > 1e-8 * std::max(1.0, cov.norm()))
    fail(ErrorCode::InvalidInput, std::string(what) + " is not Hermitian within tolerance");
  if (k < 1 || k >= manifold_rank_limit)
    fail(ErrorCode::InvalidRank, "source count must satisfy 1 <= k < " +
                                     std::to_string(manifold_rank_limit));
}

// Doubled-manifold pseudo-spectrum: per frequency, the 2x2 noise-subspace
// Gram of blkdiag(b, conj(b)) scored by its minimum eigenvalue.
SpectrumEstimate nc_spectrum_from(const CMat& cov, const CMat& grid_steer,
                                  const RVec& grid, int k) {
  const int half = static_cast<int>(cov.rows()) / 2;
  const CMat q = noise_projector(cov, k);
  const CMat q11 = q.topLeftCorner(half, half);
  const CMat q12 = q.topRightCorner(half, half);
  const CMat q22 = q.bottomRightCorner(half, half);

  const CMat conj_steer = grid_steer.conjugate();
  const CMat t1 = q11 * grid_steer;
  const CMat t2 = q12 * conj_steer;
  const CMat t3 = q22 * conj_steer;

  const int n = static_cast<int>(grid.size());
  SpectrumEstimate s;
  s.grid = grid;
  s.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double g11 = conj_steer.col(i).cwiseProduct(t1.col(i)).sum().real();
    const Complex g12 = conj_steer.col(i).cwiseProduct(t2.col(i)).sum();
    const double g22 = grid_steer.col(i).cwiseProduct(t3.col(i)).sum().real();
    const double mean = 0.5 * (g11 + g22);
    const double radius =
        std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + std::norm(g12));
    s.values[i] = 1.0 / std::max(mean - radius, kValueFloor);
  }
  s.peaks = pick_peaks(s.grid, s.values, k);
  return s;
}

}  // namespace

SpectrumEstimate nc_music_spectrum(const CMat& r_a, int k, double step) {
  check_spectrum_args(r_a, k, static_cast<int>(r_a.rows()), "augmented covariance");
  if (r_a.rows() % 2 != 0)
    fail(ErrorCode::InvalidDimension, "augmented covariance must have even dimension");
  const int m = static_cast<int>(r_a.rows()) / 2;
  int n = 0;
  const RVec grid = make_grid(step, &n);
  return nc_spectrum_from(hermitize(r_a), grid_manifold(grid, m), grid, k);
}

SpectrumEstimate nc_music_spectrum_compressed(const CMat& r_z,
                                              const MeasurementDesign& design,
                                              int k, double step) {
  check_spectrum_args(r_z, k, static_cast<int>(r_z.rows()), "augmented covariance");
  if (r_z.rows() != 2 * design.compressed_dim())
    fail(ErrorCode::InvalidDimension, "covariance does not match the design");
  int n = 0;
  const RVec grid = make_grid(step, &n);
  const CMat steer = design.j() * grid_manifold(grid, design.full_dim());
  return nc_spectrum_from(hermitize(r_z), steer, grid, k);
}

SpectrumEstimate music_spectrum(const CMat& t, int k, double step) {
  check_spectrum_args(t, k, static_cast<int>(t.rows()), "covariance");
  const int m = static_cast<int>(t.rows());
  int n = 0;
  const RVec grid = make_grid(step, &n);
  const CMat steer = grid_manifold(grid, m);
  const CMat q = noise_projector(hermitize(t), k);
  const CMat qa = q * steer;

  SpectrumEstimate s;
  s.grid = grid;
  s.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double denom = steer.col(i).conjugate().cwiseProduct(qa.col(i)).sum().real();
    s.values[i] = 1.0 / std::max(denom, kValueFloor);
  }
  s.peaks = pick_peaks(s.grid, s.values, k);
  return s;
}

double circular_difference(double a, double b) {
  return std::remainder(a - b, 1.0);
}

double rmse(const std::vector<RVec>& trial_estimates, const RVec& truth) {
  const int k = static_cast<int>(truth.size());
  if (k < 1) fail(ErrorCode::InvalidArgument, "empty truth vector");
  if (trial_estimates.empty())
    fail(ErrorCode::InvalidArgument, "no trials to score");
  RVec sq_sum = RVec::Zero(k);
  for (const RVec& est : trial_estimates) {
    if (est.size() != k)
      fail(ErrorCode::InvalidArgument, "trial estimate count mismatch");
    // Greedy nearest matching on the circle.
    std::vector<bool> truth_used(k, false), est_used(k, false);
    for (int pair = 0; pair < k; ++pair) {
      int bi = -1, bj = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        if (truth_used[i]) continue;
        for (int j = 0; j < k; ++j) {
          if (est_used[j]) continue;
          const double dist = std::abs(circular_difference(est[j], truth[i]));
          if (dist < best) {
            best = dist;
            bi = i;
            bj = j;
          }
        }
      }
      truth_used[bi] = true;
      est_used[bj] = true;
      const double err = circular_difference(est[bj], truth[bi]);
      sq_sum[bi] += err * err;
    }
  }
  const double trials = static_cast<double>(trial_estimates.size());
  double acc = 0.0;
  for (int i = 0; i < k; ++i) acc += std::sqrt(sq_sum[i] / trials);
  return acc / k;
}

void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& s) {
  char buf[64];
  os << "f,value\n";
  for (Eigen::Index i = 0; i < s.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g", s.grid[i], s.values[i]);
    os << buf << '\n';
  }
}

}  // namespace lrthcr
