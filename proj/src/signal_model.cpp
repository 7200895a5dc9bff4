#include "signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "errors.hpp"
#include "rng.hpp"

namespace lrthcr {

void HarmonicScene::validate() const {
  const auto k = frequencies.size();
  if (phases.size() != k || powers.size() != k)
    fail(ErrorCode::InvalidArgument, "scene lists must share length");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(frequencies[i]) || frequencies[i] <= -0.5 || frequencies[i] > 0.5)
      fail(ErrorCode::InvalidArgument, "frequency outside (-1/2, 1/2]");
    if (!std::isfinite(phases[i]))
      fail(ErrorCode::InvalidArgument, "phase not finite");
    if (!std::isfinite(powers[i]) || powers[i] <= 0.0)
      fail(ErrorCode::InvalidArgument, "source power must be positive");
    for (Eigen::Index l = 0; l < i; ++l)
      if (frequencies[i] == frequencies[l])
        fail(ErrorCode::InvalidArgument, "frequencies must be pairwise distinct");
  }
}

HarmonicScene HarmonicScene::make(RVec f, RVec phi, RVec r) {
  HarmonicScene scene{std::move(f), std::move(phi), std::move(r)};
  scene.validate();
  return scene;
}

MeasurementDesign MeasurementDesign::selection(int full_dim, std::vector<int> omega) {
  if (full_dim < 1) fail(ErrorCode::InvalidDimension, "full_dim must be >= 1");
  if (omega.empty()) fail(ErrorCode::InvalidArgument, "empty selection set");
  if (static_cast<int>(omega.size()) > full_dim)
    fail(ErrorCode::InvalidDimension, "selection larger than full dimension");
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] < 1 || omega[i] > full_dim)
      fail(ErrorCode::InvalidArgument, "selection index out of range");
    if (i > 0 && omega[i] <= omega[i - 1])
      fail(ErrorCode::InvalidArgument, "selection indices must be strictly increasing");
  }
  MeasurementDesign d;
  d.full_dim_ = full_dim;
  d.is_selection_ = true;
  d.omega_ = std::move(omega);
  const int n = static_cast<int>(d.omega_.size());
  d.j_ = CMat::Zero(n, full_dim);
  for (int i = 0; i < n; ++i) d.j_(i, d.omega_[i] - 1) = 1.0;
  return d;
}

MeasurementDesign MeasurementDesign::dense(CMat j) {
  if (j.rows() < 1 || j.cols() < 1)
    fail(ErrorCode::InvalidDimension, "measurement matrix must be nonempty");
  if (j.rows() > j.cols())
    fail(ErrorCode::InvalidDimension, "compressed dimension exceeds full dimension");
  MeasurementDesign d;
  d.full_dim_ = static_cast<int>(j.cols());
  d.is_selection_ = false;
  d.j_ = std::move(j);
  return d;
}

CMat MeasurementDesign::j_augmented() const {
  const int n = compressed_dim();
  const int m = full_dim_;
  CMat jp = CMat::Zero(2 * n, 2 * m);
  jp.topLeftCorner(n, m) = j_;
  jp.bottomRightCorner(n, m) = j_.conjugate();
  return jp;
}

std::vector<int> MeasurementDesign::omega_augmented() const {
  std::vector<int> out(omega_);
  out.reserve(2 * omega_.size());
  for (int w : omega_) out.push_back(w + full_dim_);
  return out;
}

CMat MeasurementDesign::compress_augmented(const CMat& x) const {
  const int m2 = 2 * full_dim_;
  if (x.rows() != m2 || x.cols() != m2)
    fail(ErrorCode::InvalidDimension, "augmented input must be 2M x 2M");
  if (is_selection_) {
    const auto idx = omega_augmented();
    const int n2 = static_cast<int>(idx.size());
    CMat out(n2, n2);
    for (int r = 0; r < n2; ++r)
      for (int c = 0; c < n2; ++c) out(r, c) = x(idx[r] - 1, idx[c] - 1);
    return out;
  }
  const CMat jp = j_augmented();
  return jp * x * jp.adjoint();
}

CMat MeasurementDesign::compress_plain(const CMat& x) const {
  if (x.rows() != full_dim_ || x.cols() != full_dim_)
    fail(ErrorCode::InvalidDimension, "input must be M x M");
  if (is_selection_) {
    const int n = compressed_dim();
    CMat out(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out(r, c) = x(omega_[r] - 1, omega_[c] - 1);
    return out;
  }
  return j_ * x * j_.adjoint();
}

CMat MeasurementDesign::compress_plain_t(const CMat& x) const {
  if (x.rows() != full_dim_ || x.cols() != full_dim_)
    fail(ErrorCode::InvalidDimension, "input must be M x M");
  if (is_selection_) return compress_plain(x);
  return j_ * x * j_.transpose();
}

bool MeasurementDesign::augmented_complete_ruler() const {
  if (!is_selection_) return true;
  const auto idx = omega_augmented();
  std::set<int> lags;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) lags.insert(idx[a] - idx[b]);
  for (int lag = 0; lag < 2 * full_dim_; ++lag)
    if (!lags.count(lag)) return false;
  return true;
}

CVec steering_vector(double f, int m) {
  if (m < 1) fail(ErrorCode::InvalidDimension, "steering vector length must be >= 1");
  CVec a(m);
  for (int k = 0; k < m; ++k) a[k] = std::polar(1.0, kTwoPi * k * f);
  return a;
}

CMat manifold_matrix(const HarmonicScene& scene, int m) {
  const int k = scene.source_count();
  CMat a(m, k);
  for (int i = 0; i < k; ++i) a.col(i) = steering_vector(scene.frequencies[i], m);
  return a;
}

SnapshotBatch synthesize_snapshots(const HarmonicScene& scene,
                                   const MeasurementDesign& design, int snapshots,
                                   double noise_var, std::uint64_t seed,
                                   std::uint64_t stream) {
  scene.validate();
  if (snapshots < 1) fail(ErrorCode::InvalidArgument, "snapshot count must be >= 1");
  if (!(noise_var >= 0.0)) fail(ErrorCode::InvalidArgument, "noise variance must be >= 0");

  const int n = design.compressed_dim();
  const int k = scene.source_count();

  // Compressed source mixing matrix J A diag(e^{j phi} sqrt(r)).
  CMat mix = design.j() * manifold_matrix(scene, design.full_dim());
  for (int i = 0; i < k; ++i)
    mix.col(i) *= std::polar(std::sqrt(scene.powers[i]), scene.phases[i]);

  Rng rng(seed, stream);
  SnapshotBatch batch;
  batch.data.resize(n, snapshots);
  batch.seed = seed;
  batch.stream = stream;
  CVec amp(k);
  for (int t = 0; t < snapshots; ++t) {
    for (int i = 0; i < k; ++i) amp[i] = rng.normal();
    CVec y = k > 0 ? CVec(mix * amp) : CVec(CVec::Zero(n));
    if (noise_var > 0.0)
      for (int r = 0; r < n; ++r) y[r] += rng.circular_normal(noise_var);
    batch.data.col(t) = y;
  }
  return batch;
}

SampleMoments sample_moments(const SnapshotBatch& batch) {
  const int l = batch.snapshot_count();
  if (l < 1) fail(ErrorCode::InvalidArgument, "empty snapshot batch");
  const double inv = 1.0 / l;
  CMat cov = inv * (batch.data * batch.data.adjoint());
  CMat pcov = inv * (batch.data * batch.data.transpose());
  return SampleMoments{hermitize(cov), symmetrize(pcov), l};
}

PopulationMoments population_moments(const HarmonicScene& scene,
                                     const MeasurementDesign& design,
                                     double noise_var) {
  scene.validate();
  if (!(noise_var >= 0.0)) fail(ErrorCode::InvalidArgument, "noise variance must be >= 0");
  const int m = design.full_dim();
  const int n = design.compressed_dim();
  const int k = scene.source_count();

  CMat rx = CMat::Zero(m, m);
  CMat cx = CMat::Zero(m, m);
  if (k > 0) {
    const CMat a = manifold_matrix(scene, m);
    CVec dr(k), dc(k);
    for (int i = 0; i < k; ++i) {
      dr[i] = scene.powers[i];
      dc[i] = scene.powers[i] * std::polar(1.0, 2.0 * scene.phases[i]);
    }
    rx = a * dr.asDiagonal() * a.adjoint();
    cx = a * dc.asDiagonal() * a.transpose();
  }
  PopulationMoments pop;
  pop.cov = design.compress_plain(rx) + noise_var * CMat::Identity(n, n);
  pop.pcov = design.compress_plain_t(cx);
  pop.cov = hermitize(pop.cov);
  pop.pcov = symmetrize(pop.pcov);
  return pop;
}

SampleMoments as_moments(const PopulationMoments& pop, int nominal_snapshots) {
  return SampleMoments{pop.cov, pop.pcov, nominal_snapshots};
}

}  // namespace lrthcr
