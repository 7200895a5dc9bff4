#pragma once

#include <cstdint>
#include <vector>

#include "common.hpp"

namespace lrthcr {

/// A mixture of K uncorrelated sources with fixed deterministic phases.
///
/// frequencies: digital frequencies in (-1/2, 1/2] (cycles/sample), pairwise
/// distinct. phases: the per-source phase offsets, constant across snapshots
/// (canonically in (0, pi]). powers: r_i = E{s_i'^2} > 0. K may be zero
/// (noise-only data).
struct HarmonicScene {
  RVec frequencies;
  RVec phases;
  RVec powers;

  int source_count() const { return static_cast<int>(frequencies.size()); }
  void validate() const;

  static HarmonicScene make(RVec f, RVec phi, RVec r);
};

/// Linear compression y = J x with N <= M.
///
/// Selection mode keeps the rows indexed by Omega (1-based, strictly
/// increasing) of the identity; general mode carries a dense complex J.
class MeasurementDesign {
 public:
  static MeasurementDesign selection(int full_dim, std::vector<int> omega);
  static MeasurementDesign dense(CMat j);

  int full_dim() const { return full_dim_; }
  int compressed_dim() const { return static_cast<int>(j_.rows()); }
  bool is_selection() const { return is_selection_; }
  const std::vector<int>& omega() const { return omega_; }
  const CMat& j() const { return j_; }

  /// blkdiag(J, conj(J)), 2N x 2M.
  CMat j_augmented() const;
  /// Omega u (Omega + M), 1-based indices into the augmented dimension 2M.
  std::vector<int> omega_augmented() const;

  /// J' X J'^H for 2M x 2M input (direct subsampling in selection mode).
  CMat compress_augmented(const CMat& x) const;
  /// J X J^H for M x M input.
  CMat compress_plain(const CMat& x) const;
  /// J X J^T for M x M input (pseudo-covariance transport).
  CMat compress_plain_t(const CMat& x) const;

  /// True when the pairwise differences of omega_augmented() cover every lag
  /// 0 .. 2M-1, the identifiability condition for recovering the structured
  /// augmented covariance from its subsampled entries. Dense designs return
  /// true (the check is meaningful for selection maps only).
  bool augmented_complete_ruler() const;

 private:
  MeasurementDesign() = default;
  int full_dim_ = 0;
  bool is_selection_ = false;
  std::vector<int> omega_;  // 1-based
  CMat j_;                  // N x M, materialized in both modes
};

struct SnapshotBatch {
  CMat data;  // N x L, one snapshot per column
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int snapshot_count() const { return static_cast<int>(data.cols()); }
};

struct SampleMoments {
  CMat cov;   // Hermitian N x N
  CMat pcov;  // complex symmetric N x N
  int snapshot_count = 0;
};

struct PopulationMoments {
  CMat cov;
  CMat pcov;
};

/// a(f) = [1, e^{j2pi f}, ..., e^{j2pi(m-1)f}]^T.
CVec steering_vector(double f, int m);

/// Columns a(f_i) for every scene frequency.
CMat manifold_matrix(const HarmonicScene& scene, int m);

/// y(t) = J sum_i s_i'(t) e^{j phi_i} a(f_i) + n(t) with s_i'(t) ~ N(0, r_i)
/// real and n(t) circular complex Gaussian of variance noise_var per sensor.
/// Deterministic given (seed, stream).
SnapshotBatch synthesize_snapshots(const HarmonicScene& scene,
                                   const MeasurementDesign& design, int snapshots,
                                   double noise_var, std::uint64_t seed,
                                   std::uint64_t stream = 0);

/// (1/L) sum y y^H (exactly Hermitian) and (1/L) sum y y^T (exactly symmetric).
SampleMoments sample_moments(const SnapshotBatch& batch);

/// Exact moments: R_y = J A diag(r) A^H J^H + noise_var I,
/// C_y = J A diag(r e^{j2phi}) A^T J^T.
PopulationMoments population_moments(const HarmonicScene& scene,
                                     const MeasurementDesign& design,
                                     double noise_var);

/// Wraps exact moments in the sample-moment container (the nominal snapshot
/// count drives 1/L scalings downstream).
SampleMoments as_moments(const PopulationMoments& pop, int nominal_snapshots);

}  // namespace lrthcr
