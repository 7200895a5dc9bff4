#pragma once

#include <optional>
#include <ostream>

#include "common.hpp"
#include "signal_model.hpp"

namespace lrthcr {

/// Generators of the structured augmented covariance blocks.
///
/// toe holds u[-(M-1)] .. u[M-1] (entry m stored at index m + M - 1) with
/// conjugate symmetry u[-m] = conj(u[m]) (u[0] real), generating the
/// Hermitian Toeplitz block T(i,j) = u[i-j]. han holds v[0] .. v[2M-2],
/// generating the symmetric Hankel block H(i,j) = v[i+j] (0-based).
struct THParams {
  CVec toe;
  CVec han;

  int dim() const { return static_cast<int>(toe.size() + 1) / 2; }
  Complex toe_at(int m) const { return toe[m + dim() - 1]; }
  Complex han_at(int s) const { return han[s]; }

  static THParams zero(int m);
  /// Population generators of a scene: u[m] = sum_k r_k e^{j2pi m f_k},
  /// v[s] = sum_k r_k e^{j2phi_k} e^{j2pi s f_k}.
  static THParams from_scene(const HarmonicScene& scene, int m);
};

/// The 2M x 2M Hermitian matrix [T, H; conj(H), conj(T)].
struct AugmentedCovariance {
  CMat matrix;
  std::optional<THParams> params;  // present when assembled from generators
  int block_dim() const { return static_cast<int>(matrix.rows()) / 2; }
};

/// M x M Hermitian Toeplitz from a conjugate-symmetric generator of length
/// 2M-1. Rejects generators that break the symmetry.
CMat toeplitz_from(const CVec& u);

/// M x M symmetric Hankel from a generator of length 2M-1.
CMat hankel_from(const CVec& v);

AugmentedCovariance assemble_augmented(const THParams& p);

/// Orthogonal projection (Frobenius) of a Hermitian 2M x 2M matrix onto the
/// structured subspace: diagonal averaging of the Toeplitz blocks and
/// anti-diagonal averaging of the Hankel blocks, cross-block conjugate pairs
/// included. Input is symmetrized first; rejects inputs that are not
/// Hermitian within 1e-8 relative.
THParams project_structure(const CMat& g);

/// [R, C; conj(C), conj(R)] from sample moments.
CMat build_rz(const SampleMoments& m);

/// Column-major stack of a matrix.
CVec vec(const CMat& a);

/// Lower triangle including the diagonal, column-major: length N(N+1)/2.
CVec subvec(const CMat& c);

/// The 0/1 selection matrix U with subvec(C) = U vec(C).
RMat subvec_selection(int n);

/// q = [vec(R); subvec(C); conj(subvec(C))], length 2N^2 + N.
struct MomentVector {
  CVec q;
  int n = 0;
};
MomentVector build_qy(const CMat& r_y, const CMat& c_y);

/// J' R_a J'^H.
CMat compress(const AugmentedCovariance& r_a, const MeasurementDesign& design);

/// Count of eigenvalues above rel_tol times the largest.
int numerical_rank(const CMat& h, double rel_tol = 1e-8);

/// Debug dump, row-major, cells formatted "re+imj".
void write_matrix_csv(std::ostream& os, const CMat& a);

// Real coordinates over the structure subspace. Layout: u[0]; then
// (Re u[m], Im u[m]) for m = 1..M-1; then (Re v[s], Im v[s]) for
// s = 0..2M-2. The corresponding basis matrices are mutually orthogonal
// under Re<A,B>_F; structure_weights returns their squared norms.
int param_count(int m);
RVec pack_params(const THParams& p);
THParams unpack_params(const RVec& theta, int m);
/// k-th entry: Re<B_k, W>_F for Hermitian W.
RVec structure_adjoint(const CMat& w);
RVec structure_weights(int m);
/// tr(R(theta)) = structure_trace_coeff(M) * theta[0].
double structure_trace_coeff(int m);

}  // namespace lrthcr
