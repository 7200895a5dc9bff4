#pragma once

#include "common.hpp"
#include "residual.hpp"
#include "signal_model.hpp"
#include "structured.hpp"

namespace lrthcr {

enum class SolverMode { Regularized, NoisePlugged, Constrained };

struct SolverConfig {
  SolverMode mode = SolverMode::Constrained;
  /// Trace weight for Regularized / NoisePlugged; values <= 0 mean "caller
  /// should pick one" (see theorem1_tau).
  double tau = 1.0;
  /// Constants of the theorem1_tau rule.
  double c1 = 1.0;
  double c2 = 1.0;
  /// Deviation probability of the fitting-error constraint (Constrained).
  double p_deviation = 0.01;
  double rho = 1.0;
  int max_iter = 2000;
  double tol_primal = 1e-7;  // relative
  double tol_dual = 1e-7;    // relative
  int bisect_iters = 40;

  void validate() const;
};

struct SolveReport {
  AugmentedCovariance estimate;
  int iterations = 0;
  double primal_residual = 0.0;  // relative, compared against tol_primal
  double dual_residual = 0.0;    // relative, compared against tol_dual
  /// tau tr(R) + 1/2 |data - compressed(R)|_F^2 in the regularized modes;
  /// tr(R) in the constrained mode.
  double objective = 0.0;
  /// Frobenius data misfit |data - compressed(R)|_F in the regularized
  /// modes; squared whitened moment misfit (the quantity compared against
  /// eta) in the constrained mode.
  double fit_residual = 0.0;
  double tau_used = 0.0;
  bool converged = false;
};

/// Result of the Toeplitz-only covariance fit used by the circular baseline.
struct ToeplitzFit {
  CMat matrix;  // M x M Hermitian Toeplitz PSD
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double fit_residual = 0.0;
  double tau_used = 0.0;
  bool converged = false;
};

/// Minimum eigenvalue of a Hermitian matrix.
double smallest_eig(const CMat& h);

/// Trace-weight rule tau = (c1 tr(Rz - sig2 I) + c2 sig2) sqrt(ln L / L)
/// with sig2 the smallest eigenvalue of rz_hat. Requires L >= 2.
double theorem1_tau(const CMat& rz_hat, int snapshots, double c1 = 1.0,
                    double c2 = 1.0);

/// min tau tr(R) + 1/2 |rz_hat - J' R J'^H|_F^2 over structured PSD R,
/// solved by operator splitting: exact structured least squares, PSD
/// eigenvalue clipping, dual ascent. Returns converged=false (not an error)
/// when max_iter is hit.
SolveReport lrthcr_regularized(const CMat& rz_hat, const MeasurementDesign& design,
                               double tau, const SolverConfig& cfg = {});

/// Same program with the data shifted by the plugged noise floor:
/// rz_hat - sig2_hat I, sig2_hat = smallest_eig(rz_hat).
SolveReport lrthcr_noise_plugged(const CMat& rz_hat, const MeasurementDesign& design,
                                 double tau, const SolverConfig& cfg = {});

/// Inner problem of the constrained mode at a fixed trace weight:
/// min tau tr(R) + 1/2 |W (q_hat - q(R, sigma^2))|^2 with the per-sensor
/// noise vector eliminated in closed form. fit_residual reports the full
/// squared whitened misfit.
SolveReport lrthcr_constrained_at_tau(const SampleMoments& m,
                                      const MeasurementDesign& design,
                                      const ResidualModel& rm, double tau,
                                      const SolverConfig& cfg = {});

/// min tr(R) subject to the whitened moment misfit <= eta, by bisection on
/// the trace weight of the inner problem; accepts when the misfit lands in
/// [eta (1 - 1e-3), eta]. Throws InfeasibleConstraint when even the pure
/// least-squares fit exceeds eta, NonConvergence when the window cannot be
/// bracketed within bisect_iters.
SolveReport lrthcr_constrained(const SampleMoments& m,
                               const MeasurementDesign& design,
                               const ResidualModel& rm,
                               const SolverConfig& cfg = {});

/// min tau tr(T) + 1/2 |data - J T J^H|_F^2 over Hermitian Toeplitz PSD T
/// (the covariance-only baseline kernel; data is typically the sample
/// covariance minus its smallest eigenvalue).
ToeplitzFit cmra_toeplitz_fit(const CMat& data, const MeasurementDesign& design,
                              double tau, const SolverConfig& cfg = {});

}  // namespace lrthcr
