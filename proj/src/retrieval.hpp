#pragma once

#include <ostream>
#include <vector>

#include "common.hpp"
#include "signal_model.hpp"

namespace lrthcr {

/// Pseudo-spectrum over the frequency grid (-1/2, 1/2] plus the k selected
/// peak locations (ascending).
struct SpectrumEstimate {
  RVec grid;
  RVec values;
  RVec peaks;
};

/// Pseudo-spectrum of the 2M x 2M augmented covariance with the doubled
/// manifold: for each grid frequency the steering pair blkdiag(a(f),
/// conj(a(f))) is scored by 1 / lambda_min of its 2x2 projection onto the
/// noise subspace (the phase-free formulation). k is the number of sources;
/// step is rounded so the grid divides the unit circle evenly. Throws
/// RetrievalFailure when fewer than k strict local maxima exist.
SpectrumEstimate nc_music_spectrum(const CMat& r_a, int k, double step = 1e-4);

/// Classic subspace spectrum of an M x M covariance with the plain manifold
/// a(f): value = 1 / (a^H E_n E_n^H a).
SpectrumEstimate music_spectrum(const CMat& t, int k, double step = 1e-4);

/// Doubled-manifold spectrum applied directly to a 2N x 2N compressed
/// augmented covariance; steering uses the compressed manifold J a(f).
SpectrumEstimate nc_music_spectrum_compressed(const CMat& r_z,
                                              const MeasurementDesign& design,
                                              int k, double step = 1e-4);

/// Signed wraparound difference a - b on the unit frequency circle.
double circular_difference(double a, double b);

/// Per-frequency root mean squared error across trials, averaged over the K
/// frequencies; trials are matched to the truth by nearest wraparound
/// distance. Every trial must carry exactly K estimates (failed trials are
/// excluded and accounted by the caller).
double rmse(const std::vector<RVec>& trial_estimates, const RVec& truth);

/// Two columns "f,value" for plotting.
void write_spectrum_csv(std::ostream& os, const SpectrumEstimate& s);

}  // namespace lrthcr
