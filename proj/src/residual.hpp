#pragma once

#include "common.hpp"
#include "signal_model.hpp"

namespace lrthcr {

/// Second-order model of the sample moment-vector error q_hat - q.
///
/// r_q is its Hermitian PSD covariance (size 2N^2+N), whitener the
/// pseudo-inverse square root of r_q (eigenvalues below 1e-12 of the largest
/// are inverted to zero), and eta the chi-squared fitting-error threshold.
struct ResidualModel {
  CMat r_q;
  CMat whitener;
  double eta = 0.0;
};

/// Plug-in estimate of the moment-error covariance from the Gaussian
/// fourth-moment identity: with Rz the augmented sample covariance and
/// Cz = Rz P (P the block swap), every entry of q_hat is an entry of Rz and
///   Cov(Rz(i,j), Rz(k,l)) = (1/L) [Rz(i,k) conj(Rz(j,l)) + Cz(i,l) conj(Cz(j,k))].
/// Requires at least two snapshots. eta is filled from the upper chi-squared
/// quantile at deviation probability p_deviation with 2N^2+N degrees of
/// freedom.
ResidualModel estimate_rq(const SampleMoments& m, double p_deviation = 0.01);

}  // namespace lrthcr
