#pragma once

namespace lrthcr {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Upper-tail probability Prob{chi^2_dof > x}.
double chi2_upper_tail(int dof, double x);

/// Upper-tail quantile: the eta with Prob{chi^2_dof > eta} = p, accurate to
/// better than 1e-10 relative. p must lie strictly inside (0, 1).
double chi2_quantile(int dof, double p);

}  // namespace lrthcr
