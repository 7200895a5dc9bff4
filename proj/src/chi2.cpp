#include "chi2.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace lrthcr {

namespace {

constexpr int kMaxIter = 500;
const double kEps = std::numeric_limits<double>::epsilon();
const double kFpMin = std::numeric_limits<double>::min() / kEps;

// Series expansion of P(a, x), converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ++ap;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), converges fast for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0))
    fail(ErrorCode::InvalidArgument, "incomplete gamma requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_contfrac(a, x);
}

double chi2_upper_tail(int dof, double x) {
  if (dof < 1) fail(ErrorCode::InvalidArgument, "degrees of freedom must be >= 1");
  if (!(x >= 0.0)) fail(ErrorCode::InvalidArgument, "quantile argument must be >= 0");
  if (x == 0.0) return 1.0;
  const double a = 0.5 * dof;
  const double z = 0.5 * x;
  return z < a + 1.0 ? 1.0 - gamma_p_series(a, z) : gamma_q_contfrac(a, z);
}

double chi2_quantile(int dof, double p) {
  if (dof < 1) fail(ErrorCode::InvalidArgument, "degrees of freedom must be >= 1");
  if (!(p > 0.0) || !(p < 1.0))
    fail(ErrorCode::InvalidProbability, "deviation probability must lie in (0, 1)");

  // Bracket the root of Q(eta) = p, then bisect to machine precision.
  // Q decreases from 1 at zero, so [0, hi] brackets once Q(hi) <= p.
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  for (int i = 0; i < 2048 && chi2_upper_tail(dof, hi) > p; ++i) hi *= 2.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi2_upper_tail(dof, mid) > p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 2.0 * kEps * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace lrthcr
