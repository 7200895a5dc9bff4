#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "chi2.hpp"
#include "errors.hpp"

namespace lrthcr {

namespace {

double re_inner(const CMat& a, const CMat& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

// Structure subspace driving the splitting: assembled dimension, real
// parameter count, orthogonal-basis squared norms, trace functional.
struct StructureOps {
  int n = 0;
  int count = 0;
  RVec weights;
  RVec trace_lin;
  std::function<CMat(const RVec&)> assemble;
  std::function<RVec(const CMat&)> adjoint;
};

StructureOps augmented_structure(int m) {
  StructureOps s;
  s.n = 2 * m;
  s.count = param_count(m);
  s.weights = structure_weights(m);
  s.trace_lin = RVec::Zero(s.count);
  s.trace_lin[0] = structure_trace_coeff(m);
  s.assemble = [m](const RVec& theta) {
    return assemble_augmented(unpack_params(theta, m)).matrix;
  };
  s.adjoint = [](const CMat& w) { return structure_adjoint(w); };
  return s;
}

StructureOps toeplitz_structure(int m) {
  StructureOps s;
  s.n = m;
  s.count = 2 * m - 1;
  s.weights.resize(s.count);
  s.weights[0] = m;
  for (int lag = 1; lag <= m - 1; ++lag) {
    s.weights[2 * lag - 1] = 2.0 * (m - lag);
    s.weights[2 * lag] = 2.0 * (m - lag);
  }
  s.trace_lin = RVec::Zero(s.count);
  s.trace_lin[0] = m;
  s.assemble = [m](const RVec& theta) {
    CVec u = CVec::Zero(2 * m - 1);
    u[m - 1] = theta[0];
    for (int lag = 1; lag <= m - 1; ++lag) {
      const Complex val(theta[2 * lag - 1], theta[2 * lag]);
      u[m - 1 + lag] = val;
      u[m - 1 - lag] = std::conj(val);
    }
    return toeplitz_from(u);
  };
  s.adjoint = [m](const CMat& w) {
    RVec g(2 * m - 1);
    for (int lag = 0; lag <= m - 1; ++lag) {
      Complex sum(0, 0);
      for (int j = 0; j + lag < m; ++j) sum += w(j + lag, j);
      if (lag == 0) {
        g[0] = sum.real();
      } else {
        g[2 * lag - 1] = 2.0 * sum.real();
        g[2 * lag] = 2.0 * sum.imag();
      }
    }
    return g;
  };
  return s;
}

// Quadratic data-fit term: fit(x) = x^T hess x - 2 lin.x + c0 (the full
// squared misfit). extra counts trailing free variables that take no part
// in the prox or trace terms.
struct FitModel {
  RMat hess;
  RVec lin;
  double c0 = 0.0;
  int extra = 0;
};

double fit_value(const FitModel& f, const RVec& x) {
  const double v = x.dot(f.hess * x) - 2.0 * f.lin.dot(x) + f.c0;
  return std::max(v, 0.0);
}

FitModel frobenius_fit(const StructureOps& s,
                       const std::function<CMat(const CMat&)>& compressfn,
                       const CMat& data) {
  std::vector<CMat> basis_img(s.count);
  RVec e = RVec::Zero(s.count);
  for (int k = 0; k < s.count; ++k) {
    e[k] = 1.0;
    basis_img[k] = compressfn(s.assemble(e));
    e[k] = 0.0;
  }
  FitModel f;
  f.extra = 0;
  f.hess.resize(s.count, s.count);
  f.lin.resize(s.count);
  for (int k = 0; k < s.count; ++k) {
    f.lin[k] = re_inner(basis_img[k], data);
    for (int l = 0; l <= k; ++l) {
      const double v = re_inner(basis_img[k], basis_img[l]);
      f.hess(k, l) = v;
      f.hess(l, k) = v;
    }
  }
  f.c0 = data.squaredNorm();
  return f;
}

struct AdmmState {
  CMat z, w;
  bool valid = false;
};

struct AdmmOut {
  RVec x;
  CMat r;
  int iterations = 0;
  double rp = 0.0, rd = 0.0;
  bool converged = false;
};

// Splitting on R(theta) = Z: exact structured least squares in theta, PSD
// eigenvalue clipping on Z, scaled dual ascent. The normal-equation matrix
// is tau-independent, so warm restarts across trace weights refactor nothing.
AdmmOut admm_solve(const StructureOps& s, const FitModel& f, double tau,
                   const SolverConfig& cfg, AdmmState* state) {
  const int total = s.count + f.extra;
  RMat kmat = f.hess;
  for (int k = 0; k < s.count; ++k) kmat(k, k) += cfg.rho * s.weights[k];
  kmat.diagonal().array() += 1e-12 * std::max(1.0, kmat.diagonal().maxCoeff());
  Eigen::LDLT<RMat> fact(kmat);
  if (fact.info() != Eigen::Success)
    fail(ErrorCode::InvalidInput, "normal equations could not be factored");

  CMat z = (state && state->valid) ? state->z : CMat::Zero(s.n, s.n);
  CMat w = (state && state->valid) ? state->w : CMat::Zero(s.n, s.n);

  AdmmOut out;
  RVec x(total);
  CMat r;
  int done_iters = cfg.max_iter;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    RVec rhs = f.lin;
    rhs.head(s.count) += cfg.rho * s.adjoint(z - w) - tau * s.trace_lin;
    x = fact.solve(rhs);
    r = s.assemble(x.head(s.count));

    Eigen::SelfAdjointEigenSolver<CMat> eig(hermitize(r + w));
    const RVec lam = eig.eigenvalues().cwiseMax(0.0);
    CMat znew = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();

    const double rd_abs = cfg.rho * (znew - z).norm();
    z.swap(znew);
    w += r - z;

    const double rp_abs = (r - z).norm();
    out.rp = rp_abs / std::max({r.norm(), z.norm(), 1e-30});
    out.rd = rd_abs / std::max(cfg.rho * w.norm(), 1e-30);
    if (out.rp <= cfg.tol_primal && out.rd <= cfg.tol_dual) {
      out.converged = true;
      done_iters = it;
      break;
    }
  }
  out.iterations = done_iters;
  out.x = std::move(x);
  out.r = std::move(r);
  if (state) {
    state->z = std::move(z);
    state->w = std::move(w);
    state->valid = true;
  }
  return out;
}

void check_hermitian_input(const CMat& a, const char* what) {
  if (a.rows() != a.cols()) fail(ErrorCode::InvalidDimension, std::string(what) + " must be square");
  if ((a - a.adjoint()).norm() > 1e-8 * std::max(1.0, a.norm()))
    fail(ErrorCode::InvalidInput, std::string(what) + " is not Hermitian within tolerance");
}

void warn_if_incomplete_ruler(const MeasurementDesign& d) {
  if (d.is_selection() && !d.augmented_complete_ruler())
    std::fprintf(stderr,
                 "lrthcr: warning: selection set is not a complete sparse ruler; "
                 "structured recovery may be unidentifiable\n");
}

double trace_scale(const CMat& d) {
  const double a = std::abs(d.trace().real()) / static_cast<double>(d.rows());
  return a > 1e-300 ? a : 1.0;
}

// Shared driver of the Frobenius-fit modes.
SolveReport solve_frobenius(const CMat& data, const MeasurementDesign& design,
                            double tau, const SolverConfig& cfg) {
  const int m = design.full_dim();
  const double alpha = trace_scale(data);
  StructureOps s = augmented_structure(m);
  const FitModel f = frobenius_fit(
      s, [&design](const CMat& x) { return design.compress_augmented(x); },
      CMat(data / alpha));
  AdmmOut o = admm_solve(s, f, tau / alpha, cfg, nullptr);

  SolveReport rep;
  rep.estimate = assemble_augmented(unpack_params(RVec(alpha * o.x), m));
  rep.iterations = o.iterations;
  rep.primal_residual = o.rp;
  rep.dual_residual = o.rd;
  rep.converged = o.converged;
  rep.tau_used = tau;
  rep.fit_residual = (data - design.compress_augmented(rep.estimate.matrix)).norm();
  rep.objective = tau * rep.estimate.matrix.trace().real() +
                  0.5 * rep.fit_residual * rep.fit_residual;
  return rep;
}

// Whitened moment-fit model of the constrained mode, in trace-normalized
// data units. fit_true = gamma * fit_scaled; R = alpha * R(theta).
struct ConstrainedModel {
  StructureOps s;
  FitModel fit;
  double alpha = 1.0;
  double gamma = 1.0;
};

ConstrainedModel build_constrained_model(const SampleMoments& m,
                                         const MeasurementDesign& design,
                                         const ResidualModel& rm,
                                         const SolverConfig& cfg) {
  const int big_m = design.full_dim();
  const int n = design.compressed_dim();
  const int d = 2 * n * n + n;
  if (m.cov.rows() != n)
    fail(ErrorCode::InvalidDimension, "moments do not match the design");
  if (rm.whitener.rows() != d || rm.whitener.cols() != d)
    fail(ErrorCode::InvalidDimension, "residual model does not match the design");

  ConstrainedModel model;
  model.alpha = trace_scale(build_rz(m));
  model.s = augmented_structure(big_m);

  const CVec q = build_qy(CMat(m.cov / model.alpha), CMat(m.pcov / model.alpha)).q;
  const CMat wmat = model.alpha * rm.whitener;

  CMat fm(d, model.s.count);
  RVec e = RVec::Zero(model.s.count);
  for (int k = 0; k < model.s.count; ++k) {
    e[k] = 1.0;
    const CMat blocks = model.s.assemble(e);
    e[k] = 0.0;
    const CMat t = blocks.topLeftCorner(big_m, big_m);
    const CMat h = blocks.topRightCorner(big_m, big_m);
    const CVec ry = vec(design.compress_plain(t));
    const CVec cy = subvec(design.compress_plain_t(h));
    fm.col(k) << ry, cy, cy.conjugate();
  }
  CMat g = CMat::Zero(d, n);  // per-sensor noise enters the covariance diagonal
  for (int i = 0; i < n; ++i) g(i + i * n, i) = 1.0;

  const CMat wf = wmat * fm;
  const CMat wg = wmat * g;
  const CVec wq = wmat * q;

  const int total = model.s.count + n;
  FitModel f;
  f.extra = n;
  f.hess.resize(total, total);
  f.hess.topLeftCorner(model.s.count, model.s.count) = (wf.adjoint() * wf).real();
  f.hess.topRightCorner(model.s.count, n) = (wf.adjoint() * wg).real();
  f.hess.bottomLeftCorner(n, model.s.count) =
      f.hess.topRightCorner(model.s.count, n).transpose();
  f.hess.bottomRightCorner(n, n) = (wg.adjoint() * wg).real();
  f.lin.resize(total);
  f.lin.head(model.s.count) = (wf.adjoint() * wq).real();
  f.lin.tail(n) = (wg.adjoint() * wq).real();
  f.c0 = wq.squaredNorm();

  const double prox_trace = cfg.rho * model.s.weights.sum();
  model.gamma = f.hess.topLeftCorner(model.s.count, model.s.count).trace() /
                std::max(prox_trace, 1e-300);
  if (!(model.gamma > 1e-300)) model.gamma = 1.0;
  f.hess /= model.gamma;
  f.lin /= model.gamma;
  f.c0 /= model.gamma;
  model.fit = std::move(f);
  return model;
}

SolveReport constrained_report(const ConstrainedModel& model, const AdmmOut& o,
                               double tau_internal, int total_iterations) {
  const int m = model.s.n / 2;
  SolveReport rep;
  rep.estimate = assemble_augmented(
      unpack_params(RVec(model.alpha * o.x.head(model.s.count)), m));
  rep.iterations = total_iterations;
  rep.primal_residual = o.rp;
  rep.dual_residual = o.rd;
  rep.converged = o.converged;
  rep.fit_residual = model.gamma * fit_value(model.fit, o.x);
  rep.tau_used = model.gamma * tau_internal / model.alpha;
  rep.objective = rep.estimate.matrix.trace().real();
  return rep;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidArgument, "rho must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
    fail(ErrorCode::InvalidArgument, "tolerances must be positive");
  if (max_iter < 1) fail(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  if (bisect_iters < 1) fail(ErrorCode::InvalidArgument, "bisect_iters must be >= 1");
  if (!(p_deviation > 0.0) || !(p_deviation < 1.0))
    fail(ErrorCode::InvalidProbability, "deviation probability must lie in (0, 1)");
}

double smallest_eig(const CMat& h) {
  if (h.rows() != h.cols()) fail(ErrorCode::InvalidDimension, "input must be square");
  Eigen::SelfAdjointEigenSolver<CMat> eig(hermitize(h));
  return eig.eigenvalues()(0);
}

double theorem1_tau(const CMat& rz_hat, int snapshots, double c1, double c2) {
  if (snapshots < 2) fail(ErrorCode::InsufficientSnapshots, "tau rule needs L >= 2");
  check_hermitian_input(rz_hat, "augmented covariance");
  const double sig2 = smallest_eig(rz_hat);
  const double tr_signal = rz_hat.trace().real() - rz_hat.rows() * sig2;
  const double l = static_cast<double>(snapshots);
  const double tau = (c1 * tr_signal + c2 * sig2) * std::sqrt(std::log(l) / l);
  return std::max(tau, 1e-300);
}

SolveReport lrthcr_regularized(const CMat& rz_hat, const MeasurementDesign& design,
                               double tau, const SolverConfig& cfg) {
  cfg.validate();
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  check_hermitian_input(rz_hat, "augmented covariance");
  if (rz_hat.rows() != 2 * design.compressed_dim())
    fail(ErrorCode::InvalidDimension, "data does not match the design");
  warn_if_incomplete_ruler(design);
  return solve_frobenius(hermitize(rz_hat), design, tau, cfg);
}

SolveReport lrthcr_noise_plugged(const CMat& rz_hat, const MeasurementDesign& design,
                                 double tau, const SolverConfig& cfg) {
  cfg.validate();
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  check_hermitian_input(rz_hat, "augmented covariance");
  const int n2 = 2 * design.compressed_dim();
  if (rz_hat.rows() != n2)
    fail(ErrorCode::InvalidDimension, "data does not match the design");
  warn_if_incomplete_ruler(design);
  const double sig2 = smallest_eig(rz_hat);
  const CMat shifted = hermitize(rz_hat) - sig2 * CMat::Identity(n2, n2);
  return solve_frobenius(shifted, design, tau, cfg);
}

SolveReport lrthcr_constrained_at_tau(const SampleMoments& m,
                                      const MeasurementDesign& design,
                                      const ResidualModel& rm, double tau,
                                      const SolverConfig& cfg) {
  cfg.validate();
  if (!(tau >= 0.0)) fail(ErrorCode::InvalidArgument, "tau must be nonnegative");
  warn_if_incomplete_ruler(design);
  ConstrainedModel model = build_constrained_model(m, design, rm, cfg);
  const double tau_internal = tau * model.alpha / model.gamma;
  AdmmOut o = admm_solve(model.s, model.fit, tau_internal, cfg, nullptr);
  SolveReport rep = constrained_report(model, o, tau_internal, o.iterations);
  rep.objective = tau * rep.estimate.matrix.trace().real() + 0.5 * rep.fit_residual;
  return rep;
}

SolveReport lrthcr_constrained(const SampleMoments& m,
                               const MeasurementDesign& design,
                               const ResidualModel& rm, const SolverConfig& cfg) {
  cfg.validate();
  warn_if_incomplete_ruler(design);
  const int n = design.compressed_dim();
  const double eta =
      rm.eta > 0.0 ? rm.eta : chi2_quantile(2 * n * n + n, cfg.p_deviation);
  const double eta_lo = eta * (1.0 - 1e-3);

  ConstrainedModel model = build_constrained_model(m, design, rm, cfg);
  AdmmState state;
  int total_iters = 0;
  auto solve_at = [&](double tau_internal) {
    AdmmOut o = admm_solve(model.s, model.fit, tau_internal, cfg, &state);
    total_iters += o.iterations;
    return o;
  };

  AdmmOut o = solve_at(0.0);
  double fit = model.gamma * fit_value(model.fit, o.x);
  if (fit > eta * (1.0 + 1e-9))
    fail(ErrorCode::InfeasibleConstraint,
         "fitting-error threshold unreachable: least-squares misfit exceeds eta");
  if (fit >= eta_lo) return constrained_report(model, o, 0.0, total_iters);

  // Bracket the window on the tau axis, then bisect. The misfit is
  // nondecreasing in tau.
  double lo = 0.0;
  double hi = 1.0;
  o = solve_at(hi);
  fit = model.gamma * fit_value(model.fit, o.x);
  int expansions = 0;
  while (fit < eta_lo && expansions < 60) {
    lo = hi;
    hi *= 4.0;
    o = solve_at(hi);
    fit = model.gamma * fit_value(model.fit, o.x);
    ++expansions;
  }
  if (fit < eta_lo) {
    // Misfit saturates below the threshold: the constraint never binds and
    // the minimum-trace solution is the (vanishing) large-tau limit.
    return constrained_report(model, o, hi, total_iters);
  }
  if (fit <= eta) return constrained_report(model, o, hi, total_iters);

  for (int i = 0; i < cfg.bisect_iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    o = solve_at(mid);
    fit = model.gamma * fit_value(model.fit, o.x);
    if (fit > eta)
      hi = mid;
    else if (fit < eta_lo)
      lo = mid;
    else
      return constrained_report(model, o, mid, total_iters);
  }
  fail(ErrorCode::NonConvergence,
       "fitting-error window not bracketed within bisect_iters");
}

ToeplitzFit cmra_toeplitz_fit(const CMat& data, const MeasurementDesign& design,
                              double tau, const SolverConfig& cfg) {
  cfg.validate();
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  check_hermitian_input(data, "covariance data");
  if (data.rows() != design.compressed_dim())
    fail(ErrorCode::InvalidDimension, "data does not match the design");
  warn_if_incomplete_ruler(design);

  const double alpha = trace_scale(data);
  StructureOps s = toeplitz_structure(design.full_dim());
  const FitModel f = frobenius_fit(
      s, [&design](const CMat& x) { return design.compress_plain(x); },
      CMat(hermitize(data) / alpha));
  AdmmOut o = admm_solve(s, f, tau / alpha, cfg, nullptr);

  ToeplitzFit fit;
  fit.matrix = alpha * s.assemble(o.x);
  fit.iterations = o.iterations;
  fit.primal_residual = o.rp;
  fit.dual_residual = o.rd;
  fit.converged = o.converged;
  fit.tau_used = tau;
  fit.fit_residual = (data - design.compress_plain(fit.matrix)).norm();
  fit.objective =
      tau * fit.matrix.trace().real() + 0.5 * fit.fit_residual * fit.fit_residual;
  return fit;
}

}  // namespace lrthcr
