#include "structured.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"

namespace lrthcr {

namespace {

int generator_dim(const CVec& g) {
  const auto len = g.size();
  if (len < 1 || len % 2 == 0)
    fail(ErrorCode::InvalidGenerator, "generator length must be odd (2M-1)");
  return static_cast<int>(len + 1) / 2;
}

}  // namespace

THParams THParams::zero(int m) {
  if (m < 1) fail(ErrorCode::InvalidDimension, "dimension must be >= 1");
  return THParams{CVec::Zero(2 * m - 1), CVec::Zero(2 * m - 1)};
}

THParams THParams::from_scene(const HarmonicScene& scene, int m) {
  scene.validate();
  THParams p = THParams::zero(m);
  for (int i = 0; i < scene.source_count(); ++i) {
    const double f = scene.frequencies[i];
    const double r = scene.powers[i];
    const Complex nc = std::polar(r, 2.0 * scene.phases[i]);
    for (int lag = -(m - 1); lag <= m - 1; ++lag)
      p.toe[lag + m - 1] += std::polar(r, kTwoPi * lag * f);
    for (int s = 0; s <= 2 * m - 2; ++s)
      p.han[s] += nc * std::polar(1.0, kTwoPi * s * f);
  }
  p.toe[m - 1] = Complex(p.toe[m - 1].real(), 0.0);
  return p;
}

CMat toeplitz_from(const CVec& u) {
  const int m = generator_dim(u);
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  if (std::abs(u[m - 1].imag()) > 1e-10 * scale)
    fail(ErrorCode::InvalidGenerator, "zero-lag entry must be real");
  for (int lag = 1; lag <= m - 1; ++lag)
    if (std::abs(u[m - 1 - lag] - std::conj(u[m - 1 + lag])) > 1e-10 * scale)
      fail(ErrorCode::InvalidGenerator, "generator breaks conjugate symmetry");
  CMat t(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) t(i, j) = u[i - j + m - 1];
  return t;
}

CMat hankel_from(const CVec& v) {
  const int m = generator_dim(v);
  CMat h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = v[i + j];
  return h;
}

AugmentedCovariance assemble_augmented(const THParams& p) {
  const int m = p.dim();
  if (p.han.size() != p.toe.size())
    fail(ErrorCode::InvalidGenerator, "generator lengths differ");
  const CMat t = toeplitz_from(p.toe);
  const CMat h = hankel_from(p.han);
  AugmentedCovariance out;
  out.matrix.resize(2 * m, 2 * m);
  out.matrix.topLeftCorner(m, m) = t;
  out.matrix.topRightCorner(m, m) = h;
  out.matrix.bottomLeftCorner(m, m) = h.conjugate();
  out.matrix.bottomRightCorner(m, m) = t.conjugate();
  out.params = p;
  return out;
}

int param_count(int m) { return 3 * (2 * m - 1); }

RVec pack_params(const THParams& p) {
  const int m = p.dim();
  RVec theta(param_count(m));
  theta[0] = p.toe_at(0).real();
  for (int lag = 1; lag <= m - 1; ++lag) {
    theta[2 * lag - 1] = p.toe_at(lag).real();
    theta[2 * lag] = p.toe_at(lag).imag();
  }
  const int base = 2 * m - 1;
  for (int s = 0; s <= 2 * m - 2; ++s) {
    theta[base + 2 * s] = p.han[s].real();
    theta[base + 2 * s + 1] = p.han[s].imag();
  }
  return theta;
}

THParams unpack_params(const RVec& theta, int m) {
  if (theta.size() != param_count(m))
    fail(ErrorCode::InvalidDimension, "parameter vector length mismatch");
  THParams p = THParams::zero(m);
  p.toe[m - 1] = theta[0];
  for (int lag = 1; lag <= m - 1; ++lag) {
    const Complex val(theta[2 * lag - 1], theta[2 * lag]);
    p.toe[m - 1 + lag] = val;
    p.toe[m - 1 - lag] = std::conj(val);
  }
  const int base = 2 * m - 1;
  for (int s = 0; s <= 2 * m - 2; ++s)
    p.han[s] = Complex(theta[base + 2 * s], theta[base + 2 * s + 1]);
  return p;
}

RVec structure_adjoint(const CMat& w) {
  const int m2 = static_cast<int>(w.rows());
  if (w.cols() != m2 || m2 < 2 || m2 % 2 != 0)
    fail(ErrorCode::InvalidDimension, "input must be 2M x 2M");
  const int m = m2 / 2;
  RVec g = RVec::Zero(param_count(m));

  // Toeplitz blocks: diagonal sums of W11 and W22.
  for (int lag = 0; lag <= m - 1; ++lag) {
    Complex s11(0, 0), s22(0, 0);
    for (int j = 0; j + lag < m; ++j) {
      s11 += w(j + lag, j);
      s22 += w(m + j + lag, m + j);
    }
    if (lag == 0) {
      g[0] = (s11 + s22).real();
    } else {
      g[2 * lag - 1] = 2.0 * (s11.real() + s22.real());
      g[2 * lag] = 2.0 * (s11.imag() - s22.imag());
    }
  }

  // Hankel blocks: anti-diagonal sums of W12 (W21 contributes conjugates).
  const int base = 2 * m - 1;
  for (int s = 0; s <= 2 * m - 2; ++s) {
    Complex s12(0, 0);
    const int lo = std::max(0, s - m + 1);
    const int hi = std::min(s, m - 1);
    for (int i = lo; i <= hi; ++i) s12 += w(i, m + (s - i));
    g[base + 2 * s] = 2.0 * s12.real();
    g[base + 2 * s + 1] = 2.0 * s12.imag();
  }
  return g;
}

RVec structure_weights(int m) {
  RVec w(param_count(m));
  w[0] = 2.0 * m;
  for (int lag = 1; lag <= m - 1; ++lag) {
    w[2 * lag - 1] = 4.0 * (m - lag);
    w[2 * lag] = 4.0 * (m - lag);
  }
  const int base = 2 * m - 1;
  for (int s = 0; s <= 2 * m - 2; ++s) {
    const int count = std::min(s, 2 * m - 2 - s) + 1;
    w[base + 2 * s] = 2.0 * count;
    w[base + 2 * s + 1] = 2.0 * count;
  }
  return w;
}

double structure_trace_coeff(int m) { return 2.0 * m; }

THParams project_structure(const CMat& g) {
  const int m2 = static_cast<int>(g.rows());
  if (g.cols() != m2 || m2 < 2 || m2 % 2 != 0)
    fail(ErrorCode::InvalidDimension, "input must be 2M x 2M");
  if ((g - g.adjoint()).norm() > 1e-8 * std::max(1.0, g.norm()))
    fail(ErrorCode::InvalidInput, "input is not Hermitian within tolerance");
  const CMat h = hermitize(g);
  const int m = m2 / 2;
  const RVec theta = structure_adjoint(h).cwiseQuotient(structure_weights(m));
  return unpack_params(theta, m);
}

CMat build_rz(const SampleMoments& m) {
  const int n = static_cast<int>(m.cov.rows());
  if (m.cov.cols() != n || m.pcov.rows() != n || m.pcov.cols() != n)
    fail(ErrorCode::InvalidDimension, "moment matrices must share a square shape");
  const CMat r = hermitize(m.cov);
  const CMat c = symmetrize(m.pcov);
  CMat rz(2 * n, 2 * n);
  rz.topLeftCorner(n, n) = r;
  rz.topRightCorner(n, n) = c;
  rz.bottomLeftCorner(n, n) = c.conjugate();
  rz.bottomRightCorner(n, n) = r.conjugate();
  return rz;
}

CVec vec(const CMat& a) {
  return Eigen::Map<const CVec>(a.data(), a.size());
}

CVec subvec(const CMat& c) {
  const int n = static_cast<int>(c.rows());
  if (c.cols() != n) fail(ErrorCode::InvalidDimension, "input must be square");
  CVec out(n * (n + 1) / 2);
  int t = 0;
  for (int col = 0; col < n; ++col)
    for (int row = col; row < n; ++row) out[t++] = c(row, col);
  return out;
}

RMat subvec_selection(int n) {
  if (n < 1) fail(ErrorCode::InvalidDimension, "dimension must be >= 1");
  RMat u = RMat::Zero(n * (n + 1) / 2, n * n);
  int t = 0;
  for (int col = 0; col < n; ++col)
    for (int row = col; row < n; ++row) u(t++, row + col * n) = 1.0;
  return u;
}

MomentVector build_qy(const CMat& r_y, const CMat& c_y) {
  const int n = static_cast<int>(r_y.rows());
  if (r_y.cols() != n || c_y.rows() != n || c_y.cols() != n)
    fail(ErrorCode::InvalidDimension, "moment matrices must share a square shape");
  const CVec r = vec(r_y);
  const CVec c = subvec(c_y);
  MomentVector out;
  out.n = n;
  out.q.resize(2 * n * n + n);
  out.q << r, c, c.conjugate();
  return out;
}

CMat compress(const AugmentedCovariance& r_a, const MeasurementDesign& design) {
  return design.compress_augmented(r_a.matrix);
}

int numerical_rank(const CMat& h, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(hermitize(h));
  const RVec vals = eig.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals[i] > rel_tol * top) ++rank;
  return rank;
}

void write_matrix_csv(std::ostream& os, const CMat& a) {
  char buf[80];
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g%+.17gj", a(r, c).real(), a(r, c).imag());
      os << buf;
      if (c + 1 < a.cols()) os << ',';
    }
    os << '\n';
  }
}

}  // namespace lrthcr
