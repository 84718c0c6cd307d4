#include "qres/gaussian.hpp"

#include <cmath>

namespace qres {

namespace {
double lambda_min(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void require_physical(const GaussianState& g) {
  if (g.physicality_margin() < -1e-10) throw DomainError("covariance violates the uncertainty relation");
}
}  // namespace

GaussianState::GaussianState(RVector mean, RMatrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0 || mean_.size() % 2 != 0) throw DomainError("mean must have even positive length");
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) throw DomainError("covariance shape mismatch");
  if (!cov_.allFinite() || !mean_.allFinite()) throw DomainError("non-finite Gaussian parameters");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("covariance is not symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose());
  if (physicality_margin() < -1e-10) throw DomainError("covariance violates the uncertainty relation");
}

GaussianState GaussianState::vacuum(int modes) {
  return {RVector::Zero(2 * modes), 0.5 * RMatrix::Identity(2 * modes, 2 * modes)};
}

GaussianState GaussianState::thermal(int modes, double n) {
  if (n < 0.0) throw DomainError("mean photon number must be >= 0");
  return {RVector::Zero(2 * modes), (n + 0.5) * RMatrix::Identity(2 * modes, 2 * modes)};
}

GaussianState GaussianState::squeezed_vacuum(double r, double angle) {
  return apply_symplectic(vacuum(1), squeeze_symplectic(r, angle));
}

GaussianState GaussianState::two_mode_squeezed(double r) {
  RMatrix v(4, 4);
  const double c = std::cosh(2.0 * r) / 2.0, s = std::sinh(2.0 * r) / 2.0;
  v << c, 0, s, 0,
       0, c, 0, -s,
       s, 0, c, 0,
       0, -s, 0, c;
  return {RVector::Zero(4), v};
}

double GaussianState::physicality_margin() const {
  const Eigen::MatrixXcd m = cov_.cast<cplx>() + cplx(0.0, 0.5) * symplectic_form(modes()).cast<cplx>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

RMatrix symplectic_form(int modes) {
  RMatrix o = RMatrix::Zero(2 * modes, 2 * modes);
  for (int k = 0; k < modes; ++k) {
    o(2 * k, 2 * k + 1) = 1.0;
    o(2 * k + 1, 2 * k) = -1.0;
  }
  return o;
}

double min_symplectic_eigenvalue(const RMatrix& cov) {
  const int n = static_cast<int>(cov.rows() / 2);
  Eigen::EigenSolver<RMatrix> es(symplectic_form(n) * cov, false);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

RMatrix bs_symplectic(double theta, int modes, int a, int b) {
  if (a < 0 || b < 0 || a >= modes || b >= modes || a == b) throw DomainError("invalid beam splitter modes");
  RMatrix s = RMatrix::Identity(2 * modes, 2 * modes);
  const double c = std::cos(theta), sn = std::sin(theta);
  for (int q = 0; q < 2; ++q) {
    s(2 * a + q, 2 * a + q) = c;
    s(2 * a + q, 2 * b + q) = sn;
    s(2 * b + q, 2 * a + q) = -sn;
    s(2 * b + q, 2 * b + q) = c;
  }
  return s;
}

RMatrix phase_symplectic(double phi, int modes, int mode) {
  if (mode < 0 || mode >= modes) throw DomainError("invalid mode");
  RMatrix s = RMatrix::Identity(2 * modes, 2 * modes);
  // a -> e^{-i phi} a
  s(2 * mode, 2 * mode) = std::cos(phi);
  s(2 * mode, 2 * mode + 1) = std::sin(phi);
  s(2 * mode + 1, 2 * mode) = -std::sin(phi);
  s(2 * mode + 1, 2 * mode + 1) = std::cos(phi);
  return s;
}

RMatrix squeeze_symplectic(double r, double angle, int modes, int mode) {
  if (mode < 0 || mode >= modes) throw DomainError("invalid mode");
  Eigen::Matrix2d rot;
  rot << std::cos(angle / 2), -std::sin(angle / 2), std::sin(angle / 2), std::cos(angle / 2);
  const Eigen::Matrix2d sq = rot * Eigen::Vector2d(std::exp(-r), std::exp(r)).asDiagonal() * rot.transpose();
  RMatrix s = RMatrix::Identity(2 * modes, 2 * modes);
  s.block<2, 2>(2 * mode, 2 * mode) = sq;
  return s;
}

GaussianState apply_symplectic(const GaussianState& g, const RMatrix& s) {
  if (s.rows() != g.cov().rows() || s.cols() != g.cov().cols()) throw DomainError("symplectic dimension mismatch");
  RMatrix v = s * g.cov() * s.transpose();
  v = 0.5 * (v + v.transpose());
  return {s * g.mean(), v};
}

GaussianState displace(const GaussianState& g, const std::vector<cplx>& gamma) {
  if (static_cast<int>(gamma.size()) != g.modes()) throw DomainError("need one displacement per mode");
  RVector m = g.mean();
  for (int k = 0; k < g.modes(); ++k) {
    m(2 * k) += std::sqrt(2.0) * gamma[k].real();
    m(2 * k + 1) += std::sqrt(2.0) * gamma[k].imag();
  }
  return {m, g.cov()};
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size(), nb = b.mean().size();
  RVector m(na + nb);
  m << a.mean(), b.mean();
  RMatrix v = RMatrix::Zero(na + nb, na + nb);
  v.topLeftCorner(na, na) = a.cov();
  v.bottomRightCorner(nb, nb) = b.cov();
  return {m, v};
}

GaussianState add_thermal(const GaussianState& g, double delta) {
  if (delta < 0.0) throw DomainError("noise width must be >= 0");
  return {g.mean(), g.cov() + delta * RMatrix::Identity(g.cov().rows(), g.cov().cols())};
}

GaussianState condition_on_heterodyne(const GaussianState& g, int keep, const RVector& outcome) {
  const int n = 2 * keep, m = static_cast<int>(g.mean().size()) - n;
  if (keep < 1 || m < 2) throw DomainError("invalid conditioning split");
  if (outcome.size() != m) throw DomainError("outcome has the wrong length");
  const RMatrix va = g.cov().topLeftCorner(n, n);
  const RMatrix vb = g.cov().bottomRightCorner(m, m);
  const RMatrix vab = g.cov().topRightCorner(n, m);
  const RMatrix inv = (vb + 0.5 * RMatrix::Identity(m, m)).inverse();
  RMatrix v = va - vab * inv * vab.transpose();
  v = 0.5 * (v + v.transpose());
  const RVector mean = g.mean().head(n) + vab * inv * (outcome - g.mean().tail(m));
  return {mean, v};
}

double nc_depth_gaussian(const GaussianState& g) {
  require_physical(g);
  return std::max(0.0, 0.5 - lambda_min(g.cov()));
}

double kappa_classical(const GaussianState& g) {
  require_physical(g);
  return std::max(1.0, 1.0 / (2.0 * lambda_min(g.cov())));
}

double min_pt_symplectic_eigenvalue(const RMatrix& cov) {
  if (cov.rows() != 4) throw DomainError("partial transpose is implemented for two modes");
  RMatrix p = RMatrix::Identity(4, 4);
  p(3, 3) = -1.0;
  return min_symplectic_eigenvalue(p * cov * p);
}

double kappa_separable_two_mode(const GaussianState& g, double tol) {
  if (g.modes() != 2) throw DomainError("separability measure needs exactly two modes");
  require_physical(g);
  auto separable = [&](double t) { return min_pt_symplectic_eigenvalue(t * g.cov()) >= 0.5; };
  if (separable(1.0)) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (!separable(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("separability bracket diverged");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (separable(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace qres
