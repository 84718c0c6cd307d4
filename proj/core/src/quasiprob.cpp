#include <cmath>
#include <numbers>
#include <vector>

#include "qres/fock.hpp"

namespace qres {

CMatrix quasiprob_kernel(cplx alpha, double tau, int dim) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const double r = (tau - 1.0) / tau;
  const double au = std::abs(alpha) / tau;
  const double au2 = au * au;
  const double theta = std::arg(alpha);
  const double base = -std::norm(alpha) / tau;
  constexpr double kBig = 1e200;
  CMatrix x(dim, dim);
  std::vector<double> lf(dim + 1);
  for (int n = 0; n <= dim; ++n) lf[n] = std::lgamma(n + 1.0);
  // X_{m+a,m} = e^{-|alpha|^2/tau} e^{i a theta} sqrt(m!/(m+a)!) |u|^a P_m, u = alpha/tau, with
  // P_m = r^m L_m^{(a)}(-|u|^2/r) generated by the Laguerre recurrence multiplied through by r^{m}.
  for (int a = 0; a < dim; ++a) {
    const cplx phase = std::polar(1.0, theta * a);
    const double lead = (a == 0) ? 0.0 : (au == 0.0 ? -INFINITY : a * std::log(au));
    double p_prev = 0.0, p = 1.0, log_scale = 0.0;
    for (int m = 0; m + a < dim; ++m) {
      if (m > 0) {
        const int k = m - 1;
        const double next = (((2.0 * k + 1.0 + a) * r + au2) * p - (k + a) * r * r * p_prev) / (k + 1.0);
        p_prev = p;
        p = next;
        if (std::abs(p) > kBig) {
          p /= kBig;
          p_prev /= kBig;
          log_scale += std::log(kBig);
        }
      }
      const double logmag = base + lead + 0.5 * (lf[m] - lf[m + a]) + log_scale;
      const cplx v = (p == 0.0 || logmag == -INFINITY) ? cplx(0.0) : phase * (p * std::exp(logmag));
      x(m + a, m) = v;
      if (a > 0) x(m, m + a) = std::conj(v);
    }
  }
  return x;
}

double quasiprob(const DensityOperator& rho, std::span<const cplx> alpha, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  if (static_cast<int>(alpha.size()) != rho.modes()) throw DomainError("need one phase-space point per mode");
  CMatrix t = quasiprob_kernel(alpha[0], tau, rho.dims()[0]);
  for (int m = 1; m < rho.modes(); ++m) {
    const CMatrix k = quasiprob_kernel(alpha[m], tau, rho.dims()[m]);
    CMatrix next(t.rows() * k.rows(), t.cols() * k.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) next.block(i * k.rows(), j * k.cols(), k.rows(), k.cols()) = t(i, j) * k;
    t = std::move(next);
  }
  // tr(rho T) = sum_{nm} rho_{mn} T_{nm}
  const cplx w = rho.matrix().transpose().cwiseProduct(t).sum() / std::pow(std::numbers::pi * tau, rho.modes());
  const double scale = std::max(1.0, std::abs(w.real()));
  if (std::abs(w.imag()) > 1e-10 * scale) throw DomainError("quasiprobability has a non-negligible imaginary part");
  return w.real();
}

double quasiprob(const DensityOperator& rho, cplx alpha, double tau) {
  return quasiprob(rho, std::span<const cplx>(&alpha, 1), tau);
}

}  // namespace qres
