#pragma once

#include "qres/types.hpp"

namespace qres {

// Quadratures ordered (x1, p1, x2, p2, ...), vacuum covariance I/2.
class GaussianState {
 public:
  GaussianState(RVector mean, RMatrix cov);

  static GaussianState vacuum(int modes);
  static GaussianState thermal(int modes, double mean_photons);
  static GaussianState squeezed_vacuum(double r, double angle = 0.0);
  static GaussianState two_mode_squeezed(double r);

  const RVector& mean() const { return mean_; }
  const RMatrix& cov() const { return cov_; }
  int modes() const { return static_cast<int>(mean_.size() / 2); }
  // Smallest eigenvalue of V + (i/2) Omega.
  double physicality_margin() const;

 private:
  RVector mean_;
  RMatrix cov_;
};

RMatrix symplectic_form(int modes);
double min_symplectic_eigenvalue(const RMatrix& cov);

// Symplectic matrices acting on the full 2n phase space.
RMatrix bs_symplectic(double theta, int modes = 2, int mode_a = 0, int mode_b = 1);
RMatrix phase_symplectic(double phi, int modes = 1, int mode = 0);
RMatrix squeeze_symplectic(double r, double angle = 0.0, int modes = 1, int mode = 0);

GaussianState apply_symplectic(const GaussianState& g, const RMatrix& s);
// gamma per mode, shifts (x, p) by sqrt(2) (Re gamma, Im gamma).
GaussianState displace(const GaussianState& g, const std::vector<cplx>& gamma);
GaussianState tensor(const GaussianState& a, const GaussianState& b);
GaussianState add_thermal(const GaussianState& g, double delta);
// Condition the modes after `keep` modes on a coherent-state projection of the remaining ones.
GaussianState condition_on_heterodyne(const GaussianState& g, int keep_modes, const RVector& outcome);

double nc_depth_gaussian(const GaussianState& g);
double kappa_classical(const GaussianState& g);
double kappa_separable_two_mode(const GaussianState& g, double tol = 1e-8);
// Smallest symplectic eigenvalue of the partial transpose (p of mode 2 flipped).
double min_pt_symplectic_eigenvalue(const RMatrix& cov);

}  // namespace qres
