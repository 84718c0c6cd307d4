#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qres/fock.hpp"

namespace qres {

struct QFIMatrix {
  RMatrix matrix;     // 2n x 2n, quadratures ordered (x1, p1, ...)
  int modes = 0;
  std::vector<std::string> warnings;
};

QFIMatrix qfi_matrix(const DensityOperator& rho);
double metrological_power(const DensityOperator& rho);
double metrological_power(const QFIMatrix& f);

struct NcDepthOptions {
  int grid = 61;           // points per phase-space axis
  double tol = 1e-3;       // bracket width
  double eps_neg = 1e-9;   // negativity threshold
  double extent_margin = 4.0;
  std::optional<std::vector<double>> extent;  // per-mode half width, overrides the default
  int shell = 2;           // Fock levels per block in the truncation-error estimate
  bool check_refinement = false;
  int coarse = 16;         // descending scan steps before bisecting, truncated states only
  bool refine = true;      // local descent from the lowest grid points
  // Truncated single-mode states whose moments saturate det V = 1/4 within this are taken as the
  // pure Gaussian they approximate; the grid cannot see their depth because the series diverges
  // below it. Negative disables.
  double gaussian_tol = 1e-6;
};

struct DepthEstimate {
  double lower = 0.0;
  double upper = 1.0;
  int grid = 0;
  std::vector<double> extent;
  bool truncation_aware = false;  // negativity was discounted by the truncation-error estimate
  bool grid_warning = false;      // refining the grid changed the bracket
  bool unresolved = false;        // upper end rests on points where the truncated series had not converged
  bool gaussian = false;          // bracket from the closed form for the recognized pure Gaussian
  double midpoint() const { return 0.5 * (lower + upper); }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

DepthEstimate nc_depth(const DensityOperator& rho, const NcDepthOptions& opt = {});

// Smallest grid value of W(.; tau) plus the truncation-error estimate; negative means the state
// was certified nonclassical at this tau.
double certified_min_quasiprob(const DensityOperator& rho, double tau, const NcDepthOptions& opt = {});

double max_coherence(const CMatrix& rho);
double max_coherence(const DensityOperator& rho);

struct SioPrediction {
  double fidelity;
  double eta;
  bool distillable;
};
SioPrediction predicted_sio_fidelity(const CMatrix& rho);

}  // namespace qres
