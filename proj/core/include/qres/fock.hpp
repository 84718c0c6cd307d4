#pragma once

#include <optional>
#include <span>
#include <utility>

#include <Eigen/SparseCore>

#include "qres/types.hpp"

namespace qres {

using SparseCMatrix = Eigen::SparseMatrix<cplx>;

inline constexpr double kDefaultTruncationEps = 1e-8;

class DensityOperator;

// Pure state on a truncated multimode Fock space, mode 0 is the most significant index.
class FockVector {
 public:
  FockVector(CVector amplitudes, Dims dims, double tail = 0.0, double spread = 0.0);

  const CVector& amplitudes() const { return amps_; }
  const Dims& dims() const { return dims_; }
  int modes() const { return static_cast<int>(dims_.size()); }
  // Probability mass known to be missing because of truncation, 0 only for exact states. Operations
  // whose true output has unbounded support keep it > 0 even when the loss is below rounding.
  double tail() const { return tail_; }
  // Trace-norm bound on the error inside the stored levels, nonzero once an operation has moved
  // truncated mass back into them.
  double spread() const { return spread_; }
  double norm() const { return amps_.norm(); }

  FockVector normalized() const;
  DensityOperator density() const;

 private:
  CVector amps_;
  Dims dims_;
  double tail_;
  double spread_;
};

// Mixed state on a truncated multimode Fock space.
class DensityOperator {
 public:
  DensityOperator(CMatrix matrix, Dims dims, double tail = 0.0, double spread = 0.0);

  const CMatrix& matrix() const { return m_; }
  const Dims& dims() const { return dims_; }
  int modes() const { return static_cast<int>(dims_.size()); }
  Eigen::Index size() const { return m_.rows(); }
  double tail() const { return tail_; }
  double spread() const { return spread_; }
  bool exact() const { return tail_ == 0.0 && spread_ == 0.0; }
  double trace() const { return m_.trace().real(); }

  // Checks hermiticity (1e-12), positivity (-1e-10) and, if requested, unit trace (1e-8).
  void validate(bool normalized = true) const;
  DensityOperator normalized() const;

 private:
  CMatrix m_;
  Dims dims_;
  double tail_;
  double spread_;
};

// Channel given by Kraus operators acting on the full (multimode) space.
class KrausChannel {
 public:
  // `truncated`: the operators are cut from maps with infinite-dimensional range, so outputs are
  // always marked as carrying truncation error.
  KrausChannel(std::vector<CMatrix> ops, Dims in_dims, Dims out_dims, bool truncated = false);

  const std::vector<CMatrix>& ops() const { return ops_; }
  const Dims& in_dims() const { return in_; }
  const Dims& out_dims() const { return out_; }
  bool truncated() const { return truncated_; }
  // Largest deviation of sum K^dag K from the identity.
  double trace_defect() const;
  bool trace_preserving(double tol = 1e-8) const { return trace_defect() <= tol; }

  DensityOperator apply(const DensityOperator& rho) const;

 private:
  std::vector<CMatrix> ops_;
  Dims in_, out_;
  bool truncated_;
};

KrausChannel tensor(const KrausChannel& a, const KrausChannel& b);
// Apply `first`, then `second`.
KrausChannel compose(const KrausChannel& second, const KrausChannel& first);

// ---- states ----
int recommended_dim(double abs_alpha);
// e^{-|a|^2} sum_{n>=dim} |a|^{2n}/n!
double coherent_tail_mass(double abs_alpha, int dim);

FockVector make_coherent(cplx alpha, int dim, double eps = kDefaultTruncationEps);
FockVector make_cat(cplx alpha, int dim, double eps = kDefaultTruncationEps);
FockVector make_fock(int n, int dim);
FockVector make_squeezed_vacuum(double r, int dim, double angle = 0.0, double eps = kDefaultTruncationEps);
// Two-mode squeezed vacuum matching the 50:50 mix of x- and p-squeezed vacua.
FockVector make_two_mode_squeezed(double r, int dim, double eps = kDefaultTruncationEps);
DensityOperator make_lossy_photon(double q, int dim = 3);
DensityOperator make_thermal(double mean_photons, int dim);

// ---- composition ----
FockVector tensor(const FockVector& a, const FockVector& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& keep);
// Zero-pad every mode to the (larger or equal) target dims.
DensityOperator embed(const DensityOperator& rho, const Dims& dims);
FockVector embed(const FockVector& psi, const Dims& dims);
DensityOperator mix(const std::vector<std::pair<double, DensityOperator>>& parts);

// Lift a single-mode operator (out x in) acting on `mode` to the full space.
CMatrix lift_mode_operator(const CMatrix& op, const Dims& dims, int mode);

// ---- passive unitaries and displacements ----
// exp(theta (a^dag b - b^dag a)); |a>|b> -> |a c + b s>|b c - a s>.
SparseCMatrix beam_splitter(double theta, int dim_a, int dim_b);
FockVector apply_beam_splitter(const FockVector& psi, double theta, int mode_a = 0, int mode_b = 1);
DensityOperator apply_beam_splitter(const DensityOperator& rho, double theta, int mode_a = 0, int mode_b = 1);
DensityOperator phase_rotate(const DensityOperator& rho, int mode, double phi);

// <m|D(alpha)|n> for m < dim_out, n < dim_in.
CMatrix displacement_matrix(cplx alpha, int dim_out, int dim_in);
// Displace one mode; the output dimension of that mode defaults to the input one.
DensityOperator displace(const DensityOperator& rho, int mode, cplx alpha, std::optional<int> out_dim = {});

// ---- noise ----
KrausChannel loss_kraus(double transmissivity, int dim);
DensityOperator loss_channel(const DensityOperator& rho, double transmissivity, int mode);

struct ThermalNoiseOptions {
  int order = 21;                  // Gauss-Hermite points per axis
  std::optional<int> headroom;     // extra levels per mode, default ceil(4 delta)
  bool allow_short_headroom = false;
};
int required_noise_headroom(double delta);
KrausChannel thermal_noise_kraus(double delta, int dim_in, int dim_out, int order = 21);
DensityOperator thermal_noise_channel(const DensityOperator& rho, double delta, const ThermalNoiseOptions& opt = {});

// ---- measurement ----
struct Projection {
  double probability;   // <xi|rho|xi> (projective outcome)
  double povm_density;  // probability / pi (coherent-state POVM measure)
  DensityOperator conditional;
};
Projection project_coherent(const DensityOperator& rho, int mode, cplx xi);
Projection project_fock(const DensityOperator& rho, int mode, int n);
// Vector version used by the pure-state protocols.
std::pair<double, FockVector> project_fock(const FockVector& psi, int mode, int n);

// ---- quasiprobability ----
// s-parametrized quasiprobability with s = 1 - 2 tau; one alpha per mode.
double quasiprob(const DensityOperator& rho, std::span<const cplx> alpha, double tau);
double quasiprob(const DensityOperator& rho, cplx alpha, double tau);

// Matrix X with X_{nm} = <n| D(alpha) r^N D(alpha)^dag |m>, r = (tau - 1)/tau, so that
// W(alpha; tau) = tr(rho X) / (pi tau) for a single mode.
CMatrix quasiprob_kernel(cplx alpha, double tau, int dim);

double fidelity(const FockVector& a, const FockVector& b);
double trace_distance(const CMatrix& a, const CMatrix& b);
double mean_photon_number(const DensityOperator& rho, int mode);

}  // namespace qres
