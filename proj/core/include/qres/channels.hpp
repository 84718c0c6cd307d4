#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qres/measures.hpp"
#include "qres/optimize.hpp"

namespace qres {

inline constexpr int kDefaultMaxChoiDim = 64;  // bound on d_in * d_out

// Dynamical matrix D = sum_ij |i><j| (x) Phi(|i><j|), normalized so that Tr_out D = I_in.
class ChoiMatrix {
 public:
  ChoiMatrix(CMatrix matrix, int d_in, int d_out);

  const CMatrix& matrix() const { return m_; }
  int d_in() const { return d_in_; }
  int d_out() const { return d_out_; }

  // Checks positivity (-1e-10) and trace preservation (1e-8).
  void validate() const;
  double trace_defect() const;

 private:
  CMatrix m_;
  int d_in_, d_out_;
};

ChoiMatrix choi_from_kraus(const std::vector<CMatrix>& kraus, int d_in, int d_out);
ChoiMatrix identity_channel(int d);
ChoiMatrix dephasing_channel(int d);
ChoiMatrix unitary_channel(const CMatrix& u);

// Haar-distributed isometry (rows >= cols) from a QR decomposition with the phase fix.
CMatrix haar_isometry(int rows, int cols, std::mt19937_64& rng);
ChoiMatrix random_channel(int d_in, int d_out, int kraus_rank, std::uint64_t seed,
                          int max_dim = kDefaultMaxChoiDim);

CMatrix apply(const ChoiMatrix& phi, const CMatrix& rho);
// Heisenberg-picture map: tr(Phi(rho) X) = tr(rho Phi^dag(X)).
CMatrix apply_adjoint(const ChoiMatrix& phi, const CMatrix& x);
ChoiMatrix tensor(const ChoiMatrix& a, const ChoiMatrix& b, int max_dim = kDefaultMaxChoiDim);

struct EtaOptions {
  int starts = 32;
  std::uint64_t seed = 1;
  NelderMeadOptions simplex{};
  std::vector<CMatrix> extra_inputs;  // density matrices used as additional starting points
};

struct OptimizationReport {
  double best = 0.0;
  CMatrix best_input;
  int best_index = -1;
  int best_input_rank = 0;
  int starts = 0;
  std::vector<double> per_start;
  std::vector<int> iterations;
  std::vector<bool> converged;
  double size_tol = 0.0;
  std::uint64_t seed = 0;
  double spread() const;  // best minus worst start value
};

// Maximal output coherence over input states (lower bound from multi-start simplex search).
OptimizationReport output_max_coherence(const ChoiMatrix& phi, const EtaOptions& opt = {});

// Input density matrix from unconstrained parameters: A A^dag / tr, A complex d x d.
CMatrix density_from_params(const RVector& params, int d);
RVector params_from_density(const CMatrix& rho);

using InputFamily = std::vector<std::pair<std::string, DensityOperator>>;

struct ChannelDepthReport {
  DepthEstimate estimate;  // lower = max of lowers, upper = max of uppers
  std::vector<std::string> labels;
  std::vector<DepthEstimate> per_input;
  int best_index = -1;
};

// Parametrized pure inputs with at most `cutoff` photons per mode (single- or two-mode).
InputFamily default_input_family(const Dims& dims, int cutoff = 2);
ChannelDepthReport output_nc_depth(const KrausChannel& phi, const InputFamily& family, const NcDepthOptions& opt = {});

}  // namespace qres
