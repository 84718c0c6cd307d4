#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qres/channels.hpp"
#include "qres/gaussian.hpp"
#include "qres/measures.hpp"

namespace qres {

using Field = std::variant<double, std::int64_t, bool, std::string>;

// One row of an experiment output, fields kept in insertion order.
struct ExperimentRecord {
  std::string experiment;
  std::vector<std::pair<std::string, Field>> fields;

  ExperimentRecord& set(const std::string& key, Field value);
  const Field* find(const std::string& key) const;
  double number(const std::string& key) const;
};

// ---- lossy single-photon concentration ----
struct LossyPoint {
  double q = 0.0;
  double probability = 0.0;
  DensityOperator sigma_out;
  double closed_form_error = 0.0;       // max |sigma_out - closed form|
  double probability_error = 0.0;
  double f1_in = 0.0, f1_out = 0.0;
};
LossyPoint lossy_point(double q, int dim = 8);
// Closed form (1/P)((1-q)^2|0><0| + q(1-q)|1><1| + (q^2/2)|2><2|) embedded in `dim`.
CMatrix lossy_sigma_closed_form(double q, int dim);

struct LossyScanOptions {
  int dim = 8;
  double threshold_tol = 1e-5;
  bool with_depth = true;
  NcDepthOptions depth{};
};
struct LossyScanResult {
  std::vector<ExperimentRecord> records;
  std::optional<double> threshold;   // q* where F1(sigma_out) overtakes F1(rho_loss)
  bool bound_holds = true;           // P F1(sigma_out) <= F1(rho_loss) + 1e-6 everywhere
  double max_closed_form_error = 0.0;
};
LossyScanResult lossy_concentration_scan(const std::vector<double>& q_grid, const LossyScanOptions& opt = {});

// ---- cat amplification ----
int cat_protocol_dim(double alpha);
ExperimentRecord cat_amplification(double alpha, std::optional<int> dim = {});

// ---- Fig. 3 style maximal coherence ensemble ----
struct EtaTensorOptions {
  int starts = 32;
  NelderMeadOptions simplex{};
  std::optional<int> rank;   // Kraus rank of the sampled channels; random in [1, d^2] when unset
  double floor_tol = 1e-4;
  double excess_tol = 5e-3;
  int workers = 0;           // 0: worker_count()
};
struct EtaTensorResult {
  std::vector<ExperimentRecord> records;
  double max_excess = 0.0;
  int floor_violations = 0;
  int within_excess = 0;
  int nonconverged = 0;
  double seconds = 0.0;
};
EtaTensorResult eta_tensorization_experiment(int d_a, int d_b, int trials, std::uint64_t seed,
                                             const EtaTensorOptions& opt = {});

// ---- channel nonclassicality depth tensorization ----
ExperimentRecord tau_channel_tensorization(double t1, double t2, const NcDepthOptions& single = {},
                                           const NcDepthOptions& joint = {});

// ---- randomized monotonicity suites ----
struct MonotonicityOptions {
  NcDepthOptions depth = [] {
    NcDepthOptions o;
    o.grid = 41;  // local refinement makes the coarser grid enough
    return o;
  }();
  double tau_tol = 1e-3;      // slack on top of the bracket comparison
  double f1_tol = 1e-6;
  double kappa_tol = 1e-8;
  int workers = 0;
};
struct MonotonicityResult {
  std::vector<ExperimentRecord> records;
  int tau_violations = 0;
  int f1_violations = 0;
  int kappa_violations = 0;
  std::vector<std::int64_t> failing_trials;
  bool passed() const { return tau_violations == 0 && f1_violations == 0 && kappa_violations == 0; }
};
MonotonicityResult monotonicity_suite(int trials, std::uint64_t seed, const MonotonicityOptions& opt = {});

// ---- two-mode squeezed vacuum conditioning ----
ExperimentRecord tmsv_conditioning(double r, std::optional<int> dim = {}, cplx xi = {0.3, -0.2},
                                   const NcDepthOptions& depth = {});

// Derived per-index seed, stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace qres
