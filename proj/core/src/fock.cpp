#include "qres/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_laguerre.h>

#include "detail.hpp"

namespace qres {

using detail::hermitian_part;
using detail::kron;

namespace {

void check_dims(const Dims& dims, long long size) {
  if (dims.empty()) throw DomainError("dims must not be empty");
  for (int d : dims)
    if (d < 2) throw DomainError("every mode needs dimension >= 2");
  if (product(dims) != size) throw DomainError("dims do not match the state size");
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

// Trace that went missing, ignoring rounding noise.
double trace_loss(double before, double after) {
  const double lost = before - after;
  return lost > 1e-13 * std::max(1.0, std::abs(before)) ? lost : 0.0;
}

// Smallest positive tail: flags a state as inexact without changing any probability.
constexpr double kLeakMarker = std::numeric_limits<double>::min();

// Trace-norm bound on rho - P rho P when P rho P misses `tail` of the mass.
double cut_error(double tail) { return tail > 0.0 ? 2.0 * std::sqrt(tail) + tail : 0.0; }

// In-support error after an operation that couples the stored levels to the missing ones.
double mixed_spread(double spread, double tail) { return spread + cut_error(tail); }

// Conjugate `rho` by an operator and account for the probability lost to truncation. `mixes`: the
// operator connects stored levels to higher ones, so the missing mass feeds back into the output.
DensityOperator conjugate(const CMatrix& op, const DensityOperator& rho, Dims out_dims, bool mixes = false) {
  CMatrix out = hermitian_part(op * rho.matrix() * op.adjoint());
  double lost = trace_loss(rho.trace(), out.trace().real());
  if (mixes) lost = std::max(lost, kLeakMarker);
  const double spread = mixes ? mixed_spread(rho.spread(), rho.tail()) : rho.spread();
  return {std::move(out), std::move(out_dims), rho.tail() + lost, spread};
}

// Remove a mode of dimension 1 left over by a projection.
Dims drop_mode(Dims dims, int mode) {
  dims.erase(dims.begin() + mode);
  return dims;
}

void check_mode(const Dims& dims, int mode) {
  if (mode < 0 || mode >= static_cast<int>(dims.size())) throw DomainError("mode index out of range");
}

}  // namespace

// ---------------------------------------------------------------- FockVector

FockVector::FockVector(CVector amplitudes, Dims dims, double tail, double spread)
    : amps_(std::move(amplitudes)), dims_(std::move(dims)), tail_(tail), spread_(spread) {
  check_dims(dims_, amps_.size());
  if (!(tail_ >= 0.0)) throw DomainError("tail mass must be non-negative");
  if (!(spread_ >= 0.0)) throw DomainError("error bound must be non-negative");
}

FockVector FockVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw DomainError("cannot normalize a zero vector");
  const double t = n * n;
  return {amps_ / n, dims_, tail_ / t, (spread_ + (tail_ > 0.0 ? std::abs(1.0 - t) : 0.0)) / t};
}

DensityOperator FockVector::density() const {
  return {amps_ * amps_.adjoint(), dims_, tail_, spread_};
}

// ---------------------------------------------------------------- DensityOperator

DensityOperator::DensityOperator(CMatrix matrix, Dims dims, double tail, double spread)
    : m_(std::move(matrix)), dims_(std::move(dims)), tail_(tail), spread_(spread) {
  if (m_.rows() != m_.cols()) throw DomainError("density matrix must be square");
  check_dims(dims_, m_.rows());
  if (!(tail_ >= 0.0)) throw DomainError("tail mass must be non-negative");
  if (!(spread_ >= 0.0)) throw DomainError("error bound must be non-negative");
  if (!m_.allFinite()) throw DomainError("density matrix has non-finite entries");
  const double dev = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-12) throw DomainError("density matrix is not Hermitian (deviation " + std::to_string(dev) + ")");
}

void DensityOperator::validate(bool normalized) const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw DomainError("density matrix is not positive semidefinite");
  if (normalized && std::abs(trace() - 1.0) > 1e-8 + tail_) throw DomainError("density matrix trace differs from 1");
}

DensityOperator DensityOperator::normalized() const {
  const double t = trace();
  if (!(t > 0.0)) throw DomainError("cannot normalize a state with zero trace");
  return {m_ / t, dims_, tail_ / t, (spread_ + (tail_ > 0.0 ? std::abs(1.0 - t) : 0.0)) / t};
}

// ---------------------------------------------------------------- KrausChannel

KrausChannel::KrausChannel(std::vector<CMatrix> ops, Dims in_dims, Dims out_dims, bool truncated)
    : ops_(std::move(ops)), in_(std::move(in_dims)), out_(std::move(out_dims)), truncated_(truncated) {
  if (ops_.empty()) throw DomainError("channel needs at least one Kraus operator");
  for (const auto& k : ops_)
    if (k.rows() != product(out_) || k.cols() != product(in_)) throw DomainError("Kraus operator has wrong shape");
}

double KrausChannel::trace_defect() const {
  const auto n = static_cast<Eigen::Index>(product(in_));
  CMatrix sum = CMatrix::Zero(n, n);
  for (const auto& k : ops_) sum += k.adjoint() * k;
  return (sum - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

DensityOperator KrausChannel::apply(const DensityOperator& rho) const {
  if (rho.dims() != in_) throw DomainError("channel input dims do not match the state");
  const auto n = static_cast<Eigen::Index>(product(out_));
  CMatrix out = CMatrix::Zero(n, n);
  for (const auto& k : ops_) out.noalias() += k * rho.matrix() * k.adjoint();
  out = hermitian_part(out);
  double lost = trace_loss(rho.trace(), out.trace().real());
  if (truncated_) lost = std::max(lost, kLeakMarker);
  // generic operators mix levels; dropped Kraus terms of a truncated set may land anywhere
  const double spread = mixed_spread(rho.spread(), rho.tail()) + (truncated_ ? lost : 0.0);
  return {std::move(out), out_, rho.tail() + lost, spread};
}

KrausChannel tensor(const KrausChannel& a, const KrausChannel& b) {
  std::vector<CMatrix> ops;
  ops.reserve(a.ops().size() * b.ops().size());
  for (const auto& ka : a.ops())
    for (const auto& kb : b.ops()) ops.push_back(kron(ka, kb));
  Dims in = a.in_dims(), out = a.out_dims();
  in.insert(in.end(), b.in_dims().begin(), b.in_dims().end());
  out.insert(out.end(), b.out_dims().begin(), b.out_dims().end());
  return {std::move(ops), std::move(in), std::move(out), a.truncated() || b.truncated()};
}

KrausChannel compose(const KrausChannel& second, const KrausChannel& first) {
  if (first.out_dims() != second.in_dims()) throw DomainError("cannot compose channels with mismatched dims");
  std::vector<CMatrix> ops;
  ops.reserve(first.ops().size() * second.ops().size());
  for (const auto& k2 : second.ops())
    for (const auto& k1 : first.ops()) ops.push_back(k2 * k1);
  return {std::move(ops), first.in_dims(), second.out_dims(), first.truncated() || second.truncated()};
}

// ---------------------------------------------------------------- states

int recommended_dim(double abs_alpha) {
  return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 6.0 * abs_alpha + 10.0));
}

double coherent_tail_mass(double abs_alpha, int dim) {
  const double x = abs_alpha * abs_alpha;
  if (x == 0.0) return dim <= 0 ? 1.0 : 0.0;
  double sum = 0.0;
  for (int n = dim;; ++n) {
    const double term = std::exp(-x + n * std::log(x) - log_factorial(n));
    sum += term;
    if (n > x && term < 1e-30 * std::max(sum, 1e-300)) break;
    if (n > dim + 100000) break;
  }
  return sum;
}

FockVector make_coherent(cplx alpha, int dim, double eps) {
  if (dim < 2) throw DomainError("dim must be >= 2");
  const double a = std::abs(alpha);
  const double tail = coherent_tail_mass(a, dim);
  if (tail > eps)
    throw TruncationError("dim " + std::to_string(dim) + " too small for coherent amplitude " + std::to_string(a) +
                          " (tail " + std::to_string(tail) + ")");
  CVector c = CVector::Zero(dim);
  c(0) = std::exp(-a * a / 2.0);
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return {std::move(c), {dim}, tail};
}

FockVector make_cat(cplx alpha, int dim, double eps) {
  const auto plus = make_coherent(alpha, dim, eps);
  CVector c = plus.amplitudes();
  for (int n = 1; n < dim; n += 2) c(n) = 0.0;
  const double a2 = std::norm(alpha);
  const double tail = std::min(1.0, 2.0 * plus.tail() / (1.0 + std::exp(-2.0 * a2)));
  return FockVector(std::move(c), {dim}, tail).normalized();
}

FockVector make_fock(int n, int dim) {
  if (dim < 2) throw DomainError("dim must be >= 2");
  if (n < 0 || n >= dim) throw DomainError("Fock level outside the truncated space");
  CVector c = CVector::Zero(dim);
  c(n) = 1.0;
  return {std::move(c), {dim}};
}

FockVector make_squeezed_vacuum(double r, int dim, double angle, double eps) {
  if (dim < 2) throw DomainError("dim must be >= 2");
  if (r < 0.0) throw DomainError("squeezing must be >= 0");
  const double t = std::tanh(r);
  // |c_{2k}|^2 = t^{2k} (2k)! / (4^k k!^2) / cosh r
  auto log_mag2 = [&](int k) {
    return 2.0 * k * std::log(t) + log_factorial(2 * k) - 2.0 * k * std::log(2.0) - 2.0 * log_factorial(k) -
           std::log(std::cosh(r));
  };
  CVector c = CVector::Zero(dim);
  c(0) = 1.0 / std::sqrt(std::cosh(r));
  for (int k = 1; 2 * k < dim; ++k) c(2 * k) = std::polar(std::exp(0.5 * log_mag2(k)), k * (angle + std::numbers::pi));
  double tail = 0.0;
  if (r > 0.0) {
    for (int k = (dim + 1) / 2; k < (dim + 1) / 2 + 200000; ++k) {
      const double term = std::exp(log_mag2(k));
      tail += term;
      if (term < 1e-30 * std::max(tail, 1e-300)) break;
    }
  }
  if (tail > eps) throw TruncationError("dim too small for squeezed vacuum (tail " + std::to_string(tail) + ")");
  return {std::move(c), {dim}, tail};
}

FockVector make_two_mode_squeezed(double r, int dim, double eps) {
  if (dim < 2) throw DomainError("dim must be >= 2");
  const double t = std::tanh(r);
  const double tail = std::pow(t, 2.0 * dim);
  if (tail > eps) throw TruncationError("dim too small for two-mode squeezed vacuum");
  CVector c = CVector::Zero(static_cast<Eigen::Index>(dim) * dim);
  for (int n = 0; n < dim; ++n) c(static_cast<Eigen::Index>(n) * dim + n) = std::pow(t, n) / std::cosh(r);
  return {std::move(c), {dim, dim}, tail};
}

DensityOperator make_lossy_photon(double q, int dim) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("q must lie in [0, 1]");
  if (dim < 3) throw DomainError("lossy photon needs dim >= 3");
  CMatrix m = CMatrix::Zero(dim, dim);
  m(0, 0) = 1.0 - q;
  m(1, 1) = q;
  return {std::move(m), {dim}};
}

DensityOperator make_thermal(double mean_photons, int dim) {
  if (mean_photons < 0.0) throw DomainError("mean photon number must be >= 0");
  if (dim < 2) throw DomainError("dim must be >= 2");
  const double x = mean_photons / (1.0 + mean_photons);
  CMatrix m = CMatrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = std::pow(x, n) / (1.0 + mean_photons);
  return {std::move(m), {dim}, std::pow(x, dim)};
}

// ---------------------------------------------------------------- composition

FockVector tensor(const FockVector& a, const FockVector& b) {
  CVector c(a.amplitudes().size() * b.amplitudes().size());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i)
    c.segment(i * b.amplitudes().size(), b.amplitudes().size()) = a.amplitudes()(i) * b.amplitudes();
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return {std::move(c), std::move(dims), a.tail() + b.tail() - a.tail() * b.tail(),
          a.spread() + b.spread() + a.spread() * b.spread()};
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return {kron(a.matrix(), b.matrix()), std::move(dims), a.tail() + b.tail() - a.tail() * b.tail(),
          a.spread() + b.spread() + a.spread() * b.spread()};
}

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& keep) {
  const Dims& dims = rho.dims();
  const int n = rho.modes();
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    check_mode(dims, k);
    if (kept[k]) throw DomainError("duplicate mode in partial trace");
    kept[k] = true;
  }
  if (keep.empty()) throw DomainError("partial trace must keep at least one mode");

  std::vector<long long> stride(n);
  long long s = 1;
  for (int m = n - 1; m >= 0; --m) {
    stride[m] = s;
    s *= dims[m];
  }
  // Enumerate offsets of kept and traced subsystems (kept modes in increasing order).
  auto offsets = [&](bool want_kept) {
    std::vector<long long> offs{0};
    for (int m = 0; m < n; ++m) {
      if (kept[m] != want_kept) continue;
      std::vector<long long> next;
      next.reserve(offs.size() * dims[m]);
      for (long long o : offs)
        for (int v = 0; v < dims[m]; ++v) next.push_back(o + v * stride[m]);
      offs = std::move(next);
    }
    return offs;
  };
  const auto ko = offsets(true);
  const auto to = offsets(false);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  CMatrix out = CMatrix::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a)
    for (Eigen::Index b = 0; b < dk; ++b) {
      cplx acc = 0.0;
      for (long long t : to) acc += rho.matrix()(ko[a] + t, ko[b] + t);
      out(a, b) = acc;
    }
  Dims kd;
  for (int m = 0; m < n; ++m)
    if (kept[m]) kd.push_back(dims[m]);
  // traced-out levels beyond the cut would have added a PSD piece of trace <= tail
  return {hermitian_part(out), std::move(kd), rho.tail(), rho.spread() + rho.tail()};
}

namespace {
std::vector<Eigen::Index> embedding_map(const Dims& from, const Dims& to) {
  if (from.size() != to.size()) throw DomainError("embedding needs the same number of modes");
  for (std::size_t m = 0; m < from.size(); ++m)
    if (to[m] < from[m]) throw DomainError("embedding cannot shrink a mode");
  const auto n = static_cast<Eigen::Index>(product(from));
  std::vector<Eigen::Index> map(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index rem = i, idx = 0, stride = 1;
    for (int m = static_cast<int>(from.size()) - 1; m >= 0; --m) {
      idx += (rem % from[m]) * stride;
      rem /= from[m];
      stride *= to[m];
    }
    map[i] = idx;
  }
  return map;
}
}  // namespace

DensityOperator embed(const DensityOperator& rho, const Dims& dims) {
  const auto map = embedding_map(rho.dims(), dims);
  const auto n = static_cast<Eigen::Index>(product(dims));
  CMatrix out = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j) out(map[i], map[j]) = rho.matrix()(i, j);
  return {std::move(out), dims, rho.tail(), rho.spread()};
}

FockVector embed(const FockVector& psi, const Dims& dims) {
  const auto map = embedding_map(psi.dims(), dims);
  CVector out = CVector::Zero(static_cast<Eigen::Index>(product(dims)));
  for (std::size_t i = 0; i < map.size(); ++i) out(map[i]) = psi.amplitudes()(i);
  return {std::move(out), dims, psi.tail(), psi.spread()};
}

DensityOperator mix(const std::vector<std::pair<double, DensityOperator>>& parts) {
  if (parts.empty()) throw DomainError("mixture needs at least one state");
  double total = 0.0;
  for (const auto& [w, r] : parts) {
    if (w < 0.0) throw DomainError("mixture weights must be non-negative");
    if (r.dims() != parts.front().second.dims()) throw DomainError("mixture components have different dims");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
  CMatrix m = CMatrix::Zero(parts.front().second.size(), parts.front().second.size());
  double tail = 0.0, spread = 0.0;
  for (const auto& [w, r] : parts) {
    m += w * r.matrix();
    tail += w * r.tail();
    spread += w * r.spread();
  }
  return {hermitian_part(m), parts.front().second.dims(), tail, spread};
}

CMatrix lift_mode_operator(const CMatrix& op, const Dims& dims, int mode) {
  check_mode(dims, mode);
  if (op.cols() != dims[mode]) throw DomainError("operator does not match the mode dimension");
  long long before = 1, after = 1;
  for (int m = 0; m < mode; ++m) before *= dims[m];
  for (int m = mode + 1; m < static_cast<int>(dims.size()); ++m) after *= dims[m];
  CMatrix out = op;
  if (after > 1) out = kron(out, CMatrix::Identity(after, after));
  if (before > 1) out = kron(CMatrix::Identity(before, before), out);
  return out;
}

// ---------------------------------------------------------------- passive unitaries

SparseCMatrix beam_splitter(double theta, int dim_a, int dim_b) {
  if (dim_a < 2 || dim_b < 2) throw DomainError("beam splitter dims must be >= 2");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int total = 0; total <= dim_a + dim_b - 2; ++total) {
    const int size = total + 1;  // basis |k, total-k>, k = 0..total
    CMatrix h = CMatrix::Zero(size, size);
    for (int k = 0; k < total; ++k) {
      // a^dag b |k, total-k> = sqrt((k+1)(total-k)) |k+1, total-k-1>
      const double g = std::sqrt((k + 1.0) * (total - k));
      h(k + 1, k) += cplx(0.0, g);
      h(k, k + 1) += cplx(0.0, -g);
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CVector phase = (es.eigenvalues().cast<cplx>() * cplx(0.0, -theta)).array().exp();
    const CMatrix u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    for (int out = std::max(0, total - dim_b + 1); out <= std::min(total, dim_a - 1); ++out)
      for (int in = std::max(0, total - dim_b + 1); in <= std::min(total, dim_a - 1); ++in) {
        const cplx v = u(out, in);
        if (std::abs(v) < 1e-300) continue;
        trip.emplace_back(static_cast<int>(static_cast<long long>(out) * dim_b + (total - out)),
                          static_cast<int>(static_cast<long long>(in) * dim_b + (total - in)), v);
      }
  }
  SparseCMatrix u(static_cast<Eigen::Index>(dim_a) * dim_b, static_cast<Eigen::Index>(dim_a) * dim_b);
  u.setFromTriplets(trip.begin(), trip.end());
  return u;
}

namespace {
double oriented_theta(int modes, int mode_a, int mode_b, double theta) {
  if (modes != 2) throw DomainError("beam splitter acts on two-mode states");
  if (mode_a == 0 && mode_b == 1) return theta;
  if (mode_a == 1 && mode_b == 0) return -theta;
  throw DomainError("beam splitter modes must be {0, 1}");
}
}  // namespace

FockVector apply_beam_splitter(const FockVector& psi, double theta, int mode_a, int mode_b) {
  const double th = oriented_theta(psi.modes(), mode_a, mode_b, theta);
  const auto u = beam_splitter(th, psi.dims()[0], psi.dims()[1]);
  CVector out = u * psi.amplitudes();
  const double lost = trace_loss(psi.amplitudes().squaredNorm(), out.squaredNorm());
  return {std::move(out), psi.dims(), psi.tail() + lost, mixed_spread(psi.spread(), psi.tail())};
}

DensityOperator apply_beam_splitter(const DensityOperator& rho, double theta, int mode_a, int mode_b) {
  const double th = oriented_theta(rho.modes(), mode_a, mode_b, theta);
  const SparseCMatrix u = beam_splitter(th, rho.dims()[0], rho.dims()[1]);
  const CMatrix left = u * rho.matrix();
  CMatrix out = (u * left.adjoint()).adjoint();
  out = hermitian_part(out);
  const double lost = trace_loss(rho.trace(), out.trace().real());
  return {std::move(out), rho.dims(), rho.tail() + lost, mixed_spread(rho.spread(), rho.tail())};
}

DensityOperator phase_rotate(const DensityOperator& rho, int mode, double phi) {
  check_mode(rho.dims(), mode);
  const int d = rho.dims()[mode];
  CMatrix r = CMatrix::Zero(d, d);
  for (int n = 0; n < d; ++n) r(n, n) = std::polar(1.0, -phi * n);
  return conjugate(lift_mode_operator(r, rho.dims(), mode), rho, rho.dims());
}

CMatrix displacement_matrix(cplx alpha, int dim_out, int dim_in) {
  if (dim_out < 1 || dim_in < 1) throw DomainError("displacement dims must be positive");
  const double x = std::norm(alpha);
  if (x == 0.0) return CMatrix::Identity(dim_out, dim_in);
  const double mag = std::abs(alpha), phase = std::arg(alpha);
  detail::quiet_gsl();
  // <m|D|n> = e^{-x/2} sqrt(n!/m!) alpha^{m-n} L_n^{(m-n)}(x) for m >= n, and the adjoint form otherwise.
  // A plain ladder recurrence loses ~10 digits at |alpha| = 2, dim = 25.
  CMatrix d(dim_out, dim_in);
  for (int m = 0; m < dim_out; ++m)
    for (int n = 0; n < dim_in; ++n) {
      const int lo = std::min(m, n), k = std::abs(m - n);
      gsl_sf_result res;
      if (gsl_sf_laguerre_n_e(lo, k, x, &res) != GSL_SUCCESS) throw DomainError("Laguerre evaluation failed");
      const double lag = res.val;
      if (lag == 0.0) {
        d(m, n) = 0.0;
        continue;
      }
      const double logmag = 0.5 * (log_factorial(lo) - log_factorial(lo + k)) + k * std::log(mag) - 0.5 * x +
                            std::log(std::abs(lag));
      const double sign = lag < 0.0 ? -1.0 : 1.0;
      // m < n picks up (-alpha*)^{n-m}
      const double ph = m >= n ? k * phase : k * (std::numbers::pi - phase);
      d(m, n) = std::polar(sign * std::exp(logmag), ph);
    }
  return d;
}

DensityOperator displace(const DensityOperator& rho, int mode, cplx alpha, std::optional<int> out_dim) {
  check_mode(rho.dims(), mode);
  const int din = rho.dims()[mode];
  const int dout = out_dim.value_or(din);
  if (dout < 2) throw DomainError("output dim must be >= 2");
  Dims od = rho.dims();
  od[mode] = dout;
  return conjugate(lift_mode_operator(displacement_matrix(alpha, dout, din), rho.dims(), mode), rho, od,
                   alpha != cplx(0.0));
}

// ---------------------------------------------------------------- noise

KrausChannel loss_kraus(double t, int dim) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("transmissivity must lie in [0, 1]");
  if (dim < 2) throw DomainError("dim must be >= 2");
  std::vector<CMatrix> ops;
  for (int k = 0; k < dim; ++k) {
    CMatrix op = CMatrix::Zero(dim, dim);
    for (int n = k; n < dim; ++n) {
      const double logc = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
      op(n - k, n) = std::exp(0.5 * logc) * std::pow(t, 0.5 * (n - k)) * std::pow(1.0 - t, 0.5 * k);
    }
    ops.push_back(std::move(op));
  }
  return {std::move(ops), {dim}, {dim}};
}

DensityOperator loss_channel(const DensityOperator& rho, double t, int mode) {
  check_mode(rho.dims(), mode);
  const auto k = loss_kraus(t, rho.dims()[mode]);
  CMatrix out = CMatrix::Zero(rho.size(), rho.size());
  for (const auto& op : k.ops()) {
    const CMatrix lifted = lift_mode_operator(op, rho.dims(), mode);
    out.noalias() += lifted * rho.matrix() * lifted.adjoint();
  }
  // loss moves missing high levels down into the stored ones
  return {hermitian_part(out), rho.dims(), rho.tail(), mixed_spread(rho.spread(), rho.tail())};
}

int required_noise_headroom(double delta) { return static_cast<int>(std::ceil(4.0 * delta)); }

KrausChannel thermal_noise_kraus(double delta, int dim_in, int dim_out, int order) {
  if (delta < 0.0) throw DomainError("noise width must be >= 0");
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  if (delta == 0.0) return {{CMatrix::Identity(dim_out, dim_in)}, {dim_in}, {dim_out}};
  // (1/(pi delta)) e^{-|b|^2/delta} d^2b with b = s u, s^2 = delta/(1+delta), leaves the weight
  // e^{-|u|^2} times a polynomial once the e^{-|b|^2} inside D(b) rho D(b)^dag is pulled out.
  std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, order, 0.0, 1.0, 0.0, 0.0),
      gsl_integration_fixed_free);
  if (!ws) throw DomainError("failed to allocate Gauss-Hermite rule");
  const double* x = gsl_integration_fixed_nodes(ws.get());
  const double* w = gsl_integration_fixed_weights(ws.get());
  const double s2 = delta / (1.0 + delta);
  const double s = std::sqrt(s2);
  std::vector<CMatrix> ops;
  ops.reserve(static_cast<std::size_t>(order) * order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) {
      const double weight =
          w[i] * w[j] * std::exp(s2 * (x[i] * x[i] + x[j] * x[j])) / (std::numbers::pi * (1.0 + delta));
      ops.push_back(std::sqrt(weight) * displacement_matrix(cplx(s * x[i], s * x[j]), dim_out, dim_in));
    }
  return {std::move(ops), {dim_in}, {dim_out}, true};
}

DensityOperator thermal_noise_channel(const DensityOperator& rho, double delta, const ThermalNoiseOptions& opt) {
  if (delta < 0.0) throw DomainError("noise width must be >= 0");
  const int need = required_noise_headroom(delta);
  const int headroom = opt.headroom.value_or(need);
  if (headroom < need && !opt.allow_short_headroom)
    throw TruncationError("thermal noise needs " + std::to_string(need) + " extra levels per mode, got " +
                          std::to_string(headroom));
  if (headroom < 0) throw DomainError("headroom must be >= 0");
  DensityOperator cur = rho;
  for (int mode = 0; mode < rho.modes(); ++mode) {
    const int din = cur.dims()[mode];
    const auto k = thermal_noise_kraus(delta, din, din + headroom, opt.order);
    Dims od = cur.dims();
    od[mode] = din + headroom;
    const auto n = static_cast<Eigen::Index>(product(od));
    CMatrix out = CMatrix::Zero(n, n);
    for (const auto& op : k.ops()) {
      const CMatrix lifted = lift_mode_operator(op, cur.dims(), mode);
      out.noalias() += lifted * cur.matrix() * lifted.adjoint();
    }
    out = hermitian_part(out);
    const double lost = std::max(trace_loss(cur.trace(), out.trace().real()), delta > 0.0 ? kLeakMarker : 0.0);
    cur = DensityOperator(std::move(out), std::move(od), cur.tail() + lost,
                          mixed_spread(cur.spread(), cur.tail()) + lost);
  }
  return cur;
}

// ---------------------------------------------------------------- measurement

namespace {
// `local`: the ket lives on a single stored level, so levels beyond the cut do not enter.
Projection project_onto(const DensityOperator& rho, int mode, const CVector& ket, bool local) {
  check_mode(rho.dims(), mode);
  if (rho.modes() < 2) throw DomainError("projection needs at least two modes");
  const CMatrix bra = ket.adjoint();
  const CMatrix k = lift_mode_operator(bra, rho.dims(), mode);
  CMatrix cond = hermitian_part(k * rho.matrix() * k.adjoint());
  const double p = cond.trace().real();
  if (!(p >= 1e-14)) throw DomainError("projection outcome has vanishing probability");
  const double tail = std::min(1.0, rho.tail() / p);
  // renormalizing by an estimated probability doubles the error
  const double err = local ? rho.spread() : mixed_spread(rho.spread(), rho.tail());
  return {p, p / std::numbers::pi, DensityOperator(cond / p, drop_mode(rho.dims(), mode), tail, 2.0 * err / p)};
}
}  // namespace

Projection project_coherent(const DensityOperator& rho, int mode, cplx xi) {
  check_mode(rho.dims(), mode);
  const int d = rho.dims()[mode];
  CVector c(d);
  c(0) = std::exp(-std::norm(xi) / 2.0);
  for (int n = 1; n < d; ++n) c(n) = c(n - 1) * xi / std::sqrt(static_cast<double>(n));
  return project_onto(rho, mode, c, false);
}

Projection project_fock(const DensityOperator& rho, int mode, int n) {
  check_mode(rho.dims(), mode);
  if (n < 0 || n >= rho.dims()[mode]) throw DomainError("Fock level outside the truncated space");
  CVector e = CVector::Zero(rho.dims()[mode]);
  e(n) = 1.0;
  return project_onto(rho, mode, e, true);
}

std::pair<double, FockVector> project_fock(const FockVector& psi, int mode, int n) {
  check_mode(psi.dims(), mode);
  if (psi.modes() < 2) throw DomainError("projection needs at least two modes");
  if (n < 0 || n >= psi.dims()[mode]) throw DomainError("Fock level outside the truncated space");
  const Dims& dims = psi.dims();
  long long before = 1, after = 1;
  for (int m = 0; m < mode; ++m) before *= dims[m];
  for (int m = mode + 1; m < psi.modes(); ++m) after *= dims[m];
  CVector out(before * after);
  for (long long b = 0; b < before; ++b)
    for (long long a = 0; a < after; ++a) out(b * after + a) = psi.amplitudes()((b * dims[mode] + n) * after + a);
  const double p = out.squaredNorm();
  if (!(p >= 1e-14)) throw DomainError("projection outcome has vanishing probability");
  const double tail = std::min(1.0, psi.tail() / p);
  return {p, FockVector(out / std::sqrt(p), drop_mode(dims, mode), tail, 2.0 * psi.spread() / p)};
}

// ---------------------------------------------------------------- diagnostics

double fidelity(const FockVector& a, const FockVector& b) {
  if (a.dims() != b.dims()) throw DomainError("fidelity needs equal dims");
  return std::norm(a.amplitudes().dot(b.amplitudes())) / (a.amplitudes().squaredNorm() * b.amplitudes().squaredNorm());
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("trace distance needs equal shapes");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double mean_photon_number(const DensityOperator& rho, int mode) {
  check_mode(rho.dims(), mode);
  const Dims& dims = rho.dims();
  long long after = 1;
  for (int m = mode + 1; m < rho.modes(); ++m) after *= dims[m];
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) acc += static_cast<double>((i / after) % dims[mode]) * rho.matrix()(i, i).real();
  return acc;
}

}  // namespace qres
