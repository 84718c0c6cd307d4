#include "qres/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qres {

namespace {
CMatrix hermitize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

void check_dim_guard(int d_in, int d_out, int max_dim) {
  if (d_in < 1 || d_out < 1) throw DomainError("channel dims must be positive");
  if (static_cast<long long>(d_in) * d_out > max_dim)
    throw DomainError("d_in * d_out exceeds the configured maximum " + std::to_string(max_dim));
}

// eta without the positivity check, used inside the optimizer.
double eta_unchecked(const CMatrix& rho) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    const double pi = rho(i, i).real();
    if (pi <= 0.0) continue;
    for (Eigen::Index j = i + 1; j < rho.rows(); ++j) {
      const double pj = rho(j, j).real();
      if (pj <= 0.0) continue;
      best = std::max(best, std::abs(rho(i, j)) / std::sqrt(pi * pj));
    }
  }
  return std::min(best, 1.0);
}
}  // namespace

ChoiMatrix::ChoiMatrix(CMatrix matrix, int d_in, int d_out) : m_(std::move(matrix)), d_in_(d_in), d_out_(d_out) {
  if (d_in < 1 || d_out < 1) throw DomainError("channel dims must be positive");
  const auto n = static_cast<Eigen::Index>(d_in) * d_out;
  if (m_.rows() != n || m_.cols() != n) throw DomainError("Choi matrix must be (d_in d_out) x (d_in d_out)");
  if (!m_.allFinite()) throw DomainError("Choi matrix has non-finite entries");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw DomainError("Choi matrix is not Hermitian");
}

double ChoiMatrix::trace_defect() const {
  CMatrix tr = CMatrix::Zero(d_in_, d_in_);
  for (int i = 0; i < d_in_; ++i)
    for (int j = 0; j < d_in_; ++j) tr(i, j) = m_.block(i * d_out_, j * d_out_, d_out_, d_out_).trace();
  return (tr - CMatrix::Identity(d_in_, d_in_)).cwiseAbs().maxCoeff();
}

void ChoiMatrix::validate() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-10) throw DomainError("Choi matrix is not positive semidefinite");
  if (trace_defect() > 1e-8) throw DomainError("Choi matrix is not trace preserving");
}

ChoiMatrix choi_from_kraus(const std::vector<CMatrix>& kraus, int d_in, int d_out) {
  const auto n = static_cast<Eigen::Index>(d_in) * d_out;
  CMatrix d = CMatrix::Zero(n, n);
  for (const auto& k : kraus) {
    if (k.rows() != d_out || k.cols() != d_in) throw DomainError("Kraus operator has wrong shape");
    CVector v(n);
    for (int i = 0; i < d_in; ++i)
      for (int a = 0; a < d_out; ++a) v(i * d_out + a) = k(a, i);
    d += v * v.adjoint();
  }
  return {hermitize(d), d_in, d_out};
}

ChoiMatrix identity_channel(int d) { return choi_from_kraus({CMatrix::Identity(d, d)}, d, d); }

ChoiMatrix dephasing_channel(int d) {
  std::vector<CMatrix> ops;
  for (int k = 0; k < d; ++k) {
    CMatrix p = CMatrix::Zero(d, d);
    p(k, k) = 1.0;
    ops.push_back(p);
  }
  return choi_from_kraus(ops, d, d);
}

ChoiMatrix unitary_channel(const CMatrix& u) {
  if (u.rows() != u.cols()) throw DomainError("unitary must be square");
  return choi_from_kraus({u}, static_cast<int>(u.cols()), static_cast<int>(u.rows()));
}

CMatrix haar_isometry(int rows, int cols, std::mt19937_64& rng) {
  if (rows < cols) throw DomainError("isometry needs rows >= cols");
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  CMatrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = cplx(re, im);
    }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < cols; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

ChoiMatrix random_channel(int d_in, int d_out, int kraus_rank, std::uint64_t seed, int max_dim) {
  check_dim_guard(d_in, d_out, max_dim);
  if (kraus_rank < 1) throw DomainError("Kraus rank must be >= 1");
  if (static_cast<long long>(d_out) * kraus_rank < d_in) throw DomainError("d_out * rank must be >= d_in");
  std::mt19937_64 rng(seed);
  const CMatrix v = haar_isometry(d_out * kraus_rank, d_in, rng);
  // V maps into output (x) environment; row index a * rank + e.
  std::vector<CMatrix> kraus(kraus_rank, CMatrix::Zero(d_out, d_in));
  for (int a = 0; a < d_out; ++a)
    for (int e = 0; e < kraus_rank; ++e) kraus[e].row(a) = v.row(a * kraus_rank + e);
  return choi_from_kraus(kraus, d_in, d_out);
}

CMatrix apply(const ChoiMatrix& phi, const CMatrix& rho) {
  const int di = phi.d_in(), d = phi.d_out();
  if (rho.rows() != di || rho.cols() != di) throw DomainError("input dimension does not match the channel");
  CMatrix out = CMatrix::Zero(d, d);
  for (int i = 0; i < di; ++i)
    for (int j = 0; j < di; ++j) out.noalias() += rho(i, j) * phi.matrix().block(i * d, j * d, d, d);
  return out;
}

CMatrix apply_adjoint(const ChoiMatrix& phi, const CMatrix& x) {
  const int di = phi.d_in(), d = phi.d_out();
  if (x.rows() != d || x.cols() != d) throw DomainError("operator dimension does not match the channel output");
  CMatrix out(di, di);
  for (int i = 0; i < di; ++i)
    for (int j = 0; j < di; ++j) out(j, i) = (phi.matrix().block(i * d, j * d, d, d) * x).trace();
  return out;
}

ChoiMatrix tensor(const ChoiMatrix& a, const ChoiMatrix& b, int max_dim) {
  const int ia = a.d_in(), oa = a.d_out(), ib = b.d_in(), ob = b.d_out();
  check_dim_guard(ia * ib, oa * ob, max_dim);
  const int di = ia * ib, d = oa * ob;
  CMatrix m(static_cast<Eigen::Index>(di) * d, static_cast<Eigen::Index>(di) * d);
  auto idx = [&](int i1, int i2, int a1, int a2) { return ((i1 * ib + i2) * oa + a1) * ob + a2; };
  for (int i1 = 0; i1 < ia; ++i1)
    for (int i2 = 0; i2 < ib; ++i2)
      for (int a1 = 0; a1 < oa; ++a1)
        for (int a2 = 0; a2 < ob; ++a2)
          for (int j1 = 0; j1 < ia; ++j1)
            for (int j2 = 0; j2 < ib; ++j2)
              for (int b1 = 0; b1 < oa; ++b1)
                for (int b2 = 0; b2 < ob; ++b2)
                  m(idx(i1, i2, a1, a2), idx(j1, j2, b1, b2)) =
                      a.matrix()(i1 * oa + a1, j1 * oa + b1) * b.matrix()(i2 * ob + a2, j2 * ob + b2);
  return {m, di, d};
}

// ---------------------------------------------------------------- eta optimization

double OptimizationReport::spread() const {
  if (per_start.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(per_start.begin(), per_start.end());
  return *hi - *lo;
}

CMatrix density_from_params(const RVector& p, int d) {
  if (p.size() != 2 * d * d) throw DomainError("parameter vector has the wrong length");
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(p(2 * (i * d + j)), p(2 * (i * d + j) + 1));
  CMatrix rho = a * a.adjoint();
  const double t = rho.trace().real();
  if (!(t > 1e-300)) return CMatrix::Identity(d, d) / static_cast<double>(d);
  return hermitize(rho / t);
}

RVector params_from_density(const CMatrix& rho) {
  const auto d = static_cast<int>(rho.rows());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(rho));
  const CMatrix a = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
  RVector p(2 * d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      p(2 * (i * d + j)) = a(i, j).real();
      p(2 * (i * d + j) + 1) = a(i, j).imag();
    }
  return p;
}

OptimizationReport output_max_coherence(const ChoiMatrix& phi, const EtaOptions& opt) {
  if (opt.starts < 0) throw DomainError("number of starts must be >= 0");
  const int d = phi.d_in();
  const int np = 2 * d * d;
  const int dout = phi.d_out();
  // eta is scale invariant, so the unnormalized A A^dag is pushed through the channel directly
  Objective objective = [&phi, d, dout, a = CMatrix(d, d), rho = CMatrix(d, d),
                         out = CMatrix(dout, dout)](Eigen::Ref<const RVector> p) mutable {
    if (p.squaredNorm() <= 1e-300) return -eta_unchecked(qres::apply(phi, CMatrix::Identity(d, d) / static_cast<double>(d)));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = cplx(p(2 * (i * d + j)), p(2 * (i * d + j) + 1));
    rho.noalias() = a * a.adjoint();
    out.setZero();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.noalias() += rho(i, j) * phi.matrix().block(i * dout, j * dout, dout, dout);
    return -eta_unchecked(out);
  };

  std::vector<RVector> x0;
  for (int s = 0; s < opt.starts; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss;
    RVector p = RVector::Zero(np);
    if (s % 2 == 1) {
      // pure start: a single nonzero column of the square-root factor
      for (int i = 0; i < d; ++i) {
        p(2 * (i * d)) = gauss(rng);
        p(2 * (i * d) + 1) = gauss(rng);
      }
    } else {
      for (int k = 0; k < np; ++k) p(k) = gauss(rng);
    }
    x0.push_back(std::move(p));
  }
  for (const auto& rho : opt.extra_inputs) {
    if (rho.rows() != d || rho.cols() != d) throw DomainError("extra input has the wrong dimension");
    x0.push_back(params_from_density(rho));
  }

  // eta never exceeds 1; a start that reaches it is done
  NelderMeadOptions simplex = opt.simplex;
  simplex.stop_below = std::max(simplex.stop_below, -1.0 + 1e-12);

  OptimizationReport rep;
  rep.starts = static_cast<int>(x0.size());
  rep.size_tol = opt.simplex.size_tol;
  rep.seed = opt.seed;
  rep.best = -std::numeric_limits<double>::infinity();
  RVector best_x;
  for (std::size_t s = 0; s < x0.size(); ++s) {
    const auto res = nelder_mead(objective, x0[s], simplex);
    const double v = -res.value;
    rep.per_start.push_back(v);
    rep.iterations.push_back(res.iterations);
    rep.converged.push_back(res.converged);
    if (v > rep.best) {
      rep.best = v;
      rep.best_index = static_cast<int>(s);
      best_x = res.x;
    }
  }
  if (rep.best_index < 0) {
    rep.best = 0.0;
    rep.best_input = CMatrix::Identity(d, d) / static_cast<double>(d);
  } else {
    rep.best_input = density_from_params(best_x, d);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rep.best_input, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  rep.best_input_rank = static_cast<int>((es.eigenvalues().array() > 1e-8 * top).count());
  return rep;
}

// ---------------------------------------------------------------- channel nonclassicality depth

InputFamily default_input_family(const Dims& dims, int cutoff) {
  InputFamily fam;
  if (dims.size() == 1) {
    const int d = dims[0];
    const int top = std::min(cutoff, d - 1);
    for (int n = 1; n <= top; ++n) fam.emplace_back("|" + std::to_string(n) + ">", make_fock(n, d).density());
    CVector s = CVector::Zero(d);
    s(0) = s(1) = 1.0 / std::sqrt(2.0);
    fam.emplace_back("(|0>+|1>)/sqrt2", FockVector(s, {d}).density());
    return fam;
  }
  if (dims.size() != 2) throw DomainError("input family supports one or two modes");
  const int da = dims[0], db = dims[1];
  auto ket = [&](std::vector<std::pair<int, int>> terms, const std::string& label) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(da) * db);
    for (auto [a, b] : terms) v(static_cast<Eigen::Index>(a) * db + b) = 1.0;
    fam.emplace_back(label, FockVector(v.normalized(), dims).density());
  };
  const int top = std::min({cutoff, da - 1, db - 1});
  for (int n = 1; n <= top; ++n) ket({{n, n}}, "|" + std::to_string(n) + "," + std::to_string(n) + ">");
  ket({{1, 0}}, "|1,0>");
  ket({{0, 1}}, "|0,1>");
  ket({{0, 1}, {1, 0}}, "(|0,1>+|1,0>)/sqrt2");
  ket({{0, 0}, {1, 1}}, "(|0,0>+|1,1>)/sqrt2");
  return fam;
}

ChannelDepthReport output_nc_depth(const KrausChannel& phi, const InputFamily& family, const NcDepthOptions& opt) {
  if (family.empty()) throw DomainError("input family is empty");
  ChannelDepthReport rep;
  rep.estimate.lower = 0.0;
  rep.estimate.upper = 0.0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto est = nc_depth(phi.apply(family[k].second), opt);
    rep.labels.push_back(family[k].first);
    rep.per_input.push_back(est);
    if (rep.best_index < 0 || est.lower > rep.estimate.lower) {
      rep.best_index = static_cast<int>(k);
    }
    rep.estimate.lower = std::max(rep.estimate.lower, est.lower);
    rep.estimate.upper = std::max(rep.estimate.upper, est.upper);
    rep.estimate.grid = est.grid;
    rep.estimate.extent = est.extent;
    rep.estimate.truncation_aware = rep.estimate.truncation_aware || est.truncation_aware;
    rep.estimate.grid_warning = rep.estimate.grid_warning || est.grid_warning;
    rep.estimate.unresolved = rep.estimate.unresolved || est.unresolved;
  }
  return rep;
}

}  // namespace qres
