#include "qres/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "detail.hpp"
#include "qres/optimize.hpp"

namespace qres {

// ---------------------------------------------------------------- QFI

namespace {

CMatrix annihilation(int dim) {
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

// Embed rho into a space with one extra level per mode.
CMatrix pad_one_level(const DensityOperator& rho, Dims& padded) {
  const Dims& dims = rho.dims();
  padded = dims;
  for (int& d : padded) d += 1;
  const int n = rho.modes();
  const auto size = static_cast<Eigen::Index>(product(padded));
  std::vector<Eigen::Index> map(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    Eigen::Index rem = i, idx = 0, stride = 1;
    for (int m = n - 1; m >= 0; --m) {
      idx += (rem % dims[m]) * stride;
      rem /= dims[m];
      stride *= padded[m];
    }
    map[i] = idx;
  }
  CMatrix out = CMatrix::Zero(size, size);
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    for (Eigen::Index j = 0; j < rho.size(); ++j) out(map[i], map[j]) = rho.matrix()(i, j);
  return out;
}

}  // namespace

QFIMatrix qfi_matrix(const DensityOperator& rho) {
  QFIMatrix result;
  result.modes = rho.modes();
  const Dims& dims = rho.dims();
  for (int m = 0; m < rho.modes(); ++m) {
    const int d = dims[m];
    CMatrix top = CMatrix::Zero(d, d);
    top(d - 1, d - 1) = 1.0;
    const double pop = (lift_mode_operator(top, dims, m).cwiseProduct(rho.matrix().transpose())).sum().real();
    if (pop > 1e-10)
      result.warnings.push_back("mode " + std::to_string(m) + " populates its highest Fock level (" +
                                std::to_string(pop) + ")");
  }

  Dims padded;
  const CMatrix big = pad_one_level(rho, padded);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(big);
  const RVector lam = es.eigenvalues().cwiseMax(0.0);
  const CMatrix& v = es.eigenvectors();
  const auto size = big.rows();

  RMatrix coeff = RMatrix::Zero(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) {
      const double s = lam(i) + lam(j);
      if (s < 1e-12) continue;
      const double d = lam(i) - lam(j);
      coeff(i, j) = d * d / s;
    }

  const int nq = 2 * rho.modes();
  std::vector<CMatrix> rq;
  rq.reserve(nq);
  for (int m = 0; m < rho.modes(); ++m) {
    const CMatrix a = lift_mode_operator(annihilation(padded[m]), padded, m);
    const CMatrix x = (a + a.adjoint()) / std::sqrt(2.0);
    const CMatrix p = (a - a.adjoint()) * cplx(0.0, -1.0 / std::sqrt(2.0));
    rq.push_back(v.adjoint() * x * v);
    rq.push_back(v.adjoint() * p * v);
  }
  RMatrix f(nq, nq);
  for (int k = 0; k < nq; ++k)
    for (int l = k; l < nq; ++l) {
      // (1/2) sum_ij c_ij <i|R_k|j><j|R_l|i>
      const cplx val = 0.5 * (coeff.cast<cplx>().cwiseProduct(rq[k]).cwiseProduct(rq[l].transpose())).sum();
      f(k, l) = f(l, k) = val.real();
    }
  result.matrix = 0.5 * (f + f.transpose());
  return result;
}

double metrological_power(const QFIMatrix& f) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(f.matrix, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff() - 0.5, 0.0);
}

double metrological_power(const DensityOperator& rho) { return metrological_power(qfi_matrix(rho)); }

// ---------------------------------------------------------------- nonclassicality depth

namespace {

struct Grid {
  std::vector<std::vector<cplx>> points;  // per mode
  std::vector<double> extent;
};

Grid make_grid(const DensityOperator& rho, const NcDepthOptions& opt, int g) {
  Grid grid;
  for (int m = 0; m < rho.modes(); ++m) {
    double r;
    if (opt.extent) {
      if (static_cast<int>(opt.extent->size()) != rho.modes()) throw DomainError("need one grid extent per mode");
      r = (*opt.extent)[m];
    } else {
      r = std::sqrt(2.0 * std::max(0.0, mean_photon_number(rho, m)) + 1.0) + opt.extent_margin;
    }
    grid.extent.push_back(r);
    std::vector<cplx> pts;
    pts.reserve(static_cast<std::size_t>(g) * g);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        const double x = g == 1 ? 0.0 : -r + 2.0 * r * i / (g - 1);
        const double y = g == 1 ? 0.0 : -r + 2.0 * r * j / (g - 1);
        pts.emplace_back(x, y);
      }
    grid.points.push_back(std::move(pts));
  }
  return grid;
}

// Truncation error from the last two blocks of `shell` levels. a_c is the sum of |rho_nm X_mn|
// over indices below d - c*shell; absolute values because the signed block sums can cancel while
// the missing terms do not. Blocks of two levels keep parity-structured states (cats, squeezed
// vacua) from producing empty blocks. A top block that is not smaller than the one below it means
// the series has not converged there and nothing can be certified.
double truncation_error(double a0, double a1, double a2) {
  // the block sums come from differences of nested sums, so anything near rounding counts as zero
  // and the same amount covers rounding in W itself, which can dominate where the terms cancel
  const double noise = 1e-14 * a0;
  const double top = a0 - a1, next = a1 - a2;
  if (top <= noise) return noise;
  if (!(top < next)) return INFINITY;
  return noise + top / (1.0 - top / next);
}

struct GridScan {
  double min = INFINITY;
  bool unresolved = false;  // some point had an unconverged series
  std::vector<std::pair<double, std::vector<cplx>>> best;  // lowest relative values, ascending
};

constexpr std::size_t kRefineSeeds = 3;

// Seeds are ranked by value over the absolute term sum: far from the state W is tiny and positive,
// while near the threshold the negative dip is small only relative to its surroundings.
double relative(double value, double scale) { return scale > 0.0 ? value / scale : value; }

void keep_best(GridScan& scan, double value, std::vector<cplx> at) {
  if (!std::isfinite(value)) return;
  if (scan.best.size() == kRefineSeeds && value >= scan.best.back().first) return;
  auto pos = std::upper_bound(scan.best.begin(), scan.best.end(), value,
                              [](double v, const auto& e) { return v < e.first; });
  scan.best.insert(pos, {value, std::move(at)});
  if (scan.best.size() > kRefineSeeds) scan.best.pop_back();
}

struct PointValue {
  double value;  // W + err
  double scale;  // sum of |terms|
};

// W + err at a single point, one amplitude per mode. Same estimate as the grid scan.
PointValue point_value(const DensityOperator& rho, const std::vector<cplx>& at, double tau, int shell) {
  const bool exact = rho.exact() || shell <= 0;
  const Dims& dims = rho.dims();
  CMatrix kern = quasiprob_kernel(at[0], tau, dims[0]);
  double norm = 1.0 / (std::numbers::pi * tau);
  if (rho.modes() == 2) {
    kern = detail::kron(kern, quasiprob_kernel(at[1], tau, dims[1]));
    norm *= norm;
  }
  const CMatrix mt = rho.matrix().transpose();
  const CMatrix prod = mt.cwiseProduct(kern);
  const double w = prod.sum().real() * norm;
  const double scale = prod.cwiseAbs().sum() * norm;
  if (exact) return {w, scale};
  const int d2 = rho.modes() == 2 ? dims[1] : 1;
  const int cut1[3] = {dims[0], dims[0] - shell, dims[0] - 2 * shell};
  const int cut2[3] = {d2, d2 - shell, d2 - 2 * shell};
  if (cut1[2] < 1 || (rho.modes() == 2 && cut2[2] < 1)) return {INFINITY, scale};
  const RMatrix ab = prod.cwiseAbs();
  double sum[3] = {0.0, 0.0, 0.0};
  for (Eigen::Index r = 0; r < ab.rows(); ++r)
    for (Eigen::Index q = 0; q < ab.cols(); ++q) {
      const auto r1 = r / d2, r2 = r % d2, q1 = q / d2, q2 = q % d2;
      for (int c = 0; c < 3; ++c) {
        const bool inside = rho.modes() == 1 ? std::max(r1, q1) < cut1[c]
                                             : std::max(r1, q1) < cut1[c] && std::max(r2, q2) < cut2[c];
        if (inside) sum[c] += ab(r, q);
      }
    }
  double err = norm * truncation_error(sum[0], sum[1], sum[2]);
  if (rho.spread() > 0.0) err += norm * rho.spread() * kern.norm();
  return {w + err, scale};
}

// Local descent from the best grid points; the grid alone misses minima between its nodes.
double refine_min(const DensityOperator& rho, const GridScan& scan, double tau, int shell, double spacing,
                  double stop_below) {
  double best = scan.min;
  const int modes = rho.modes();
  for (const auto& seed : scan.best) {
    RVector x0(2 * modes);
    for (int m = 0; m < modes; ++m) x0.segment(2 * m, 2) << seed.second[m].real(), seed.second[m].imag();
    auto at = [&](const RVector& x) {
      std::vector<cplx> pts;
      for (int m = 0; m < modes; ++m) pts.emplace_back(x(2 * m), x(2 * m + 1));
      return point_value(rho, pts, tau, shell);
    };
    auto f = [&](const RVector& x) {
      const PointValue p = at(x);
      return std::isfinite(p.value) ? relative(p.value, p.scale) : 1e300;
    };
    NelderMeadOptions nm;
    nm.initial_step = 0.5 * spacing;
    nm.size_tol = 1e-4 * spacing;
    nm.max_iter = 150 * modes;
    nm.restarts = 0;
    best = std::min(best, at(nelder_mead(f, x0, nm).x).value);
    if (best < stop_below) break;
  }
  return best;
}

// Minimum over the grid of W + err. Stops early once the value is below `stop_below`.
GridScan grid_min(const DensityOperator& rho, const Grid& grid, double tau, int shell, double stop_below) {
  const bool exact = rho.exact() || shell <= 0;
  // error already inside the stored levels: |tr(E X)| <= |E|_1 |X|_op <= spread |X|_F
  const double spread = rho.spread();
  const Dims& dims = rho.dims();
  const CMatrix& m = rho.matrix();
  const RMatrix mabs = exact ? RMatrix() : RMatrix(m.cwiseAbs());
  GridScan scan;
  if (rho.modes() == 1) {
    const int d = dims[0];
    const int c1 = d - shell, c2 = d - 2 * shell;
    const double norm = 1.0 / (std::numbers::pi * tau);
    const CMatrix mt = m.transpose();
    for (const cplx& a : grid.points[0]) {
      const CMatrix kern = quasiprob_kernel(a, tau, d);
      const CMatrix prod = mt.cwiseProduct(kern);
      const double w = prod.sum().real() * norm;
      const RMatrix ab = prod.cwiseAbs();
      double err = 0.0;
      if (!exact) {
        if (c2 < 1) {
          err = INFINITY;
        } else {
          err = norm * truncation_error(ab.sum(), ab.topLeftCorner(c1, c1).sum(), ab.topLeftCorner(c2, c2).sum());
          if (spread > 0.0) err += norm * spread * kern.norm();
        }
      }
      scan.unresolved |= std::isinf(err);
      scan.min = std::min(scan.min, w + err);
      if (scan.min < stop_below) return scan;
      keep_best(scan, relative(w + err, ab.sum() * norm), {a});
    }
    return scan;
  }
  if (rho.modes() != 2) throw DomainError("nonclassicality depth supports one or two modes");
  const int d1 = dims[0], d2 = dims[1];
  const bool can_cut = d1 - 2 * shell >= 1 && d2 - 2 * shell >= 1;
  const int cut1[3] = {d1, d1 - shell, d1 - 2 * shell}, cut2[3] = {d2, d2 - shell, d2 - 2 * shell};
  const bool track = !exact && can_cut;
  const double norm = 1.0 / std::pow(std::numbers::pi * tau, 2);
  std::vector<CMatrix> k2;
  k2.reserve(grid.points[1].size());
  for (const cplx& b : grid.points[1]) k2.push_back(quasiprob_kernel(b, tau, d2).transpose());
  for (const cplx& a : grid.points[0]) {
    const CMatrix x1 = quasiprob_kernel(a, tau, d1);
    const double x1_norm = spread > 0.0 ? x1.norm() : 0.0;
    // y(m2, n2) = sum_{m1 n1} rho_{(m1 m2),(n1 n2)} X1_{n1 m1}; ya_c the same with absolute values
    // restricted to m1, n1 < cut1[c]
    CMatrix y = CMatrix::Zero(d2, d2);
    RMatrix ya[3];
    if (track)
      for (auto& t : ya) t = RMatrix::Zero(d2, d2);
    for (int m1 = 0; m1 < d1; ++m1)
      for (int n1 = 0; n1 < d1; ++n1) {
        const cplx coef = x1(n1, m1);
        const Eigen::Index r0 = static_cast<Eigen::Index>(m1) * d2, c0 = static_cast<Eigen::Index>(n1) * d2;
        y += coef * m.block(r0, c0, d2, d2);
        if (!track) continue;
        const double ac = std::abs(coef);
        for (int c = 0; c < 3; ++c)
          if (m1 < cut1[c] && n1 < cut1[c]) ya[c] += ac * mabs.block(r0, c0, d2, d2);
      }
    for (std::size_t ib = 0; ib < k2.size(); ++ib) {
      const CMatrix& x2t = k2[ib];
      const double w = y.cwiseProduct(x2t).sum().real() * norm;
      double err = 0.0, s_full = 0.0;
      if (track) {
        const RMatrix x2a = x2t.cwiseAbs();
        double s[3];
        for (int c = 0; c < 3; ++c)
          s[c] = ya[c].topLeftCorner(cut2[c], cut2[c]).cwiseProduct(x2a.topLeftCorner(cut2[c], cut2[c])).sum();
        s_full = s[0];
        err = norm * truncation_error(s[0], s[1], s[2]);
        if (spread > 0.0) err += norm * spread * x1_norm * x2t.norm();
      } else if (!exact) {
        err = INFINITY;
      }
      scan.unresolved |= std::isinf(err);
      scan.min = std::min(scan.min, w + err);
      if (scan.min < stop_below) return scan;
      const double scale =
          (track ? s_full : y.cwiseAbs().cwiseProduct(x2t.cwiseAbs()).sum()) * norm;
      keep_best(scan, relative(w + err, scale), {a, grid.points[1][ib]});
    }
  }
  return scan;
}

DepthEstimate bisect_depth(const DensityOperator& rho, const NcDepthOptions& opt, int g) {
  if (!(opt.tol > 0.0)) throw DomainError("tolerance must be positive");
  if (g < 2) throw DomainError("grid needs at least 2 points per axis");
  const Grid grid = make_grid(rho, opt, g);
  DepthEstimate est;
  est.grid = g;
  est.extent = grid.extent;
  est.truncation_aware = !rho.exact();
  double spacing = INFINITY;
  for (double r : grid.extent) spacing = std::min(spacing, 2.0 * r / (g - 1));
  auto negative_at = [&](double tau) {
    const GridScan scan = grid_min(rho, grid, tau, opt.shell, -opt.eps_neg);
    bool negative = scan.min < -opt.eps_neg;
    if (!negative && opt.refine)
      negative = refine_min(rho, scan, tau, opt.shell, spacing, -opt.eps_neg) < -opt.eps_neg;
    if (!negative) est.unresolved |= scan.unresolved;
    return negative;
  };
  double lo = 0.0, hi = 1.0;
  if (est.truncation_aware && opt.coarse > 1) {
    // Certification fails at small tau where the truncated series stops converging, so a plain
    // bisection could step below the certifiable window. Walk down first.
    for (int k = opt.coarse - 1; k >= 1; --k) {
      const double tau = static_cast<double>(k) / opt.coarse;
      if (negative_at(tau)) {
        lo = tau;
        break;
      }
      hi = tau;
    }
  }
  while (hi - lo > opt.tol) {
    const double mid = 0.5 * (lo + hi);
    (negative_at(mid) ? lo : hi) = mid;
  }
  est.lower = lo;
  est.upper = hi;
  return est;
}

}  // namespace

double certified_min_quasiprob(const DensityOperator& rho, double tau, const NcDepthOptions& opt) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  return grid_min(rho, make_grid(rho, opt, opt.grid), tau, opt.shell, -INFINITY).min;
}

namespace {

// Depth of the pure Gaussian a single-mode state is consistent with. With b the Bogoliubov mode
// fitted to the covariance, <b^dag b> = sqrt(det V) - 1/2 bounds the weight outside its vacuum.
std::optional<double> pure_gaussian_depth(const DensityOperator& rho, double tol) {
  if (rho.modes() != 1 || rho.exact() || tol < 0.0 || rho.dims()[0] < 3) return std::nullopt;
  const CMatrix a = annihilation(rho.dims()[0]);
  const CMatrix& m = rho.matrix();
  const double tr = m.trace().real();
  const cplx mean = (m * a).trace() / tr;
  const double n = (m * a.adjoint() * a).trace().real() / tr - std::norm(mean);
  const cplx sq = (m * a * a).trace() / tr - mean * mean;
  const double det = std::pow(n + 0.5, 2) - std::norm(sq);
  if (!(det > 0.0) || std::sqrt(det) - 0.5 > tol) return std::nullopt;
  const double lambda_min = n + 0.5 - std::abs(sq);
  return std::clamp(0.5 - lambda_min, 0.0, 1.0);
}

}  // namespace

DepthEstimate nc_depth(const DensityOperator& rho, const NcDepthOptions& opt) {
  if (const auto g = pure_gaussian_depth(rho, opt.gaussian_tol)) {
    if (!(opt.tol > 0.0)) throw DomainError("tolerance must be positive");
    DepthEstimate est;
    est.lower = std::max(0.0, *g - 0.5 * opt.tol);
    est.upper = std::min(1.0, *g + 0.5 * opt.tol);
    est.truncation_aware = true;
    est.gaussian = true;
    return est;
  }
  DepthEstimate est = bisect_depth(rho, opt, opt.grid);
  if (opt.check_refinement) {
    const DepthEstimate fine = bisect_depth(rho, opt, 2 * opt.grid - 1);
    if (fine.lower != est.lower || fine.upper != est.upper) est.grid_warning = true;
  }
  return est;
}

// ---------------------------------------------------------------- coherence

double max_coherence(const CMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1) throw DomainError("coherence needs a square matrix");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw DomainError("coherence needs a Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-10) throw DomainError("coherence needs a positive semidefinite matrix");
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

double max_coherence(const DensityOperator& rho) { return max_coherence(rho.matrix()); }

SioPrediction predicted_sio_fidelity(const CMatrix& rho) {
  const double eta = max_coherence(rho);
  return {(1.0 + eta) / 2.0, eta, std::abs(eta - 1.0) <= 1e-10};
}

}  // namespace qres
