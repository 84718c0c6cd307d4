#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "qres/gaussian.hpp"

using namespace qres;
constexpr double kPi = std::numbers::pi;

namespace {

// min{t >= 1 : pred(t)} by plain bisection, independent of the library bracket logic
template <class Pred>
double bisect_min_t(Pred pred, double hi = 1e4) {
  double lo = 1.0;
  if (pred(lo)) return lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

double lambda_min(const RMatrix& v) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(v);
  return es.eigenvalues().minCoeff();
}

RMatrix random_passive(int modes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  RMatrix s = RMatrix::Identity(2 * modes, 2 * modes);
  for (int k = 0; k < 3; ++k) {
    for (int m = 0; m < modes; ++m) s = phase_symplectic(u(rng), modes, m) * s;
    if (modes > 1) s = bs_symplectic(u(rng), modes, 0, 1) * s;
  }
  return s;
}

GaussianState random_gaussian(int modes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianState g = GaussianState::thermal(modes, 0.3 * u(rng));
  for (int m = 0; m < modes; ++m) g = apply_symplectic(g, squeeze_symplectic(u(rng), 2 * kPi * u(rng), modes, m));
  g = apply_symplectic(g, random_passive(modes, rng));
  std::vector<cplx> shift;
  for (int m = 0; m < modes; ++m) shift.emplace_back(u(rng) - 0.5, u(rng) - 0.5);
  return displace(g, shift);
}

}  // namespace

TEST_CASE("state construction and validation") {
  CHECK(GaussianState::vacuum(2).cov().isApprox(0.5 * RMatrix::Identity(4, 4)));
  CHECK(GaussianState::vacuum(1).physicality_margin() > -1e-12);
  RMatrix bad = 0.1 * RMatrix::Identity(2, 2);
  CHECK_THROWS_AS(GaussianState(RVector::Zero(2), bad), DomainError);
  RMatrix asym = 0.5 * RMatrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(GaussianState(RVector::Zero(2), asym), DomainError);
  CHECK_THROWS_AS(GaussianState(RVector::Zero(3), RMatrix::Identity(3, 3)), DomainError);
}

TEST_CASE("nonclassicality depth closed form") {
  CHECK(nc_depth_gaussian(GaussianState::vacuum(1)) == doctest::Approx(0.0));
  CHECK(nc_depth_gaussian(GaussianState::thermal(1, 0.7)) == 0.0);
  for (double r : {0.1, 0.5, 1.2}) {
    const auto sq = GaussianState::squeezed_vacuum(r, 0.3);
    CHECK(std::abs(nc_depth_gaussian(sq) - (1.0 - std::exp(-2.0 * r)) / 2.0) < 1e-14);
    const double delta = (1.0 - std::exp(-2.0 * r)) / 2.0;
    CHECK(nc_depth_gaussian(add_thermal(sq, delta)) < 1e-14);
  }
}

TEST_CASE("kappa measures") {
  CHECK(kappa_classical(GaussianState::vacuum(1)) == doctest::Approx(1.0));
  CHECK(kappa_classical(GaussianState::thermal(2, 0.2)) == 1.0);
  for (double r : {0.2, 0.6, 1.0}) {
    const auto sq = GaussianState::squeezed_vacuum(r);
    CHECK(std::abs(kappa_classical(sq) - std::exp(2.0 * r)) < 1e-10);
    const double oracle = bisect_min_t([&](double t) { return lambda_min(t * sq.cov()) >= 0.5; });
    CHECK(std::abs(kappa_classical(sq) - oracle) < 1e-8);

    const auto tm = GaussianState::two_mode_squeezed(r);
    CHECK(std::abs(kappa_separable_two_mode(tm) - std::exp(2.0 * r)) < 1e-8);
    const double sep = bisect_min_t([&](double t) { return min_pt_symplectic_eigenvalue(t * tm.cov()) >= 0.5; });
    CHECK(std::abs(kappa_separable_two_mode(tm) - sep) < 1e-8);
  }
  CHECK(kappa_separable_two_mode(GaussianState::vacuum(2)) == doctest::Approx(1.0));
  CHECK(kappa_separable_two_mode(tensor(GaussianState::squeezed_vacuum(0.4), GaussianState::vacuum(1))) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(kappa_separable_two_mode(GaussianState::vacuum(3)), DomainError);
}

TEST_CASE("random states: kappa closed form vs bisection") {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 50; ++k) {
    const auto g = random_gaussian(1 + k % 2, rng);
    const double oracle = bisect_min_t([&](double t) { return lambda_min(t * g.cov()) >= 0.5; });
    CHECK(std::abs(kappa_classical(g) - oracle) < 1e-8);
  }
}

TEST_CASE("symplectic operations") {
  CHECK(bs_symplectic(0.0).isApprox(RMatrix::Identity(4, 4)));
  for (double th : {0.3, 1.1}) {
    const RMatrix s = bs_symplectic(th);
    const RMatrix om = symplectic_form(2);
    CHECK((s * om * s.transpose() - om).cwiseAbs().maxCoeff() < 1e-14);
    const RMatrix q = squeeze_symplectic(0.7, th);
    const RMatrix o1 = symplectic_form(1);
    CHECK((q * o1 * q.transpose() - o1).cwiseAbs().maxCoeff() < 1e-14);
  }
  // x- and p-squeezed vacua through a 50:50 splitter give the two-mode squeezed vacuum
  for (double r : {0.3, 0.9}) {
    const auto mixed = apply_symplectic(
        tensor(GaussianState::squeezed_vacuum(r, 0.0), GaussianState::squeezed_vacuum(r, kPi)), bs_symplectic(kPi / 4));
    CHECK((mixed.cov() - GaussianState::two_mode_squeezed(r).cov()).cwiseAbs().maxCoeff() < 1e-14);
  }
  const auto d = displace(GaussianState::vacuum(1), {cplx(0.5, -1.0)});
  CHECK(std::abs(d.mean()(0) - 0.5 * std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(d.mean()(1) + std::sqrt(2.0)) < 1e-15);
  CHECK_THROWS_AS(displace(GaussianState::vacuum(1), {cplx(0.1), cplx(0.2)}), DomainError);
  CHECK_THROWS_AS(apply_symplectic(GaussianState::vacuum(1), bs_symplectic(0.1)), DomainError);
}

TEST_CASE("passive invariance and tensorization") {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 50; ++k) {
    const auto g = random_gaussian(2, rng);
    const auto moved = displace(apply_symplectic(g, random_passive(2, rng)), {cplx(0.3, 0.1), cplx(-0.2, 0.4)});
    CHECK(std::abs(nc_depth_gaussian(moved) - nc_depth_gaussian(g)) < 1e-10);

    const auto a = random_gaussian(1, rng), b = random_gaussian(1, rng);
    const double joint = nc_depth_gaussian(tensor(a, b));
    CHECK(std::abs(joint - std::max(nc_depth_gaussian(a), nc_depth_gaussian(b))) < 1e-12);
  }
}

TEST_CASE("kappa monotone under thermal noise") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int cv = 0, sv = 0;
  for (int k = 0; k < 200; ++k) {
    const auto g = random_gaussian(2, rng);
    const auto noisy = add_thermal(g, 0.5 * u(rng));
    if (kappa_classical(noisy) > kappa_classical(g) + 1e-8) ++cv;
    if (kappa_separable_two_mode(noisy) > kappa_separable_two_mode(g) + 1e-8) ++sv;
  }
  CHECK(cv == 0);
  CHECK(sv == 0);
}

TEST_CASE("heterodyne conditioning") {
  // product state: conditioning leaves the kept mode untouched
  const auto sq = GaussianState::squeezed_vacuum(0.5);
  const auto prod = tensor(sq, GaussianState::thermal(1, 0.3));
  RVector out(2);
  out << 0.4, -0.1;
  const auto c = condition_on_heterodyne(prod, 1, out);
  CHECK((c.cov() - sq.cov()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(c.mean().norm() < 1e-14);

  // conditional covariance never has more squeezing than the input marginal can supply
  for (double r : {0.2, 0.7, 1.3}) {
    const auto tm = GaussianState::two_mode_squeezed(r);
    const auto cond = condition_on_heterodyne(tm, 1, out);
    CHECK(cond.physicality_margin() > -1e-10);
    CHECK(nc_depth_gaussian(cond) <= (1.0 - std::exp(-2.0 * r)) / 2.0 + 1e-12);
  }
}
