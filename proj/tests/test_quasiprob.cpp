#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "random_states.hpp"
#include "qres/fock.hpp"

using namespace qres;
using testutil::max_abs;
constexpr double kPi = std::numbers::pi;

TEST_CASE("kernel matches the direct finite sum") {
  for (double tau : {0.2, 0.5, 0.9, 1.0}) {
    for (cplx a : {cplx(0.0), cplx(0.7, -0.4), cplx(-1.3, 0.9)}) {
      const CMatrix k = quasiprob_kernel(a, tau, 12);
      const CMatrix ref = oracle::quasiprob_kernel_sum(a, tau, 12);
      CHECK(max_abs(k - ref) < 1e-11 * std::max(1.0, max_abs(ref)));
    }
  }
}

TEST_CASE("displaced-number expansion agrees") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const DensityOperator rho = testutil::random_state(5, rng);
    for (double tau : {0.3, 0.7, 1.0})
      for (cplx a : {cplx(0.1, 0.2), cplx(-0.8, 0.5)})
        CHECK(std::abs(quasiprob(rho, a, tau) - oracle::quasiprob_displaced_number(rho.matrix(), a, tau)) < 1e-10);
  }
}

TEST_CASE("anchor values") {
  const auto vac = make_fock(0, 4).density();
  const auto one = make_fock(1, 4).density();
  for (double tau : {0.1, 0.4, 0.75, 1.0}) {
    CHECK(std::abs(quasiprob(vac, 0.0, tau) - 1.0 / (kPi * tau)) < 1e-12);
    const double w1 = quasiprob(one, 0.0, tau);
    CHECK(std::abs(w1 + (1.0 - tau) / (kPi * tau * tau)) < 1e-12);
    if (tau < 1.0) CHECK(w1 < 0.0);
  }
  CHECK_THROWS_AS(quasiprob(vac, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(quasiprob(vac, 0.0, -0.5), DomainError);

  // thermal state: Gaussian of variance nbar + tau
  const double nbar = 0.4;
  const auto th = make_thermal(nbar, 60);
  const cplx a(0.5, -0.3);
  const double tau = 0.35;
  CHECK(std::abs(quasiprob(th, a, tau) - std::exp(-std::norm(a) / (nbar + tau)) / (kPi * (nbar + tau))) < 1e-10);
}

TEST_CASE("Husimi function is non-negative") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(2, 6);
  double worst = 1.0;
  for (int k = 0; k < 100; ++k) {
    const DensityOperator rho = testutil::random_state(dim(rng), rng);
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j) worst = std::min(worst, quasiprob(rho, cplx(0.4 * i, 0.4 * j), 1.0));
  }
  CHECK(worst >= -1e-10);
}

TEST_CASE("quasiprobability integrates to one") {
  std::mt19937_64 rng(23);
  for (double tau : {0.3, 0.6, 1.0}) {
    const DensityOperator rho = testutil::random_state(4, rng);
    const double h = 0.1, half = 7.0;
    double acc = 0.0;
    const int n = static_cast<int>(std::round(half / h));
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j) acc += quasiprob(rho, cplx(h * i, h * j), tau);
    CHECK(std::abs(acc * h * h - 1.0) < 1e-4);
  }
}

TEST_CASE("two-mode quasiprobability of a product factorizes") {
  std::mt19937_64 rng(29);
  const DensityOperator a = testutil::random_state(3, rng), b = testutil::random_state(4, rng);
  const auto ab = tensor(a, b);
  const std::vector<cplx> pt{cplx(0.3, -0.1), cplx(-0.2, 0.6)};
  for (double tau : {0.4, 0.8})
    CHECK(std::abs(quasiprob(ab, pt, tau) - quasiprob(a, pt[0], tau) * quasiprob(b, pt[1], tau)) < 1e-12);
}

TEST_CASE("thermal noise semigroup") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 3; ++k) {
    const DensityOperator rho = testutil::random_state(4, rng);
    const double d1 = 0.15 + 0.1 * k, d2 = 0.25;
    const auto step1 = thermal_noise_kraus(d2, 4, 40).apply(rho);
    const auto twice = thermal_noise_kraus(d1, 40, 64).apply(step1);
    const auto once = thermal_noise_kraus(d1 + d2, 4, 64).apply(rho);
    CHECK(trace_distance(twice.matrix(), once.matrix()) < 1e-6);
  }
}

TEST_CASE("noise shifts the quasiprobability parameter") {
  std::mt19937_64 rng(37);
  for (int k = 0; k < 3; ++k) {
    const DensityOperator rho = testutil::random_state(4, rng);
    const double delta = 0.3, tau = 0.5;
    ThermalNoiseOptions opt;
    opt.headroom = 36;
    const auto noisy = thermal_noise_channel(rho, delta, opt);
    double worst = 0.0;
    for (int i = -3; i <= 3; ++i)
      for (int j = -3; j <= 3; ++j) {
        const cplx a(0.5 * i, 0.5 * j);
        worst = std::max(worst, std::abs(quasiprob(noisy, a, tau) - quasiprob(rho, a, tau + delta)));
      }
    CHECK(worst < 1e-6);
  }
}
