#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "random_states.hpp"
#include "qres/fock.hpp"
#include "qres/measures.hpp"

using namespace qres;
constexpr double kPi = std::numbers::pi;

using testutil::max_abs;
using testutil::random_density;

TEST_CASE("coherent amplitudes") {
  const auto vac = make_coherent(0.0, 4);
  CHECK(std::abs(vac.amplitudes()(0) - 1.0) < 1e-15);
  CHECK(vac.amplitudes().tail(3).norm() == 0.0);

  const auto c = make_coherent(1.0, 20);
  double fact = 1.0;
  for (int n = 0; n < 20; ++n) {
    if (n > 0) fact *= n;
    CHECK(std::abs(c.amplitudes()(n) - std::exp(-0.5) / std::sqrt(fact)) < 1e-15);
  }
  CHECK(std::abs(c.norm() * c.norm() - 1.0) < 1e-8);
  CHECK(c.tail() > 0.0);
  CHECK(c.tail() < 1e-8);

  const auto b = make_coherent(-1.0, 20);
  CHECK(std::abs(std::abs(c.amplitudes().dot(b.amplitudes())) - std::exp(-2.0)) < 1e-9);
  CHECK_THROWS_AS(make_coherent(3.0, 8), TruncationError);
  CHECK(recommended_dim(1.0) == 17);
}

TEST_CASE("cat states") {
  const auto small = make_cat(1e-8, 10);
  CHECK(std::abs(std::abs(small.amplitudes()(0)) - 1.0) < 1e-8);

  const auto cat = make_cat(2.0, 40);
  for (int n = 1; n < 40; n += 2) CHECK(cat.amplitudes()(n) == cplx(0.0));
  const double nbar = mean_photon_number(cat.density(), 0);
  CHECK(std::abs(nbar - 4.0 * std::tanh(4.0)) < 1e-9);
  CHECK(std::abs(cat.norm() - 1.0) < 1e-14);
}

TEST_CASE("lossy photon and thermal state") {
  const auto r = make_lossy_photon(0.8);
  CHECK(std::abs(r.matrix()(0, 0).real() - 0.2) < 1e-15);
  CHECK(std::abs(r.matrix()(1, 1).real() - 0.8) < 1e-15);
  CHECK(r.matrix()(2, 2) == cplx(0.0));
  CHECK(std::abs(make_lossy_photon(0.0).matrix()(0, 0).real() - 1.0) < 1e-15);
  CHECK(std::abs(make_lossy_photon(1.0).matrix()(1, 1).real() - 1.0) < 1e-15);
  CHECK_THROWS_AS(make_lossy_photon(1.2), DomainError);
  CHECK_THROWS_AS(make_lossy_photon(0.5, 2), DomainError);

  const auto th = make_thermal(0.5, 40);
  CHECK(std::abs(mean_photon_number(th, 0) - 0.5) < 1e-12);
}

TEST_CASE("tensor and partial trace") {
  std::mt19937_64 rng(3);
  const DensityOperator a(random_density(3, 2, rng), {3});
  const DensityOperator b(random_density(4, 3, rng), {4});
  const auto ab = tensor(a, b);
  CHECK(max_abs(partial_trace(ab, {0}).matrix() - a.matrix()) < 1e-14);
  CHECK(max_abs(partial_trace(ab, {1}).matrix() - b.matrix()) < 1e-14);
  CHECK(std::abs(partial_trace(ab, {1}).trace() - ab.trace()) < 1e-14);

  const auto three = tensor(ab, a);
  const auto kept = partial_trace(three, {0, 2});
  CHECK(max_abs(kept.matrix() - tensor(a, a).matrix()) < 1e-14);
  CHECK_THROWS_AS(partial_trace(ab, {2}), DomainError);
  CHECK_THROWS_AS(partial_trace(ab, {0, 0}), DomainError);

  // (|00> + |11>)/sqrt2 has a mixed marginal
  CVector v = CVector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  const auto marg = partial_trace(FockVector(v, {2, 2}).density(), {0});
  CHECK((marg.matrix() * marg.matrix()).trace().real() < 1.0 - 1e-6);
}

TEST_CASE("displacement matrix matches the exponential") {
  for (cplx alpha : {cplx(0.3, -0.2), cplx(1.5, 0.7), cplx(-2.0, 1.0)}) {
    const CMatrix ref = oracle::displacement_expm(alpha, 25);
    CHECK(max_abs(displacement_matrix(alpha, 25, 25) - ref) < 1e-12);
  }
  const CMatrix rect = displacement_matrix(cplx(0.5, 0.5), 30, 10);
  CHECK(max_abs(rect - oracle::displacement_expm(cplx(0.5, 0.5), 30).leftCols(10)) < 1e-12);
}

TEST_CASE("beam splitter") {
  const int d = 6;
  const SparseCMatrix id = beam_splitter(0.0, d, d);
  CHECK(max_abs(CMatrix(id) - CMatrix::Identity(d * d, d * d)) < 1e-12);

  for (double th : {0.3, kPi / 4.0, 1.2}) {
    const CMatrix u = beam_splitter(th, d, d);
    const CMatrix ref = oracle::beam_splitter_expm(th, d);
    // compare on total photon number below the cutoff
    for (int i = 0; i < d * d; ++i)
      for (int j = 0; j < d * d; ++j) {
        const int ni = i / d + i % d, nj = j / d + j % d;
        if (ni < d && nj < d) CHECK(std::abs(u(i, j) - ref(i, j)) < 1e-10);
      }
    // unitary on the block with total photon number < d - 1
    for (int j = 0; j < d * d; ++j) {
      if (j / d + j % d >= d - 1) continue;
      CHECK(std::abs(u.col(j).norm() - 1.0) < 1e-10);
    }
  }

  // |1,0> -> (|1,0> - |0,1>)/sqrt2
  const CMatrix u = beam_splitter(kPi / 4.0, 3, 3);
  CHECK(std::abs(u(3, 3) - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(u(1, 3) + 1.0 / std::sqrt(2.0)) < 1e-14);

  // |a>|a> -> |sqrt2 a>|0>
  const cplx a(0.8, 0.3);
  const int dim = 30;
  const auto out = apply_beam_splitter(tensor(make_coherent(a, dim), make_coherent(a, dim)), kPi / 4.0);
  const auto expect = tensor(make_coherent(std::sqrt(2.0) * a, dim), make_coherent(0.0, dim));
  CHECK(fidelity(out, expect) > 1.0 - 1e-9);

  // |a>|b> -> |a c + b s>|b c - a s>
  const cplx b(-0.4, 0.6);
  const double th = 0.37;
  const auto o2 = apply_beam_splitter(tensor(make_coherent(a, dim), make_coherent(b, dim)), th);
  const auto e2 = tensor(make_coherent(a * std::cos(th) + b * std::sin(th), dim),
                         make_coherent(b * std::cos(th) - a * std::sin(th), dim));
  CHECK(fidelity(o2, e2) > 1.0 - 1e-9);
}

TEST_CASE("loss channel") {
  const auto one = make_fock(1, 4).density();
  CHECK(max_abs(loss_channel(one, 1.0, 0).matrix() - one.matrix()) < 1e-15);
  const double q = 0.37;
  const auto lossy = loss_channel(one, q, 0);
  CHECK(max_abs(lossy.matrix() - make_lossy_photon(q, 4).matrix()) < 1e-15);
  const double t = 0.6;
  const auto two = loss_channel(make_fock(2, 4).density(), t, 0);
  CHECK(std::abs(two.matrix()(0, 0).real() - (1 - t) * (1 - t)) < 1e-15);
  CHECK(std::abs(two.matrix()(1, 1).real() - 2 * t * (1 - t)) < 1e-15);
  CHECK(std::abs(two.matrix()(2, 2).real() - t * t) < 1e-15);
  CHECK(loss_kraus(0.3, 6).trace_preserving(1e-12));
  CHECK_THROWS_AS(loss_channel(one, -0.1, 0), DomainError);
}

TEST_CASE("thermal noise channel") {
  const auto vac = make_fock(0, 4).density();
  CHECK(max_abs(thermal_noise_channel(vac, 0.0).matrix() - vac.matrix()) < 1e-15);

  ThermalNoiseOptions opt;
  opt.headroom = 30;
  const auto th = thermal_noise_channel(vac, 0.5, opt);
  CHECK(std::abs(mean_photon_number(th, 0) - 0.5) < 1e-8);
  CHECK(max_abs(th.matrix() - make_thermal(0.5, th.dims()[0]).matrix()) < 1e-8);
  CHECK(std::abs(th.trace() - 1.0) < 1e-6);

  ThermalNoiseOptions short_room;
  short_room.headroom = 1;
  CHECK_THROWS_AS(thermal_noise_channel(vac, 0.5, short_room), TruncationError);
  short_room.allow_short_headroom = true;
  CHECK_NOTHROW(thermal_noise_channel(vac, 0.5, short_room));
}

TEST_CASE("coherent projection") {
  const auto vv = tensor(make_fock(0, 3).density(), make_fock(0, 3).density());
  const auto p = project_coherent(vv, 1, 0.0);
  CHECK(std::abs(p.probability - 1.0) < 1e-15);
  CHECK(std::abs(p.povm_density - 1.0 / kPi) < 1e-15);
  CHECK(std::abs(p.conditional.matrix()(0, 0).real() - 1.0) < 1e-15);

  // classical two-mode input gives a coherent conditional state
  const cplx a(0.4, 0.1), b(-0.3, 0.5), xi(0.2, 0.2);
  const auto prod = tensor(make_coherent(a, 20).density(), make_coherent(b, 20).density());
  const auto pc = project_coherent(prod, 1, xi);
  CHECK(std::abs(pc.probability - std::exp(-std::norm(b - xi))) < 1e-8);
  const auto ref = make_coherent(a, 20).normalized().density();
  CHECK(trace_distance(pc.conditional.matrix(), ref.matrix()) < 1e-8);

  CHECK_THROWS_AS(project_coherent(make_fock(0, 3).density(), 0, 0.0), DomainError);
  CHECK_THROWS_AS(project_fock(tensor(make_fock(0, 3).density(), make_fock(0, 3).density()), 1, 2), DomainError);
}

TEST_CASE("two-mode squeezed vacuum from mixed single-mode squeezers") {
  const double r = 0.4;
  const int d = 40;
  const auto x = make_squeezed_vacuum(r, d, 0.0);
  const auto p = make_squeezed_vacuum(r, d, kPi);
  const auto mixed = apply_beam_splitter(tensor(x, p), kPi / 4.0);
  const auto tmsv = make_two_mode_squeezed(r, d);
  CHECK(fidelity(mixed, tmsv) > 1.0 - 1e-9);
}

TEST_CASE("channel outputs stay valid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const DensityOperator rho(random_density(3, 2, rng), {3});
    CHECK_NOTHROW(loss_channel(rho, u(rng), 0).validate());
    CHECK_NOTHROW(displace(rho, 0, cplx(0.3 * u(rng), 0.2), 20).validate());
    CHECK_NOTHROW(phase_rotate(rho, 0, u(rng)).validate());
    ThermalNoiseOptions opt;
    opt.headroom = 14;
    const auto noisy = thermal_noise_channel(rho, 0.3 * u(rng), opt);
    noisy.validate();
    CHECK(std::abs(noisy.trace() - 1.0) < 1e-6);
  }
}
