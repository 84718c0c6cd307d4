#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "random_states.hpp"
#include "qres/channels.hpp"

using namespace qres;
using testutil::max_abs;
using testutil::random_density;

TEST_CASE("identity, dephasing and unitary channels") {
  std::mt19937_64 rng(71);
  const CMatrix rho = random_density(2, 2, rng);
  const auto id = identity_channel(2);
  id.validate();
  CHECK(max_abs(qres::apply(id, rho) - rho) < 1e-12);

  const CMatrix r3 = random_density(3, 3, rng);
  const CMatrix deph = qres::apply(dephasing_channel(3), r3);
  CHECK(max_abs(deph - CMatrix(r3.diagonal().asDiagonal())) < 1e-15);

  const auto u1 = random_channel(3, 3, 1, 5);
  u1.validate();
  // recover the unitary from the rank-one Choi matrix and compare with direct conjugation
  Eigen::SelfAdjointEigenSolver<CMatrix> es(u1.matrix());
  const CVector v = es.eigenvectors().col(8) * std::sqrt(es.eigenvalues()(8));
  CMatrix u(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) u(a, i) = v(i * 3 + a);
  CHECK(max_abs(u.adjoint() * u - CMatrix::Identity(3, 3)) < 1e-10);
  CHECK(max_abs(qres::apply(u1, r3) - u * r3 * u.adjoint()) < 1e-10);
  CHECK(max_abs(qres::apply(unitary_channel(u), r3) - u * r3 * u.adjoint()) < 1e-12);
}

TEST_CASE("random channels") {
  const auto a = random_channel(2, 3, 4, 99), b = random_channel(2, 3, 4, 99);
  CHECK(a.matrix() == b.matrix());
  CHECK_FALSE(random_channel(2, 3, 4, 100).matrix() == a.matrix());
  CHECK(a.trace_defect() < 1e-12);
  CHECK_THROWS_AS(random_channel(8, 9, 2, 1), DomainError);
  CHECK_THROWS_AS(random_channel(2, 2, 0, 1), DomainError);
  CHECK_THROWS_AS(ChoiMatrix(CMatrix::Identity(3, 3), 2, 2), DomainError);

  std::mt19937_64 rng(73);
  std::uniform_int_distribution<int> dim(2, 4), rank(1, 6);
  for (int k = 0; k < 100; ++k) {
    const int di = dim(rng), dout = dim(rng);
    const int r = std::max(rank(rng), (di + dout - 1) / dout);
    const auto phi = random_channel(di, dout, r, 1000 + k);
    phi.validate();
    const CMatrix out = qres::apply(phi, random_density(di, 1 + k % di, rng));
    CHECK(std::abs(out.trace().real() - 1.0) < 1e-10);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (out + out.adjoint()), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK(max_abs(out - out.adjoint()) < 1e-12);
  }
}

TEST_CASE("Haar isometry") {
  std::mt19937_64 rng(79);
  const CMatrix v = haar_isometry(6, 3, rng);
  CHECK(max_abs(v.adjoint() * v - CMatrix::Identity(3, 3)) < 1e-12);
  CHECK_THROWS_AS(haar_isometry(2, 3, rng), DomainError);
}

TEST_CASE("adjoint map") {
  std::mt19937_64 rng(83);
  const auto phi = random_channel(3, 2, 3, 7);
  const CMatrix rho = random_density(3, 2, rng);
  const CMatrix x = random_density(2, 2, rng) + cplx(0.0, 1.0) * random_density(2, 1, rng);
  CHECK(std::abs((qres::apply(phi, rho) * x).trace() - (rho * apply_adjoint(phi, x)).trace()) < 1e-13);
  CHECK(max_abs(apply_adjoint(phi, CMatrix::Identity(2, 2)) - CMatrix::Identity(3, 3)) < 1e-12);
}

TEST_CASE("tensor of channels") {
  const auto ii = tensor(identity_channel(2), identity_channel(3));
  CHECK(max_abs(ii.matrix() - identity_channel(6).matrix()) < 1e-15);

  std::mt19937_64 rng(89);
  const auto a = random_channel(2, 3, 2, 11), b = random_channel(3, 2, 3, 13);
  const auto ab = tensor(a, b);
  ab.validate();
  const CMatrix r = random_density(2, 2, rng), s = random_density(3, 3, rng);
  const CMatrix joint = qres::apply(ab, Eigen::kroneckerProduct(r, s).eval());
  const CMatrix prod = Eigen::kroneckerProduct(qres::apply(a, r), qres::apply(b, s)).eval();
  CHECK(max_abs(joint - prod) < 1e-10);

  // a dephasing factor removes coherence between its own basis states
  const auto mixed = tensor(dephasing_channel(2), identity_channel(2));
  const CMatrix out = qres::apply(mixed, random_density(4, 4, rng));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i / 2 != j / 2) CHECK(std::abs(out(i, j)) < 1e-15);
  CHECK_THROWS_AS(tensor(random_channel(4, 4, 1, 1), random_channel(3, 3, 1, 2)), DomainError);
}

TEST_CASE("parameterization of inputs") {
  std::mt19937_64 rng(97);
  const CMatrix rho = random_density(3, 2, rng);
  CHECK(max_abs(density_from_params(params_from_density(rho), 3) - rho) < 1e-12);
  CHECK_THROWS_AS(density_from_params(RVector::Zero(5), 3), DomainError);
}

TEST_CASE("output maximal coherence") {
  EtaOptions opt;
  opt.starts = 8;
  const auto id = output_max_coherence(identity_channel(2), opt);
  CHECK(std::abs(id.best - 1.0) < 1e-6);
  CHECK(id.per_start.size() == 8);
  CHECK(id.best == *std::max_element(id.per_start.begin(), id.per_start.end()));
  CHECK(output_max_coherence(dephasing_channel(3), opt).best < 1e-12);

  const auto again = output_max_coherence(identity_channel(2), opt);
  CHECK(again.per_start == id.per_start);

  // against the generalized-eigenvalue characterization
  opt.starts = 16;
  for (int k = 0; k < 6; ++k) {
    const auto phi = random_channel(2, 2, 1 + k % 4, 500 + k);
    const auto rep = output_max_coherence(phi, opt);
    const double ref = oracle::output_eta(phi);
    CHECK(rep.best <= ref + 1e-8);
    CHECK(rep.best >= ref - 1e-4);
  }
  const auto phi = random_channel(3, 2, 2, 42);
  const auto rep = output_max_coherence(phi, opt);
  CHECK(std::abs(rep.best - oracle::output_eta(phi)) < 1e-4);
  CHECK(rep.best_input_rank >= 1);
}

TEST_CASE("product inputs give the floor for joint channels") {
  EtaOptions opt;
  opt.starts = 8;
  for (int k = 0; k < 3; ++k) {
    const auto a = random_channel(2, 2, 2, 700 + k), b = random_channel(2, 2, 3, 800 + k);
    const auto ra = output_max_coherence(a, opt), rb = output_max_coherence(b, opt);
    const CMatrix prod = Eigen::kroneckerProduct(ra.best_input, rb.best_input).eval();
    const double witness = max_coherence(qres::apply(tensor(a, b), prod));
    CHECK(witness >= std::max(ra.best, rb.best) - 1e-10);
  }
}

TEST_CASE("channel nonclassicality depth") {
  NcDepthOptions opt;
  opt.grid = 31;
  const auto fam = default_input_family({4});
  const auto id = output_nc_depth(KrausChannel({CMatrix::Identity(4, 4)}, {4}, {4}), fam, opt);
  CHECK(id.estimate.upper == 1.0);
  CHECK(id.estimate.lower > 0.99);
  CHECK(id.labels.size() == fam.size());

  for (double t : {0.3, 0.75}) {
    const auto loss = loss_kraus(t, 4);
    const auto rep = output_nc_depth(loss, {{"|1>", make_fock(1, 4).density()}}, opt);
    CHECK(rep.estimate.contains(t));

    // extra noise at least as large as the depth classicalizes every output
    const double delta = t + 0.02;
    const auto noisy = compose(thermal_noise_kraus(delta, 4, 4 + required_noise_headroom(delta) + 20), loss);
    const auto broken = output_nc_depth(noisy, fam, opt);
    CHECK(broken.estimate.upper <= opt.tol);
  }
  CHECK_THROWS_AS(output_nc_depth(loss_kraus(0.5, 3), {}, opt), DomainError);

  const auto two = default_input_family({3, 3});
  CHECK(two.size() == 6);
}
