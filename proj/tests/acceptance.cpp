// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qres/experiments.hpp"
#include "random_states.hpp"

using namespace qres;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> percent_grid() {
  std::vector<double> q;
  for (int i = 0; i <= 100; ++i) q.push_back(i / 100.0);
  return q;
}

Outcome lossy_threshold() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scan = lossy_concentration_scan(percent_grid(), {.dim = 8});
  const double secs = seconds_since(t0);
  Outcome o;
  if (!scan.threshold) return {false, "no crossing found"};
  o.pass = std::abs(*scan.threshold - 0.7419) <= 5e-4 && secs < 30.0;
  o.detail = fmt("q* = %.6f, %.1f s", *scan.threshold, secs);
  return o;
}

Outcome closed_form_output() {
  double worst = 0.0;
  for (double q : {0.1, 0.5, 0.9}) {
    const auto pt = lossy_point(q, 8);
    const double p = 1.0 - q + q * q / 2.0;
    CMatrix expect = CMatrix::Zero(8, 8);
    expect(0, 0) = (1.0 - q) * (1.0 - q) / p;
    expect(1, 1) = q * (1.0 - q) / p;
    expect(2, 2) = q * q / 2.0 / p;
    worst = std::max({worst, (pt.sigma_out.matrix() - expect).cwiseAbs().maxCoeff(), std::abs(pt.probability - p)});
  }
  return {worst <= 1e-10, fmt("max deviation %.2e", worst)};
}

Outcome success_weighted_bound() {
  const auto scan = lossy_concentration_scan(percent_grid(), {.dim = 8, .with_depth = false});
  int violations = 0;
  for (const auto& r : scan.records)
    if (r.number("p_f1_out") > r.number("f1_in") + 1e-6) ++violations;
  const double gap = std::abs(scan.records.back().number("bound_gap"));
  return {violations == 0 && gap < 1e-3, fmt("%d violations over %zu points, gap at q = 1: %.2e", violations,
                                             scan.records.size(), gap)};
}

Outcome cat_amplifier() {
  const auto rec = cat_amplification(3.0);
  const double p = rec.number("p_succ"), f = rec.number("fidelity"), gap = rec.number("saturation_gap");
  return {std::abs(p - 0.5) <= 1e-4 && f >= 1.0 - 1e-6 && std::abs(gap) < 1e-3,
          fmt("P = %.8f, fidelity = %.10f, saturation gap %.2e", p, f, gap)};
}

Outcome qfi_anchors() {
  const double coh = metrological_power(make_coherent({0.8, -0.5}, 30).density());
  const double one = metrological_power(make_fock(1, 4).density());
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double q = i / 20.0;
    worst = std::max(worst, std::abs(metrological_power(make_lossy_photon(q)) - std::max(0.0, q * (2.0 * q - 1.0))));
  }
  return {coh <= 1e-8 && std::abs(one - 1.0) <= 1e-8 && worst <= 1e-8,
          fmt("coherent %.1e, |1> %.12f, lossy-photon max error %.1e", coh, one, worst)};
}

Outcome depth_anchors() {
  Outcome o;
  std::string d;
  for (double q : {0.3, 0.6, 0.9}) {
    const auto e = nc_depth(make_lossy_photon(q));
    const bool ok = e.contains(q) && e.upper - e.lower <= 1e-2;
    o.pass &= ok;
    d += fmt("q=%.1f [%.4f, %.4f]; ", q, e.lower, e.upper);
  }
  for (double r : {0.25, 0.5}) {
    const double expect = (1.0 - std::exp(-2.0 * r)) / 2.0;
    const auto e = nc_depth(make_squeezed_vacuum(r, 80, 0.0, 1e-12).density());
    const bool ok = std::abs(e.lower - expect) <= 5e-3 && std::abs(e.upper - expect) <= 5e-3;
    o.pass &= ok;
    d += fmt("r=%.2f [%.4f, %.4f] vs %.4f%s; ", r, e.lower, e.upper, expect, e.gaussian ? " (gaussian)" : "");
  }
  d.resize(d.size() - 2);
  o.detail = d;
  return o;
}

Outcome coherence_ensemble() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = eta_tensorization_experiment(2, 2, 100, 20260001);
  const auto b = eta_tensorization_experiment(2, 3, 50, 20260002);
  const double secs = seconds_since(t0);
  const double frac_a = a.within_excess / 100.0, frac_b = b.within_excess / 50.0;
  const bool ok = a.floor_violations == 0 && b.floor_violations == 0 && frac_a >= 0.98 && frac_b >= 0.98 &&
                  secs < 600.0;
  return {ok, fmt("floor violations %d/%d, within excess %.0f%%/%.0f%%, max excess %.1e/%.1e, %.0f s",
                  a.floor_violations, b.floor_violations, 100 * frac_a, 100 * frac_b, a.max_excess, b.max_excess,
                  secs)};
}

GaussianState random_gaussian(std::mt19937_64& rng, int modes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto single = [&] {
    auto g = apply_symplectic(GaussianState::vacuum(1), squeeze_symplectic(u(rng), 2.0 * std::numbers::pi * u(rng)));
    g = add_thermal(g, 0.3 * u(rng));
    return displace(g, {cplx(u(rng) - 0.5, u(rng) - 0.5)});
  };
  if (modes == 1) return single();
  return apply_symplectic(tensor(single(), single()), bs_symplectic(std::numbers::pi * u(rng)));
}

Outcome tensorization() {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> dim(2, 4);
  double eta_err = 0.0, f1_err = 0.0, tau_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const CMatrix x = testutil::random_density(dim(rng), 2, rng), y = testutil::random_density(dim(rng), 2, rng);
    CMatrix joint(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) joint.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    eta_err = std::max(eta_err, std::abs(max_coherence(joint) - std::max(max_coherence(x), max_coherence(y))));
  }
  for (int k = 0; k < 50; ++k) {
    const auto x = testutil::random_state(3, rng), y = testutil::random_state(3, rng);
    f1_err = std::max(f1_err, std::abs(metrological_power(tensor(x, y)) -
                                       std::max(metrological_power(x), metrological_power(y))));
  }
  for (int k = 0; k < 100; ++k) {
    const auto g1 = random_gaussian(rng, 1 + k % 2), g2 = random_gaussian(rng, 1);
    tau_err = std::max(tau_err, std::abs(nc_depth_gaussian(tensor(g1, g2)) -
                                         std::max(nc_depth_gaussian(g1), nc_depth_gaussian(g2))));
  }
  return {eta_err <= 1e-12 && f1_err <= 1e-6 && tau_err <= 1e-12,
          fmt("eta %.1e (200 pairs), F1 %.1e (50 pairs), Gaussian depth %.1e", eta_err, f1_err, tau_err)};
}

Outcome monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = monotonicity_suite(500, 20261014);
  return {res.passed(), fmt("500 trials: depth %d, F1 %d, kappa %d violations, %.0f s", res.tau_violations,
                            res.f1_violations, res.kappa_violations, seconds_since(t0))};
}

Outcome noise_semigroup() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double semigroup = 0.0, shift = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto rho = testutil::random_state(4, rng);
    const double d1 = 0.1 + 0.2 * u(rng), d2 = 0.1 + 0.2 * u(rng);
    const auto twice = thermal_noise_kraus(d1, 36, 64).apply(thermal_noise_kraus(d2, 4, 36).apply(rho));
    const auto once = thermal_noise_kraus(d1 + d2, 4, 64).apply(rho);
    semigroup = std::max(semigroup, trace_distance(twice.matrix(), once.matrix()));

    const double delta = 0.1 + 0.25 * u(rng), tau = 0.35 + 0.3 * u(rng);
    ThermalNoiseOptions opt;
    opt.headroom = 36;
    const auto noisy = thermal_noise_channel(rho, delta, opt);
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j) {
        const cplx a(-3.0 + 0.3 * i, -3.0 + 0.3 * j);
        shift = std::max(shift, std::abs(quasiprob(noisy, a, tau) - quasiprob(rho, a, tau + delta)));
      }
  }
  return {semigroup <= 1e-6 && shift <= 1e-6,
          fmt("composition trace distance %.1e, parameter shift %.1e over 10 states", semigroup, shift)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"lossy-photon concentration threshold", lossy_threshold},
      {"post-selected output closed form", closed_form_output},
      {"success-weighted metrological bound", success_weighted_bound},
      {"cat-state amplification", cat_amplifier},
      {"metrological power anchors", qfi_anchors},
      {"nonclassicality depth anchors", depth_anchors},
      {"maximal coherence ensemble", coherence_ensemble},
      {"tensorization suites", tensorization},
      {"monotonicity suites", monotonicity},
      {"thermal noise semigroup", noise_semigroup},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
