#include "qres/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qres/parallel.hpp"

namespace qres {

// ---------------------------------------------------------------- records

ExperimentRecord& ExperimentRecord::set(const std::string& key, Field value) {
  for (auto& [k, v] : fields)
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  fields.emplace_back(key, std::move(value));
  return *this;
}

const Field* ExperimentRecord::find(const std::string& key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return &v;
  return nullptr;
}

double ExperimentRecord::number(const std::string& key) const {
  const Field* f = find(key);
  if (!f) throw DomainError("record has no field '" + key + "'");
  if (const auto* d = std::get_if<double>(f)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(f)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(f)) return *b ? 1.0 : 0.0;
  throw DomainError("field '" + key + "' is not numeric");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix64 = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

namespace {
int resolve_workers(int w) { return w > 0 ? w : worker_count(); }

void put_depth(ExperimentRecord& rec, const std::string& prefix, const DepthEstimate& e) {
  rec.set(prefix + "_lo", e.lower).set(prefix + "_hi", e.upper);
}
}  // namespace

// ---------------------------------------------------------------- lossy photon concentration

CMatrix lossy_sigma_closed_form(double q, int dim) {
  const double p = 1.0 - q + q * q / 2.0;
  CMatrix m = CMatrix::Zero(dim, dim);
  m(0, 0) = (1.0 - q) * (1.0 - q) / p;
  m(1, 1) = q * (1.0 - q) / p;
  m(2, 2) = q * q / 2.0 / p;
  return m;
}

LossyPoint lossy_point(double q, int dim) {
  if (dim < 6) throw DomainError("lossy concentration needs dim >= 6");
  const auto rho = make_lossy_photon(q, dim);
  const auto mixed = apply_beam_splitter(tensor(rho, rho), std::numbers::pi / 4.0);
  auto proj = project_fock(mixed, 1, 0);
  LossyPoint pt{q, proj.probability, proj.conditional, 0.0, 0.0, 0.0, 0.0};
  pt.closed_form_error = (pt.sigma_out.matrix() - lossy_sigma_closed_form(q, dim)).cwiseAbs().maxCoeff();
  pt.probability_error = std::abs(pt.probability - (1.0 - q + q * q / 2.0));
  pt.f1_in = metrological_power(rho);
  pt.f1_out = metrological_power(pt.sigma_out);
  return pt;
}

LossyScanResult lossy_concentration_scan(const std::vector<double>& q_grid, const LossyScanOptions& opt) {
  if (q_grid.empty()) throw DomainError("empty q grid");
  LossyScanResult res;
  std::vector<double> excess;
  for (double q : q_grid) {
    const auto pt = lossy_point(q, opt.dim);
    ExperimentRecord rec{"lossy-scan", {}};
    rec.set("q", q)
        .set("p_succ", pt.probability)
        .set("p_closed_form", 1.0 - q + q * q / 2.0)
        .set("sigma_err", pt.closed_form_error);
    if (opt.with_depth) {
      put_depth(rec, "tau_in", nc_depth(make_lossy_photon(q, opt.dim), opt.depth));
      put_depth(rec, "tau_out", nc_depth(pt.sigma_out, opt.depth));
    }
    const double pf = pt.probability * pt.f1_out;
    const bool ok = pf <= pt.f1_in + 1e-6;
    rec.set("f1_in", pt.f1_in)
        .set("f1_out", pt.f1_out)
        .set("p_f1_out", pf)
        .set("bound_gap", pt.f1_in - pf)
        .set("bound_ok", ok);
    res.bound_holds = res.bound_holds && ok;
    res.max_closed_form_error = std::max({res.max_closed_form_error, pt.closed_form_error, pt.probability_error});
    excess.push_back(pt.f1_out - pt.f1_in);
    res.records.push_back(std::move(rec));
  }
  // Highest sign change of F1(sigma_out) - F1(rho_loss) from <= 0 to > 0.
  for (std::size_t k = q_grid.size() - 1; k-- > 0;) {
    if (excess[k] <= 0.0 && excess[k + 1] > 0.0) {
      double lo = q_grid[k], hi = q_grid[k + 1];
      while (hi - lo > opt.threshold_tol) {
        const double mid = 0.5 * (lo + hi);
        const auto pt = lossy_point(mid, opt.dim);
        (pt.f1_out - pt.f1_in > 0.0 ? hi : lo) = mid;
      }
      res.threshold = 0.5 * (lo + hi);
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------- cat amplification

int cat_protocol_dim(double alpha) {
  const double a = std::abs(alpha);
  return static_cast<int>(std::ceil(2.0 * a * a + 6.0 * std::sqrt(2.0) * a + 10.0));
}

ExperimentRecord cat_amplification(double alpha, std::optional<int> dim) {
  const int need = cat_protocol_dim(alpha);
  const int d = dim.value_or(need);
  const auto cat = make_cat(alpha, d);
  const auto mixed = apply_beam_splitter(tensor(cat, cat), std::numbers::pi / 4.0);
  const auto [p, cond] = project_fock(mixed, 1, 0);
  const auto target = make_cat(std::sqrt(2.0) * alpha, d);
  const double f1_in = metrological_power(cat.density());
  const double f1_out = metrological_power(cond.density());
  const double ratio = f1_out > 0.0 ? f1_in / f1_out : std::numeric_limits<double>::infinity();
  ExperimentRecord rec{"cat", {}};
  const double a2 = alpha * alpha;
  rec.set("alpha", alpha)
      .set("dim", static_cast<std::int64_t>(d))
      .set("dim_warning", d < need)
      .set("p_succ", p)
      .set("fidelity", fidelity(cond, target))
      .set("f1_in", f1_in)
      .set("f1_in_closed_form", a2 * (1.0 + std::tanh(a2)))
      .set("f1_out", f1_out)
      .set("f1_target", metrological_power(target.density()))
      .set("bound_ratio", ratio)
      .set("saturation_gap", ratio - p)
      .set("bound_ok", p <= ratio + 1e-6);
  return rec;
}

// ---------------------------------------------------------------- eta ensemble

EtaTensorResult eta_tensorization_experiment(int d_a, int d_b, int trials, std::uint64_t seed,
                                             const EtaTensorOptions& opt) {
  if (trials < 1) throw DomainError("need at least one trial");
  const auto t0 = std::chrono::steady_clock::now();
  EtaTensorResult res;
  res.records.resize(trials);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        const std::uint64_t s = derive_seed(seed, t);
        std::mt19937_64 rng(s);
        const int ra = opt.rank.value_or(std::uniform_int_distribution<int>(1, d_a * d_a)(rng));
        const int rb = opt.rank.value_or(std::uniform_int_distribution<int>(1, d_b * d_b)(rng));
        const auto phi_a = random_channel(d_a, d_a, ra, derive_seed(s, 1));
        const auto phi_b = random_channel(d_b, d_b, rb, derive_seed(s, 2));
        EtaOptions eo;
        eo.starts = opt.starts;
        eo.simplex = opt.simplex;
        eo.seed = derive_seed(s, 3);
        const auto ea = output_max_coherence(phi_a, eo);
        eo.seed = derive_seed(s, 4);
        const auto eb = output_max_coherence(phi_b, eo);
        eo.seed = derive_seed(s, 5);
        CMatrix prod(d_a * d_b, d_a * d_b);
        for (int i = 0; i < d_a; ++i)
          for (int j = 0; j < d_a; ++j) prod.block(i * d_b, j * d_b, d_b, d_b) = ea.best_input(i, j) * eb.best_input;
        eo.extra_inputs = {prod};
        const auto ej = output_max_coherence(tensor(phi_a, phi_b), eo);
        const double mx = std::max(ea.best, eb.best);
        const double excess = ej.best - mx;
        const bool all_conv = std::all_of(ej.converged.begin(), ej.converged.end(), [](bool b) { return b; }) &&
                              std::all_of(ea.converged.begin(), ea.converged.end(), [](bool b) { return b; }) &&
                              std::all_of(eb.converged.begin(), eb.converged.end(), [](bool b) { return b; });
        ExperimentRecord rec{"eta-tensor", {}};
        rec.set("trial", static_cast<std::int64_t>(t))
            .set("d_a", static_cast<std::int64_t>(d_a))
            .set("d_b", static_cast<std::int64_t>(d_b))
            .set("rank_a", static_cast<std::int64_t>(ra))
            .set("rank_b", static_cast<std::int64_t>(rb))
            .set("eta_a", ea.best)
            .set("eta_b", eb.best)
            .set("max_single", mx)
            .set("joint", ej.best)
            .set("excess", excess)
            .set("floor_ok", ej.best >= mx - opt.floor_tol)
            .set("within_excess", excess <= opt.excess_tol)
            .set("joint_input_rank", static_cast<std::int64_t>(ej.best_input_rank))
            .set("joint_best_start", static_cast<std::int64_t>(ej.best_index))
            .set("joint_spread", ej.spread())
            .set("converged", all_conv)
            .set("predicted_sio_fidelity", (1.0 + ej.best) / 2.0);
        res.records[t] = std::move(rec);
      },
      resolve_workers(opt.workers));
  for (const auto& r : res.records) {
    res.max_excess = std::max(res.max_excess, r.number("excess"));
    if (r.number("floor_ok") == 0.0) ++res.floor_violations;
    if (r.number("within_excess") != 0.0) ++res.within_excess;
    if (r.number("converged") == 0.0) ++res.nonconverged;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------- channel depth tensorization

ExperimentRecord tau_channel_tensorization(double t1, double t2, const NcDepthOptions& single,
                                           const NcDepthOptions& joint) {
  constexpr int d = 3;
  const auto k1 = loss_kraus(t1, d);
  const auto k2 = loss_kraus(t2, d);
  const auto fam1 = default_input_family({d});
  const auto s1 = output_nc_depth(k1, fam1, single);
  const auto s2 = output_nc_depth(k2, fam1, single);
  const auto j = output_nc_depth(tensor(k1, k2), default_input_family({d, d}), joint);
  const double max_lo = std::max(s1.estimate.lower, s2.estimate.lower);
  const double max_hi = std::max(s1.estimate.upper, s2.estimate.upper);
  const double slack = std::max(single.tol, joint.tol);
  ExperimentRecord rec{"tau-tensor", {}};
  rec.set("t1", t1).set("t2", t2);
  put_depth(rec, "single1", s1.estimate);
  put_depth(rec, "single2", s2.estimate);
  put_depth(rec, "joint", j.estimate);
  rec.set("max_single_lo", max_lo)
      .set("max_single_hi", max_hi)
      .set("joint_best_input", j.labels.at(static_cast<std::size_t>(j.best_index)))
      .set("overlap", j.estimate.lower <= max_hi + slack && max_lo <= j.estimate.upper + slack);
  return rec;
}

// ---------------------------------------------------------------- monotonicity

namespace {

CMatrix random_density(int d, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(d, rank);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < rank; ++k) a(i, k) = cplx(g(rng), g(rng));
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

std::pair<std::string, DensityOperator> random_fock_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int kind = std::uniform_int_distribution<int>(0, 4)(rng);
  switch (kind) {
    case 0: {
      const int d = std::uniform_int_distribution<int>(2, 4)(rng);
      const int rank = std::uniform_int_distribution<int>(1, d)(rng);
      return {"random_mixed", DensityOperator(random_density(d, rank, rng), {d})};
    }
    case 1:
      return {"lossy_photon", make_lossy_photon(u(rng))};
    case 2: {
      const cplx b = std::polar(0.7 * u(rng), 2.0 * std::numbers::pi * u(rng));
      return {"coherent", make_coherent(b, recommended_dim(std::abs(b))).density()};
    }
    case 3:
      return {"thermal", make_thermal(0.3 * u(rng), 14)};
    default: {
      const int d = 3;
      const double w = u(rng);
      return {"fock_mix", mix({{w, make_fock(1, d).density()}, {1.0 - w, make_fock(2, d).density()}})};
    }
  }
}

ExperimentRecord fock_trial(std::mt19937_64& rng, const MonotonicityOptions& opt, MonotonicityResult& tally,
                            std::int64_t trial) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto [label, rho] = random_fock_state(rng);
  const int d = rho.dims()[0];
  const int op = std::uniform_int_distribution<int>(0, 4)(rng);
  static const char* names[] = {"displace", "rotate", "ancilla_bs_trace", "ancilla_bs_project", "mix_displaced"};
  const cplx gamma = std::polar(0.5 * u(rng), 2.0 * std::numbers::pi * u(rng));
  std::optional<DensityOperator> out;
  bool deterministic = true;
  switch (op) {
    case 0:
      out = displace(rho, 0, gamma, d + 12);
      break;
    case 1:
      out = phase_rotate(rho, 0, 2.0 * std::numbers::pi * u(rng));
      break;
    case 2:
    case 3: {
      const cplx beta = std::polar(0.5 * u(rng), 2.0 * std::numbers::pi * u(rng));
      const int da = recommended_dim(std::abs(beta));
      const int big = d + da;
      const auto anc = embed(make_coherent(beta, da).density(), {big});
      const auto joint = apply_beam_splitter(tensor(embed(rho, {big}), anc), 0.5 * std::numbers::pi * u(rng));
      if (op == 2) {
        out = partial_trace(joint, {0});
      } else {
        deterministic = false;
        const cplx xi = std::polar(u(rng), 2.0 * std::numbers::pi * u(rng));
        out = project_coherent(joint, 1, xi).conditional;
      }
      break;
    }
    default: {
      const double w = u(rng);
      out = mix({{w, embed(rho, {d + 12})}, {1.0 - w, displace(rho, 0, gamma, d + 12)}});
    }
  }
  const auto tin = nc_depth(rho, opt.depth);
  const auto tout = nc_depth(*out, opt.depth);
  const bool tau_ok = tout.lower <= tin.upper + opt.tau_tol;
  ExperimentRecord rec{"mono", {}};
  rec.set("trial", trial).set("state", label).set("op", std::string(names[op]));
  put_depth(rec, "tau_in", tin);
  put_depth(rec, "tau_out", tout);
  rec.set("tau_ok", tau_ok);
  if (!tau_ok) ++tally.tau_violations;
  if (deterministic) {
    const double fi = metrological_power(rho), fo = metrological_power(*out);
    const bool ok = fo <= fi + opt.f1_tol;
    rec.set("f1_in", fi).set("f1_out", fo).set("f1_ok", ok);
    if (!ok) ++tally.f1_violations;
  } else {
    rec.set("f1_in", std::numeric_limits<double>::quiet_NaN())
        .set("f1_out", std::numeric_limits<double>::quiet_NaN())
        .set("f1_ok", true);
  }
  return rec;
}

GaussianState random_gaussian(int modes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RMatrix v = RMatrix::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) v(2 * m, 2 * m) = v(2 * m + 1, 2 * m + 1) = 0.5 + 0.5 * u(rng);
  GaussianState g(RVector::Zero(2 * modes), v);
  for (int m = 0; m < modes; ++m)
    g = apply_symplectic(g, squeeze_symplectic(u(rng), 2.0 * std::numbers::pi * u(rng), modes, m));
  if (modes == 2) {
    g = apply_symplectic(g, bs_symplectic(0.5 * std::numbers::pi * u(rng), 2, 0, 1));
    g = apply_symplectic(g, squeeze_symplectic(0.5 * u(rng), 2.0 * std::numbers::pi * u(rng), 2, 1));
  }
  std::vector<cplx> shift(modes);
  for (auto& s : shift) s = cplx(u(rng) - 0.5, u(rng) - 0.5);
  return displace(g, shift);
}

void gaussian_trial(std::mt19937_64& rng, const MonotonicityOptions& opt, MonotonicityResult& tally,
                    ExperimentRecord& rec) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int modes = std::uniform_int_distribution<int>(1, 2)(rng);
  const auto g = random_gaussian(modes, rng);
  auto shifts = [&] {
    std::vector<cplx> s(modes);
    for (auto& x : s) x = cplx(u(rng) - 0.5, u(rng) - 0.5);
    return s;
  };
  // passive + displacement + noise: free for the classical-state set
  GaussianState pc = g;
  for (int m = 0; m < modes; ++m) pc = apply_symplectic(pc, phase_symplectic(2.0 * std::numbers::pi * u(rng), modes, m));
  if (modes == 2) pc = apply_symplectic(pc, bs_symplectic(0.5 * std::numbers::pi * u(rng), 2, 0, 1));
  pc = add_thermal(displace(pc, shifts()), 0.5 * u(rng));
  const double kin = kappa_classical(g), kout = kappa_classical(pc);
  bool ok = kout <= kin + opt.kappa_tol;
  rec.set("gauss_modes", static_cast<std::int64_t>(modes)).set("kappa_c_in", kin).set("kappa_c_out", kout);
  if (modes == 2) {
    // local symplectics + displacement + noise: free for the separable set
    GaussianState loc = g;
    for (int m = 0; m < 2; ++m) {
      loc = apply_symplectic(loc, squeeze_symplectic(u(rng), 2.0 * std::numbers::pi * u(rng), 2, m));
      loc = apply_symplectic(loc, phase_symplectic(2.0 * std::numbers::pi * u(rng), 2, m));
    }
    loc = add_thermal(displace(loc, shifts()), 0.5 * u(rng));
    const double sin = kappa_separable_two_mode(g, 1e-11), sout = kappa_separable_two_mode(loc, 1e-11);
    rec.set("kappa_s_in", sin).set("kappa_s_out", sout);
    ok = ok && sout <= sin + opt.kappa_tol;
  } else {
    rec.set("kappa_s_in", std::numeric_limits<double>::quiet_NaN())
        .set("kappa_s_out", std::numeric_limits<double>::quiet_NaN());
  }
  rec.set("kappa_ok", ok);
  if (!ok) ++tally.kappa_violations;
}

}  // namespace

MonotonicityResult monotonicity_suite(int trials, std::uint64_t seed, const MonotonicityOptions& opt) {
  if (trials < 1) throw DomainError("need at least one trial");
  std::vector<MonotonicityResult> partial(trials);
  std::vector<ExperimentRecord> recs(trials);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(seed, t));
        auto rec = fock_trial(rng, opt, partial[t], static_cast<std::int64_t>(t));
        gaussian_trial(rng, opt, partial[t], rec);
        rec.set("seed", static_cast<std::int64_t>(derive_seed(seed, t) >> 1));
        recs[t] = std::move(rec);
      },
      resolve_workers(opt.workers));
  MonotonicityResult res;
  res.records = std::move(recs);
  for (int t = 0; t < trials; ++t) {
    const auto& p = partial[t];
    res.tau_violations += p.tau_violations;
    res.f1_violations += p.f1_violations;
    res.kappa_violations += p.kappa_violations;
    if (p.tau_violations + p.f1_violations + p.kappa_violations > 0) res.failing_trials.push_back(t);
  }
  return res;
}

// ---------------------------------------------------------------- TMSV conditioning

ExperimentRecord tmsv_conditioning(double r, std::optional<int> dim, cplx xi, const NcDepthOptions& depth) {
  if (r < 0.0 || r > 1.5) throw DomainError("squeezing must lie in [0, 1.5]");
  const double pi = std::numbers::pi;
  const auto mixed = apply_symplectic(tensor(GaussianState::squeezed_vacuum(r, 0.0), GaussianState::squeezed_vacuum(r, pi)),
                                      bs_symplectic(pi / 4.0));
  const auto tmsv = GaussianState::two_mode_squeezed(r);
  RVector outcome(2);
  outcome << std::sqrt(2.0) * xi.real(), std::sqrt(2.0) * xi.imag();
  const auto cond = condition_on_heterodyne(tmsv, 1, outcome);
  const double tau_tmsv = nc_depth_gaussian(tmsv);
  const double tau_cond = nc_depth_gaussian(cond);

  int d = 2;
  const double t = std::tanh(r);
  while (std::pow(t, 2.0 * d) > 1e-12) ++d;
  d = dim.value_or(std::max(d + 2, 4));
  const auto rho = make_two_mode_squeezed(r, d).density();
  const auto coh = project_coherent(rho, 1, xi);
  const auto coh_depth = nc_depth(coh.conditional, depth);

  ExperimentRecord rec{"tmsv", {}};
  rec.set("r", r)
      .set("dim", static_cast<std::int64_t>(d))
      .set("mix_cov_err", (mixed.cov() - tmsv.cov()).cwiseAbs().maxCoeff())
      .set("tau_tmsv_gaussian", tau_tmsv)
      .set("tau_cond_gaussian", tau_cond)
      .set("coherent_ok", tau_cond <= tau_tmsv + 1e-12 && coh_depth.lower <= tau_tmsv + depth.tol)
      .set("p_coherent_density", coh.povm_density);
  put_depth(rec, "tau_cond_fock", coh_depth);
  const double f1_in = metrological_power(rho);
  rec.set("f1_tmsv", f1_in);
  // P(n = 1) on the conditioning mode
  const double prob1 = t * t / std::pow(std::cosh(r), 2.0);
  if (prob1 >= 1e-14) {
    const auto f1proj = project_fock(rho, 1, 1);
    const auto dep = nc_depth(f1proj.conditional, depth);
    const double f1_out = metrological_power(f1proj.conditional);
    const double ratio = f1_out > 0.0 ? f1_in / f1_out : std::numeric_limits<double>::infinity();
    rec.set("p_fock1", f1proj.probability);
    put_depth(rec, "tau_fock1", dep);
    rec.set("f1_fock1", f1_out).set("bound_ratio", ratio).set("bound_ok", f1proj.probability <= ratio + 1e-6);
  } else {
    rec.set("p_fock1", 0.0)
        .set("tau_fock1_lo", 0.0)
        .set("tau_fock1_hi", 0.0)
        .set("f1_fock1", 0.0)
        .set("bound_ratio", std::numeric_limits<double>::infinity())
        .set("bound_ok", true);
  }
  return rec;
}

}  // namespace qres
