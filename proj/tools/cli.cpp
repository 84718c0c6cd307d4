#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "descriptors.hpp"
#include "emit.hpp"
#include "qres/experiments.hpp"

namespace qres::cli {
namespace {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string svg;  // extra SVG rendering next to the main output
  std::string format;  // empty: the command's default
  std::optional<double> tol;
  std::optional<int> grid;
  bool no_refine = false;
  std::string x;
  std::vector<std::string> y;

  std::string state_path, choi_path;
  int d_in = 2, d_out = 2, starts = 32;
  std::optional<int> rank;
  double q_min = 0.0, q_max = 1.0;
  int steps = 101, dim = 8;
  bool no_depth = false;
  double alpha = 3.0;
  std::optional<int> opt_dim;
  int d_a = 2, d_b = 2, eta_trials = 100, mono_trials = 20;
  double t1 = 0.8, t2 = 0.3, r = 0.5;
};

NcDepthOptions depth_options(const RunConfig& rc) {
  NcDepthOptions o;
  if (rc.tol) o.tol = *rc.tol;
  if (rc.grid) o.grid = *rc.grid;
  o.refine = !rc.no_refine;
  return o;
}

json depth_config(const NcDepthOptions& o) {
  return {{"grid", o.grid}, {"tol", o.tol}, {"eps_neg", o.eps_neg}, {"refine", o.refine}, {"gaussian_tol", o.gaussian_tol}};
}

json depth_json(const DepthEstimate& e) {
  return {{"lower", e.lower},
          {"upper", e.upper},
          {"grid", e.grid},
          {"truncation_aware", e.truncation_aware},
          {"unresolved", e.unresolved},
          {"gaussian", e.gaussian}};
}

ExperimentRecord depth_record(const std::string& name, const DepthEstimate& e) {
  ExperimentRecord rec{name, {}};
  rec.set("lower", e.lower)
      .set("upper", e.upper)
      .set("grid", static_cast<std::int64_t>(e.grid))
      .set("truncation_aware", e.truncation_aware)
      .set("unresolved", e.unresolved)
      .set("gaussian", e.gaussian);
  return rec;
}

std::vector<ExperimentRecord> matrix_records(const std::string& name, const CMatrix& m) {
  std::vector<ExperimentRecord> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      ExperimentRecord rec{name, {}};
      rec.set("i", static_cast<std::int64_t>(i)).set("j", static_cast<std::int64_t>(j)).set("re", m(i, j).real()).set("im", m(i, j).imag());
      rows.push_back(std::move(rec));
    }
  return rows;
}

Output base(const std::string& command, const RunConfig& rc) {
  Output o;
  o.command = command;
  o.seed = rc.seed;
  o.config = {{"command", command}, {"seed", rc.seed}};
  return o;
}

struct LoadedState {
  Descriptor source;
  DensityOperator rho;
};

LoadedState load_state(const RunConfig& rc) {
  auto d = load_descriptor(rc.state_path, "state");
  auto rho = parse_state(d);
  return {std::move(d), std::move(rho)};
}

// ---- commands ----

Output cmd_state(const RunConfig& rc) {
  auto [src, rho] = load_state(rc);
  Output o = base("state", rc);
  o.config["state"] = src.value;
  o.payload["state"] = state_to_json(rho);
  o.records = matrix_records("state", rho.matrix());
  o.plot = {"i", {"re"}};
  return o;
}

Output cmd_measure(const std::string& which, const RunConfig& rc) {
  auto [src, rho] = load_state(rc);
  Output o = base("measure " + which, rc);
  o.config["state"] = src.value;
  ExperimentRecord rec{which, {}};
  if (which == "f1" || which == "qfi") {
    const auto q = qfi_matrix(rho);
    const double f1 = metrological_power(q);
    o.payload["f1"] = f1;
    o.payload["warnings"] = q.warnings;
    if (which == "qfi") {
      json rows = json::array();
      for (Eigen::Index i = 0; i < q.matrix.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < q.matrix.cols(); ++j) row.push_back(q.matrix(i, j));
        rows.push_back(std::move(row));
      }
      o.payload["qfi"] = std::move(rows);
      o.records = matrix_records("qfi", q.matrix.cast<cplx>());
      o.plot = {"i", {"re"}};
      return o;
    }
    rec.set("f1", f1).set("warnings", static_cast<std::int64_t>(q.warnings.size()));
    o.plot = {"f1", {"f1"}};
  } else if (which == "ncdepth") {
    const auto opt = depth_options(rc);
    o.config["depth"] = depth_config(opt);
    const auto e = nc_depth(rho, opt);
    o.payload["ncdepth"] = depth_json(e);
    rec = depth_record("ncdepth", e);
    o.plot = {"lower", {"upper"}};
  } else if (which == "eta") {
    const double eta = max_coherence(rho);
    o.payload["eta"] = eta;
    rec.set("eta", eta);
    o.plot = {"eta", {"eta"}};
  } else {
    const auto s = predicted_sio_fidelity(rho.matrix());
    o.payload["sio"] = {{"fidelity", s.fidelity}, {"eta", s.eta}, {"distillable", s.distillable}};
    rec.set("fidelity", s.fidelity).set("eta", s.eta).set("distillable", s.distillable);
    o.plot = {"eta", {"fidelity"}};
  }
  o.records.push_back(std::move(rec));
  return o;
}

Output cmd_gaussian(const RunConfig& rc) {
  auto src = load_descriptor(rc.state_path, "gaussian");
  const auto g = parse_gaussian(src);
  Output o = base("gaussian", rc);
  o.config["state"] = src.value;
  ExperimentRecord rec{"gaussian", {}};
  rec.set("modes", static_cast<std::int64_t>(g.modes()))
      .set("nc_depth", nc_depth_gaussian(g))
      .set("kappa_classical", kappa_classical(g))
      .set("min_symplectic_eigenvalue", min_symplectic_eigenvalue(g.cov()))
      .set("physicality_margin", g.physicality_margin());
  if (g.modes() == 2) {
    rec.set("kappa_separable", kappa_separable_two_mode(g)).set("min_pt_symplectic_eigenvalue", min_pt_symplectic_eigenvalue(g.cov()));
  }
  o.payload["gaussian"] = gaussian_to_json(g);
  for (const auto& [k, v] : rec.fields)
    if (k != "modes") o.payload[k] = std::get<double>(v);
  o.records.push_back(std::move(rec));
  o.plot = {"kappa_classical", {"nc_depth"}};
  return o;
}

Output cmd_channel_random(const RunConfig& rc) {
  const int rank = rc.rank.value_or(rc.d_in * rc.d_out);
  const auto phi = random_channel(rc.d_in, rc.d_out, rank, rc.seed);
  Output o = base("channel random", rc);
  o.config.update({{"d_in", rc.d_in}, {"d_out", rc.d_out}, {"rank", rank}});
  o.payload["choi"] = choi_to_json(phi);
  ExperimentRecord rec{"channel", {}};
  rec.set("d_in", static_cast<std::int64_t>(rc.d_in))
      .set("d_out", static_cast<std::int64_t>(rc.d_out))
      .set("rank", static_cast<std::int64_t>(rank))
      .set("trace_defect", phi.trace_defect());
  o.records.push_back(std::move(rec));
  o.plot = {"rank", {"trace_defect"}};
  return o;
}

Output cmd_channel_eta(const RunConfig& rc) {
  auto src = load_descriptor(rc.choi_path, "choi");
  const auto phi = parse_choi(src);
  EtaOptions opt;
  opt.starts = rc.starts;
  opt.seed = rc.seed;
  const auto rep = output_max_coherence(phi, opt);
  Output o = base("channel eta", rc);
  o.config.update({{"choi", src.value}, {"starts", rc.starts}});
  o.payload["eta"] = rep.best;
  o.payload["best_start"] = rep.best_index;
  o.payload["best_input_rank"] = rep.best_input_rank;
  o.payload["best_input"] = state_to_json(DensityOperator(rep.best_input, {phi.d_in()}));
  for (std::size_t s = 0; s < rep.per_start.size(); ++s) {
    ExperimentRecord rec{"channel-eta", {}};
    rec.set("start", static_cast<std::int64_t>(s))
        .set("eta", rep.per_start[s])
        .set("iterations", static_cast<std::int64_t>(rep.iterations[s]))
        .set("converged", static_cast<bool>(rep.converged[s]));
    o.records.push_back(std::move(rec));
  }
  o.plot = {"start", {"eta"}};
  return o;
}

Output cmd_lossy_scan(const RunConfig& rc) {
  if (rc.steps < 2) throw UsageError("--steps must be at least 2");
  std::vector<double> grid;
  for (int i = 0; i < rc.steps; ++i) grid.push_back(rc.q_min + (rc.q_max - rc.q_min) * i / (rc.steps - 1));
  LossyScanOptions opt;
  opt.dim = rc.dim;
  opt.with_depth = !rc.no_depth;
  opt.depth = depth_options(rc);
  const auto res = lossy_concentration_scan(grid, opt);
  Output o = base("exp lossy-scan", rc);
  o.config.update({{"q_min", rc.q_min}, {"q_max", rc.q_max}, {"steps", rc.steps}, {"dim", rc.dim},
                   {"with_depth", opt.with_depth}, {"threshold_tol", opt.threshold_tol}});
  if (opt.with_depth) o.config["depth"] = depth_config(opt.depth);
  o.records = res.records;
  if (res.threshold) {
    ExperimentRecord rec{"lossy-threshold", {}};
    rec.set("q_star", *res.threshold);
    o.records.push_back(std::move(rec));
    o.payload["threshold"] = *res.threshold;
  } else {
    o.payload["threshold"] = nullptr;
  }
  o.payload["bound_holds"] = res.bound_holds;
  o.payload["max_closed_form_error"] = res.max_closed_form_error;
  o.plot = {"q", {"f1_in", "f1_out", "p_f1_out"}, false, true};
  return o;
}

Output cmd_cat(const RunConfig& rc) {
  Output o = base("exp cat", rc);
  const int dim = rc.opt_dim.value_or(cat_protocol_dim(rc.alpha));
  o.config.update({{"alpha", rc.alpha}, {"dim", dim}});
  o.records.push_back(cat_amplification(rc.alpha, dim));
  o.plot = {"alpha", {"p_succ", "bound_ratio"}};
  return o;
}

Output cmd_eta_tensor(const RunConfig& rc) {
  EtaTensorOptions opt;
  opt.starts = rc.starts;
  opt.rank = rc.rank;
  const auto res = eta_tensorization_experiment(rc.d_a, rc.d_b, rc.eta_trials, rc.seed, opt);
  Output o = base("exp eta-tensor", rc);
  o.config.update({{"d_a", rc.d_a}, {"d_b", rc.d_b}, {"trials", rc.eta_trials}, {"starts", rc.starts},
                   {"rank", rc.rank ? json(*rc.rank) : json(nullptr)}, {"floor_tol", opt.floor_tol},
                   {"excess_tol", opt.excess_tol}});
  o.records = res.records;
  o.payload.update({{"max_excess", res.max_excess},
                    {"floor_violations", res.floor_violations},
                    {"within_excess", res.within_excess},
                    {"nonconverged", res.nonconverged}});
  o.plot = {"max_single", {"joint"}, true, false};
  return o;
}

Output cmd_mono(const RunConfig& rc) {
  MonotonicityOptions opt;
  if (rc.tol) opt.depth.tol = *rc.tol;
  if (rc.grid) opt.depth.grid = *rc.grid;
  opt.depth.refine = !rc.no_refine;
  const auto res = monotonicity_suite(rc.mono_trials, rc.seed, opt);
  Output o = base("exp mono", rc);
  o.config.update({{"trials", rc.mono_trials}, {"depth", depth_config(opt.depth)}, {"tau_tol", opt.tau_tol},
                   {"f1_tol", opt.f1_tol}, {"kappa_tol", opt.kappa_tol}});
  o.records = res.records;
  o.payload.update({{"tau_violations", res.tau_violations},
                    {"f1_violations", res.f1_violations},
                    {"kappa_violations", res.kappa_violations},
                    {"failing_trials", res.failing_trials}});
  o.plot = {"tau_in_hi", {"tau_out_lo"}, true, false};
  return o;
}

Output cmd_tau_tensor(const RunConfig& rc) {
  const auto opt = depth_options(rc);
  Output o = base("exp tau-tensor", rc);
  o.config.update({{"t1", rc.t1}, {"t2", rc.t2}, {"depth", depth_config(opt)}});
  o.records.push_back(tau_channel_tensorization(rc.t1, rc.t2, opt, opt));
  o.plot = {"max_single_hi", {"joint_hi"}, true, false};
  return o;
}

Output cmd_tmsv(const RunConfig& rc) {
  const auto opt = depth_options(rc);
  Output o = base("exp tmsv", rc);
  o.config.update({{"r", rc.r}, {"dim", rc.opt_dim ? json(*rc.opt_dim) : json(nullptr)}, {"depth", depth_config(opt)}});
  o.records.push_back(tmsv_conditioning(rc.r, rc.opt_dim, {0.3, -0.2}, opt));
  o.plot = {"r", {"tau_tmsv_gaussian", "tau_cond_gaussian"}};
  return o;
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  return Format::svg;
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError(path + ": cannot open for writing");
  f << text;
  f.close();
  if (!f) throw UsageError(path + ": write failed");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Nonclassicality and coherence resource toolkit", "qres"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  app.add_option("--seed", rc.seed, "Seed for randomized commands")->capture_default_str();
  app.add_option("--out", rc.out, "Output file, - for stdout")->capture_default_str();
  app.add_option("--format", rc.format, "csv, json or svg (default: json, csv for exp)")
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  app.add_option("--tol", rc.tol, "Depth bracket width")->check(CLI::PositiveNumber);
  app.add_option("--grid", rc.grid, "Phase-space grid points per axis")->check(CLI::Range(3, 1001));
  app.add_flag("--no-refine", rc.no_refine, "Skip local refinement of the depth grid minimum");
  app.add_option("--svg", rc.svg, "Also write an SVG plot to this file");
  app.add_option("--x", rc.x, "SVG x field");
  app.add_option("--y", rc.y, "SVG y fields")->delimiter(',');

  std::function<Output()> job;
  std::string default_format = "json";

  auto* state = app.add_subcommand("state", "Expand a state descriptor into an explicit density matrix");
  state->add_option("--state", rc.state_path, "State descriptor (JSON)")->required();
  state->callback([&] { job = [&] { return cmd_state(rc); }; });

  auto* measure = app.add_subcommand("measure", "Evaluate a measure on a state");
  measure->require_subcommand(1);
  for (const char* name : {"f1", "ncdepth", "eta", "qfi", "sio"}) {
    auto* sub = measure->add_subcommand(name);
    sub->add_option("--state", rc.state_path, "State descriptor (JSON)")->required();
    sub->callback([&, which = std::string(name)] { job = [&, which] { return cmd_measure(which, rc); }; });
  }

  auto* gauss = app.add_subcommand("gaussian", "Gaussian measures from mean and covariance");
  gauss->add_option("--state", rc.state_path, "Gaussian descriptor (JSON)")->required();
  gauss->callback([&] { job = [&] { return cmd_gaussian(rc); }; });

  auto* channel = app.add_subcommand("channel", "Channel tools");
  channel->require_subcommand(1);
  auto* random = channel->add_subcommand("random", "Sample a random channel");
  random->add_option("--din", rc.d_in)->check(CLI::PositiveNumber)->capture_default_str();
  random->add_option("--dout", rc.d_out)->check(CLI::PositiveNumber)->capture_default_str();
  random->add_option("--rank", rc.rank, "Kraus rank (default d_in * d_out)")->check(CLI::PositiveNumber);
  random->callback([&] { job = [&] { return cmd_channel_random(rc); }; });
  auto* ceta = channel->add_subcommand("eta", "Maximal output coherence of a channel");
  ceta->add_option("--choi", rc.choi_path, "Channel descriptor (JSON)")->required();
  ceta->add_option("--starts", rc.starts)->check(CLI::PositiveNumber)->capture_default_str();
  ceta->callback([&] { job = [&] { return cmd_channel_eta(rc); }; });

  auto* exp = app.add_subcommand("exp", "Reproduce an experiment");
  exp->require_subcommand(1);
  auto on_exp = [&](CLI::App* sub, std::function<Output(const RunConfig&)> fn) {
    sub->callback([&, fn] {
      default_format = "csv";
      job = [&, fn] { return fn(rc); };
    });
  };
  auto* lossy = exp->add_subcommand("lossy-scan", "Lossy single-photon concentration scan");
  lossy->add_option("--qmin", rc.q_min)->capture_default_str();
  lossy->add_option("--qmax", rc.q_max)->capture_default_str();
  lossy->add_option("--steps", rc.steps)->capture_default_str();
  lossy->add_option("--dim", rc.dim)->check(CLI::Range(3, 64))->capture_default_str();
  lossy->add_flag("--no-depth", rc.no_depth, "Skip the nonclassicality depth columns");
  on_exp(lossy, cmd_lossy_scan);
  auto* cat = exp->add_subcommand("cat", "Cat-state amplification");
  cat->add_option("--alpha", rc.alpha)->capture_default_str();
  cat->add_option("--dim", rc.opt_dim, "Fock cutoff (default from alpha)");
  on_exp(cat, cmd_cat);
  auto* etat = exp->add_subcommand("eta-tensor", "Maximal coherence of random channel pairs");
  etat->add_option("--da", rc.d_a)->check(CLI::Range(2, 8))->capture_default_str();
  etat->add_option("--db", rc.d_b)->check(CLI::Range(2, 8))->capture_default_str();
  etat->add_option("--trials", rc.eta_trials)->check(CLI::PositiveNumber)->capture_default_str();
  etat->add_option("--starts", rc.starts)->check(CLI::PositiveNumber)->capture_default_str();
  etat->add_option("--rank", rc.rank, "Kraus rank (default random per channel)")->check(CLI::PositiveNumber);
  on_exp(etat, cmd_eta_tensor);
  auto* mono = exp->add_subcommand("mono", "Randomized monotonicity checks");
  mono->add_option("--trials", rc.mono_trials)->check(CLI::PositiveNumber)->capture_default_str();
  on_exp(mono, cmd_mono);
  auto* taut = exp->add_subcommand("tau-tensor", "Depth of a pair of loss channels");
  taut->add_option("--t1", rc.t1)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  taut->add_option("--t2", rc.t2)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  on_exp(taut, cmd_tau_tensor);
  auto* tmsv = exp->add_subcommand("tmsv", "Two-mode squeezed vacuum conditioning");
  tmsv->add_option("--r", rc.r)->capture_default_str();
  tmsv->add_option("--dim", rc.opt_dim, "Fock cutoff per mode");
  on_exp(tmsv, cmd_tmsv);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "qres: " << e.what() << "\n";
    return 2;
  }

  // `--out json` names a format, not a file
  if (rc.out == "json" || rc.out == "csv" || rc.out == "svg") {
    if (rc.format.empty()) rc.format = rc.out;
    rc.out = "-";
  }
  try {
    Output result = job();
    const Format fmt = parse_format(rc.format.empty() ? default_format : rc.format);
    result.config["format"] = rc.format.empty() ? default_format : rc.format;
    if (!rc.x.empty()) result.plot.x = rc.x;
    if (!rc.y.empty()) result.plot.y = rc.y;
    if (fmt == Format::svg || !rc.svg.empty()) result.config["plot"] = {{"x", result.plot.x}, {"y", result.plot.y}};
    std::ostringstream text, plot;
    emit(result, fmt, text);
    if (!rc.svg.empty()) emit(result, Format::svg, plot);
    write_output(text.str(), rc.out, out);
    if (!rc.svg.empty()) write_output(plot.str(), rc.svg, out);
    return 0;
  } catch (const UsageError& e) {
    err << "qres: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "qres: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "qres: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "qres: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qres::cli
