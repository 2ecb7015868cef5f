// gaugeflow: lattice Yang-Mills flow, Coulomb gauge fixing and convergence
// analysis on the flat torus. See README.md for the config grammar, file
// formats and exit codes.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "gaugeflow/driver.hpp"
#include "gaugeflow/flow.hpp"
#include "gaugeflow/functionals.hpp"
#include "gaugeflow/gaugefix.hpp"
#include "gaugeflow/lojasiewicz.hpp"
#include "gaugeflow/trajectory_io.hpp"
#include "gaugeflow/verify.hpp"

using json = nlohmann::ordered_json;
using namespace gaugeflow;

namespace {

// exit-code contract (fixed for scripting)
constexpr int kOk = 0;
constexpr int kVerifyFail = 1;
constexpr int kConfigError = 2;
constexpr int kTMax = 3;
constexpr int kNumeric = 4;
constexpr int kGaugeFixFail = 5;

struct CommonArgs {
  std::string config_path;
  std::string input_path;
  std::string ref_path;
  std::string out_dir = ".";
  int threads = 0;  // 0: from config; env var wins over both
  int count = 8;    // spectrum block size
  bool estimate_zeta = false;
};

void apply_threads(const ExperimentConfig& cfg, const CommonArgs& args) {
  // precedence: GAUGEFLOW_THREADS env, then --threads, then config
  if (std::getenv("GAUGEFLOW_THREADS") != nullptr) return;  // already applied
  if (args.threads > 0)
    set_threads(args.threads);
  else
    set_threads(cfg.threads);
}

void write_json(const std::string& path, const json& j) {
  detail::atomic_write(path, j.dump(2) + "\n");
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

json sanitize(double v) {
  if (std::isfinite(v)) return json(v);
  return json();  // null for nan/inf keeps the reports parseable
}

int cmd_flow(const ExperimentConfig& cfg, const CommonArgs& args) {
  return with_group(cfg.group, [&](auto g) -> int {
    using G = decltype(g);
    Lattice lat(cfg.lattice);
    const FunctionalSpec spec = make_functional_spec(cfg, lat);
    Configuration<G> start = args.input_path.empty()
                                 ? make_initial_config(cfg, g, lat)
                                 : read_checkpoint(args.input_path, g, lat);
    std::filesystem::create_directories(args.out_dir);

    // optional periodic re-gauge-fixing against the start configuration;
    // best effort, a state outside the basin is left untouched
    const Configuration<G> gauge_ref = start;
    auto regauge = [&](Configuration<G>& state) -> bool {
      try {
        auto [u, rep] = continuation_fix(g, lat, state, gauge_ref, 1e-10);
        state = gauge_apply(g, lat, u, state);
        return true;
      } catch (const NoConvergenceError&) {
        return false;
      } catch (const LogBranchError&) {
        return false;
      }
    };

    Trajectory<G> traj;
    std::string termination;
    int code = kOk;
    try {
      traj = flow_run(g, lat, spec, std::move(start), cfg.flow,
                      [&](long step, const Configuration<G>& snap) {
                        char name[64];
                        std::snprintf(name, sizeof(name), "ckpt_%08ld.ckpt", step);
                        write_checkpoint(join(args.out_dir, name), g, lat, snap);
                      },
                      regauge);
      termination = traj.termination;
      if (termination == "t_max") code = kTMax;
    } catch (const LogBranchError& e) {
      std::fprintf(stderr, "numeric failure: %s\n", e.what());
      return kNumeric;
    } catch (const StepUnderflowError& e) {
      std::fprintf(stderr, "numeric failure: %s\n", e.what());
      return kNumeric;
    }

    write_trajectory_csv(join(args.out_dir, "traj.csv"), traj.samples);
    write_checkpoint(join(args.out_dir, "final.ckpt"), g, lat, traj.final_config);

    const auto einf = estimate_e_inf(traj.samples);
    json summary;
    summary["termination"] = termination;
    summary["t_final"] = traj.samples.back().t;
    summary["energy_final"] = traj.samples.back().energy;
    summary["grad_l2_final"] = traj.samples.back().grad_l2;
    summary["grad_wneg1_final"] = traj.samples.back().grad_wneg1;
    summary["steps_accepted"] = traj.steps_accepted;
    summary["steps_rejected"] = traj.steps_rejected;
    summary["samples"] = traj.samples.size();
    summary["path_length"] = traj.path_length;
    summary["e_inf"] = {{"e_final", einf.e_final},
                        {"e_aitken", einf.e_aitken},
                        {"discrepancy", einf.discrepancy},
                        {"method", einf.method}};
    write_json(join(args.out_dir, "summary.json"), summary);
    return code;
  });
}

int cmd_gauge_fix(const ExperimentConfig& cfg, const CommonArgs& args) {
  if (args.input_path.empty() || args.ref_path.empty()) {
    std::fprintf(stderr, "gauge-fix requires --input and --ref checkpoints\n");
    return kConfigError;
  }
  return with_group(cfg.group, [&](auto g) -> int {
    using G = decltype(g);
    Lattice lat(cfg.lattice);
    const auto input = read_checkpoint(args.input_path, g, lat);
    const auto ref = read_checkpoint(args.ref_path, g, lat);
    std::filesystem::create_directories(args.out_dir);

    json rep_json;
    GaugeFixReport rep;
    int code = kOk;
    try {
      auto [u, r] = continuation_fix(g, lat, input, ref, cfg.gaugefix_tol,
                                     cfg.gaugefix_max_newton);
      rep = r;
      const auto fixed = gauge_apply(g, lat, u, input);
      write_checkpoint(join(args.out_dir, "fixed.ckpt"), g, lat, fixed);
    } catch (const NoConvergenceError& e) {
      rep.converged = false;
      rep.final_residual = e.last_residual;
      std::fprintf(stderr, "gauge-fix failed: %s\n", e.what());
      code = kGaugeFixFail;
    } catch (const LogBranchError& e) {
      std::fprintf(stderr, "numeric failure: %s\n", e.what());
      return kNumeric;
    }

    if (args.estimate_zeta) {
      try {
        Tangent<G> dir = relative_difference(lat, input, ref);
        const double n = sobolev_norm(lat, dir, NormSpec{1, 2.0});
        if (n > 0) {
          dir *= 1.0 / n;
          auto z = estimate_zeta(g, lat, ref, dir, cfg.gaugefix_tol);
          rep.empirical_zeta = z.last_success;
        }
      } catch (const LogBranchError&) {
        // direction unusable; zeta stays unset
      }
    }

    rep_json["converged"] = rep.converged;
    rep_json["final_residual"] = rep.final_residual;
    rep_json["newton_iterations_total"] = rep.newton_iterations_total;
    rep_json["continuation_steps"] = rep.continuation_steps;
    rep_json["norm_ratio"] = sanitize(rep.norm_ratio);
    rep_json["empirical_zeta"] =
        rep.empirical_zeta ? json(*rep.empirical_zeta) : json();
    write_json(join(args.out_dir, "gauge_fix_report.json"), rep_json);
    return code;
  });
}

int cmd_spectrum(const ExperimentConfig& cfg, const CommonArgs& args) {
  return with_group(cfg.group, [&](auto g) -> int {
    using G = decltype(g);
    Lattice lat(cfg.lattice);
    Configuration<G> conf = args.input_path.empty()
                                ? make_initial_config(cfg, g, lat)
                                : read_checkpoint(args.input_path, g, lat);
    std::filesystem::create_directories(args.out_dir);
    LinOp op = make_pair_laplacian_op(g, lat, conf);
    SpectrumReport rep;
    try {
      rep = spectrum_low(op, args.count);
    } catch (const NoConvergenceError& e) {
      std::fprintf(stderr, "spectrum failed: %s\n", e.what());
      return kNumeric;
    }
    json j;
    j["eigenvalues"] = rep.eigenvalues;
    j["kernel_dim"] = rep.kernel_dim;
    j["mu"] = rep.mu;
    write_json(join(args.out_dir, "spectrum.json"), j);
    return kOk;
  });
}

int cmd_ls(const ExperimentConfig& cfg, const CommonArgs& args) {
  if (args.input_path.empty()) {
    std::fprintf(stderr, "ls-estimate requires --input <traj.csv>\n");
    return kConfigError;
  }
  const auto samples = read_trajectory_csv(args.input_path);
  std::filesystem::create_directories(args.out_dir);

  // mu[A] at the limit point when its checkpoint is supplied: the least
  // positive eigenvalue of the pair Laplacian there, which sets the expected
  // exponential rate in the Morse-Bott case
  double mu_reference = 0.0;
  std::string mu_note = "absent";
  if (!args.ref_path.empty()) {
    mu_reference = with_group(cfg.group, [&](auto g) -> double {
      Lattice lat(cfg.lattice);
      const auto spec = make_functional_spec(cfg, lat);
      const auto limit = read_checkpoint(args.ref_path, g, lat);
      try {
        LinOp op = make_pair_laplacian_op(g, lat, limit);
        auto rep = spectrum_low(op, args.count);
        // a limit that is only epsilon-critical splits the true kernel into
        // near-zero eigenvalues; skip everything at the criticality scale
        const double gn = l2_norm_tan(lat, gradient(g, lat, spec, limit));
        const double floor = 1e4 * gn;
        mu_note = "pair_laplacian";
        for (double e : rep.eigenvalues)
          if (e >= floor && e >= rep.mu) return e;
        return rep.mu;
      } catch (const NoConvergenceError&) {
        mu_note = "no_convergence";
        return 0.0;
      } catch (const LogBranchError&) {
        mu_note = "log_branch";
        return 0.0;
      }
    });
  }

  try {
    const auto einf = estimate_e_inf(samples);
    const double e_inf = einf.e_aitken;
    const auto est = ls_estimate(samples, e_inf, cfg.ls);
    const auto est_dual = [&]() -> std::optional<LSEstimate> {
      try {
        return ls_estimate(samples, e_inf, cfg.ls, true);
      } catch (const InsufficientDataError&) {
        return std::nullopt;
      }
    }();
    const double margin = verify_inequality(samples, est.theta, est.Z, e_inf, cfg.ls);
    const auto path = path_length_bound(samples, est.theta, est.Z, e_inf, cfg.ls);
    const auto rate = classify_rate(samples, e_inf, mu_reference, cfg.ls);

    json j;
    j["theta"] = est.theta;
    j["Z"] = est.Z;
    j["sigma_window"] = sanitize(est.sigma_window);
    j["fit_r2"] = est.fit_r2;
    j["rate_class"] = to_string(rate.rate_class);
    j["lambda"] = rate.lambda;
    j["path_ratio"] = path.ratio;
    j["e_inf"] = e_inf;
    j["e_inf_method"] = einf.method;
    j["e_inf_discrepancy"] = einf.discrepancy;
    j["n_points"] = est.n_points;
    j["margin"] = margin;
    j["beta"] = rate.beta;
    j["r2_exponential"] = rate.r2_exponential;
    j["r2_power"] = rate.r2_power;
    j["mu_reference"] = mu_reference;
    j["mu_source"] = mu_note;
    // the dual-norm fit is reported alongside the L2 fit
    if (est_dual) {
      j["theta_wneg1"] = est_dual->theta;
      j["Z_wneg1"] = est_dual->Z;
      j["fit_r2_wneg1"] = est_dual->fit_r2;
    } else {
      j["theta_wneg1"] = json();
      j["Z_wneg1"] = json();
      j["fit_r2_wneg1"] = json();
    }
    write_json(join(args.out_dir, "ls_report.json"), j);
    return kOk;
  } catch (const InsufficientDataError& e) {
    std::fprintf(stderr, "ls-estimate: %s\n", e.what());
    return kNumeric;
  }
}

int cmd_verify(const ExperimentConfig& cfg, const CommonArgs& args) {
  return with_group(cfg.group, [&](auto g) -> int {
    Lattice lat(cfg.lattice);
    const auto rep = run_verify(g, lat, cfg.verify_trials, cfg.seed);
    std::filesystem::create_directories(args.out_dir);
    json j;
    j["pass"] = rep.pass;
    j["failed"] = rep.failed;
    json suites;
    for (const auto& [name, worst] : rep.worst)
      suites[name] = {{"worst", worst}, {"threshold", rep.threshold.at(name)}};
    j["suites"] = suites;
    write_json(join(args.out_dir, "verify.json"), j);
    if (!rep.pass) {
      std::string names;
      for (const auto& n : rep.failed) names += n + " ";
      std::fprintf(stderr, "verify failed: %s\n", names.c_str());
    }
    return rep.pass ? kOk : kVerifyFail;
  });
}

int cmd_vortex(const ExperimentConfig& cfg, const CommonArgs& args) {
  if (cfg.functional != FunctionalKind::YMH) {
    std::fprintf(stderr, "vortex requires functional.kind = ymh\n");
    return kConfigError;
  }
  U1Group g{1};
  Lattice lat(cfg.lattice);
  const auto spec = make_functional_spec(cfg, lat);
  auto start = args.input_path.empty() ? make_initial_config(cfg, g, lat)
                                       : read_checkpoint(args.input_path, g, lat);
  std::filesystem::create_directories(args.out_dir);
  try {
    const auto traj = flow_run(g, lat, spec, std::move(start), cfg.flow);
    const auto& minimum = traj.final_config;
    const auto res = vortex_residual(g, lat, minimum, cfg.tau);
    double flux = 0.0;
    double max_phi2 = 0.0;
    for (long p = 0; p < lat.n_plaquettes(); ++p)
      flux += U1Group::log_map(plaquette_holonomy(lat, minimum.u, p))(0, 0).imag();
    flux /= 2.0 * M_PI;  // plaquette angles sum to 2 pi x (flux quanta)
    for (long x = 0; x < lat.n_sites(); ++x)
      max_phi2 = std::max(max_phi2, norm2(minimum.phi.phi[x]));

    const double residual_total = std::hypot(res.curvature_l2, res.dbar_l2);
    std::string classification = "non_vortex_minimum";
    if (residual_total <= 1e-6)
      classification = "vortex_minimum";
    else if (max_phi2 <= 1e-6 * std::max(1.0, std::abs(cfg.tau)))
      classification = "phi_zero_branch";

    json j;
    j["tau"] = cfg.tau;
    j["flux_quanta"] = flux;
    j["energy"] = traj.samples.back().energy;
    j["grad_l2"] = traj.samples.back().grad_l2;
    j["termination"] = traj.termination;
    j["residual_curvature_l2"] = res.curvature_l2;
    j["residual_dbar_l2"] = res.dbar_l2;
    j["max_phi_sq"] = max_phi2;
    j["classification"] = classification;
    write_json(join(args.out_dir, "vortex_report.json"), j);
    write_checkpoint(join(args.out_dir, "final.ckpt"), g, lat, minimum);
    return kOk;
  } catch (const LogBranchError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const StepUnderflowError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice Yang-Mills gradient flow toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "experiment config")->required();
    sub->add_option("--input", args.input_path, "input checkpoint / trajectory");
    sub->add_option("--ref", args.ref_path, "reference checkpoint");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--threads", args.threads, "worker threads (env overrides)");
  };

  auto* flow_cmd = app.add_subcommand("flow", "integrate the gradient flow");
  add_common(flow_cmd);
  auto* fix_cmd = app.add_subcommand("gauge-fix", "relative Coulomb gauge fixing");
  add_common(fix_cmd);
  fix_cmd->add_flag("--estimate-zeta", args.estimate_zeta,
                    "bisect the basin size along the input direction");
  auto* spec_cmd = app.add_subcommand("spectrum", "low pair-Laplacian spectrum");
  add_common(spec_cmd);
  spec_cmd->add_option("--count", args.count, "number of eigenvalues");
  auto* ls_cmd = app.add_subcommand("ls-estimate",
                                    "Lojasiewicz exponent and rate analysis");
  add_common(ls_cmd);
  ls_cmd->add_option("--count", args.count, "spectrum size for the rate check");
  auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
  add_common(verify_cmd);
  auto* vortex_cmd = app.add_subcommand("vortex", "vortex-equation experiment");
  add_common(vortex_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    const ExperimentConfig cfg = load_config(args.config_path);
    apply_threads(cfg, args);
    if (flow_cmd->parsed()) return cmd_flow(cfg, args);
    if (fix_cmd->parsed()) return cmd_gauge_fix(cfg, args);
    if (spec_cmd->parsed()) return cmd_spectrum(cfg, args);
    if (ls_cmd->parsed()) return cmd_ls(cfg, args);
    if (verify_cmd->parsed()) return cmd_verify(cfg, args);
    if (vortex_cmd->parsed()) return cmd_vortex(cfg, args);
    return kConfigError;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kConfigError;
  } catch (const DimensionMismatchError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected failure: %s\n", e.what());
    return kNumeric;
  }
}
