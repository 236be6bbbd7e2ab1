#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptf/commands.hpp"

namespace {

void add_scenario_flags(CLI::App* cmd, ptf::ScenarioOptions& o) {
  cmd->add_option("-s,--scenario", o.scenario, "bundled scenario name (sec4, sec4_certified, trivial) or JSON path")
      ->capture_default_str();
  cmd->add_option("--override", o.overrides,
                  "key=value; keys: dt T1 T2 t0 t_end v ratio_cap log_stride eps_s eps_c c_i alpha_i beta_i k4_i "
                  "rho1..rho4 n_bar m_bar d_bar u_bar robust_term compensation_term");
  cmd->add_option("--dt", o.dt, "integration step [s]");
  cmd->add_option("--T1", o.t1, "observer deadline [s]");
  cmd->add_option("--T2", o.t2, "formation window length [s]");
  cmd->add_option("--ratio-cap", o.ratio_cap, "clamp on the time-scaling ratio [1/s]");
  cmd->add_option("--t-end", o.t_end, "end of the simulation [s]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-time formation tracking: synthesis, simulation and certificates"};
  app.require_subcommand(1);

  ptf::ScenarioOptions validate_opts;
  auto* validate = app.add_subcommand("validate", "check assumptions and gain inequalities");
  add_scenario_flags(validate, validate_opts);

  ptf::ScenarioOptions gains_opts;
  auto* gains = app.add_subcommand("gains", "print every synthesized matrix, residual and margin");
  add_scenario_flags(gains, gains_opts);

  ptf::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "synthesize, integrate and certify");
  add_scenario_flags(simulate, sim.scenario);
  simulate->add_option("-o,--out", sim.out_dir, "output directory")->capture_default_str();
  simulate->add_flag("--skip-validate", sim.skip_validate, "run even if a gain inequality fails");
  simulate->add_flag("--plot", sim.plot, "also write SVG charts");
  simulate->add_option("--snapshots", sim.plots.snapshots, "snapshot times for the output-plane charts")
      ->delimiter(',');
  simulate->add_flag("--full-resolution", sim.full_resolution, "log every integration step");

  ptf::CertifyOptions cert;
  auto* certify = app.add_subcommand("certify", "re-check a trajectory CSV against its scenario");
  add_scenario_flags(certify, cert.scenario);
  certify->add_option("--csv", cert.csv, "trajectory CSV written by simulate")->required();

  ptf::PlotCommandOptions plot;
  auto* plotcmd = app.add_subcommand("plot", "draw SVG charts from a trajectory CSV");
  plotcmd->add_option("--csv", plot.csv, "trajectory CSV")->required();
  plotcmd->add_option("-o,--out", plot.out_dir, "output directory")->capture_default_str();
  plotcmd->add_option("--snapshots", plot.plots.snapshots, "snapshot times")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ptf::kExitValidation;
  }

  if (*validate) return ptf::cmd_validate(validate_opts, std::cout, std::cerr);
  if (*gains) return ptf::cmd_gains(gains_opts, std::cout, std::cerr);
  if (*simulate) return ptf::cmd_simulate(sim, std::cout, std::cerr);
  if (*certify) return ptf::cmd_certify(cert, std::cout, std::cerr);
  if (*plotcmd) return ptf::cmd_plot(plot, std::cout, std::cerr);
  return ptf::kExitValidation;
}
