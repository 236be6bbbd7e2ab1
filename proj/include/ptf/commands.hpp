#pragma once

// The CLI commands as plain functions: they take parsed options and output
// streams and return the process exit code.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ptf/bundled_scenarios.hpp"
#include "ptf/scenario_io.hpp"
#include "ptf/simulator.hpp"
#include "ptf/svg.hpp"
#include "ptf/synthesis.hpp"

namespace ptf {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitCertificate = 2, kExitIo = 3 };

/// A bundled scenario name, or else a path to a JSON file.
inline Scenario resolve_scenario(const std::string& name_or_path) {
  for (const auto& [name, text] : bundled_scenarios())
    if (name == name_or_path) return parse_scenario(std::string(text), std::string(name));
  if (!std::filesystem::exists(name_or_path))
    throw std::ios_base::failure("no bundled scenario or file named '" + name_or_path + "'");
  return load_scenario(name_or_path);
}

namespace cmd_detail {

inline std::string matrix_text(const Matrix& m, const std::string& indent) {
  std::string s;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    s += indent + "[";
    for (std::size_t c = 0; c < m.cols(); ++c) s += fmt::format(" {:>17.10e}", m(r, c));
    s += " ]\n";
  }
  return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::ios_base::failure("cannot write " + p.string());
  out << text;
}

// Parses "k=v" into (k, v).
inline std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("override must look like key=value, got '" + kv + "'");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

}  // namespace cmd_detail

inline std::string checks_text(const SynthesisResult& r) {
  std::string s;
  for (const auto& c : r.checks) {
    s += fmt::format("  {:<58} {:>15.8e} {} {:>15.8e}  margin {:>+15.8e}  {}\n", c.label, c.value,
                     c.upper ? "<=" : ">=", c.limit, c.margin(), c.passed() ? "PASS" : "FAIL");
  }
  return s;
}

/// Stable text layout of every synthesized quantity.
inline std::string gains_report(const Scenario& s, const SynthesisResult& r) {
  using cmd_detail::matrix_text;
  std::string out = fmt::format("scenario: {}\n\n", s.name);
  out += fmt::format("P0 (CARE residual {:.3e})\n", r.care_residual_p0) + matrix_text(r.p0, "  ");
  out += fmt::format("lambda_min(H) = {:.10e}\nlambda_max(H) = {:.10e}\nlambda_max(H kron P0) = {:.10e}\n||B0|| = {:.10e}\n",
                     r.lambda_min_h, r.lambda_max_h, r.lambda_max_h_p0, r.norm_b0);
  out += fmt::format("rho = [{:.6g}, {:.6g}, {:.6g}, {:.6g}]\n", r.rho[0], r.rho[1], r.rho[2], r.rho[3]);
  out += fmt::format("declared bounds: n_bar {:.6g}  m_bar {:.6g}  d_bar {:.6g}  u_bar {:.6g}\n", r.declared.n_bar,
                     r.declared.m_bar, r.declared.d_bar, r.declared.u_bar);
  out += fmt::format("sampled bounds:  n_bar {:.6g}  m_bar {:.6g}  d_bar {:.6g}  u_bar {:.6g}\n", r.sampled.n_bar,
                     r.sampled.m_bar, r.sampled.d_bar, r.sampled.u_bar);
  for (std::size_t i = 0; i < r.followers.size(); ++i) {
    const auto& f = r.followers[i];
    out += fmt::format("\nfollower {}  (c {:g}, alpha {:g}, beta {:g}, K4 {:g})\n", i + 1, f.c, f.alpha, f.beta, f.k4);
    out += fmt::format("  P (CARE residual {:.3e})\n", f.care_residual) + matrix_text(f.p, "    ");
    out += "  K1\n" + matrix_text(f.k1, "    ");
    out += fmt::format("  X, U (residual {:.3e})\n", f.regulation_residual) + matrix_text(f.x, "    ") +
           matrix_text(f.u, "    ");
    out += "  K2\n" + matrix_text(f.k2, "    ");
    out += fmt::format("  X_h, U_h (residual {:.3e})\n", f.formation_residual) + matrix_text(f.x_h, "    ") +
           matrix_text(f.u_h, "    ");
    out += "  K3\n" + matrix_text(f.k3, "    ");
    out += fmt::format("  F (||F|| = {:.10e}, residual {:.3e})\n", f.f_norm, f.f_residual) + matrix_text(f.f, "    ");
  }
  out += "\nchecks\n" + checks_text(r);
  if (!r.warnings.empty()) {
    out += "\nwarnings\n";
    for (const auto& w : r.warnings) out += "  " + w + "\n";
  }
  return out;
}

struct ScenarioOptions {
  std::string scenario = "sec4";
  std::vector<std::string> overrides;  // key=value
  std::optional<double> dt, t1, t2, ratio_cap, t_end;
};

inline Scenario prepare_scenario(const ScenarioOptions& o) {
  Scenario s = resolve_scenario(o.scenario);
  auto set = [&](const char* key, const std::optional<double>& v) {
    if (v) apply_override(s, key, fmt::format("{:.17g}", *v));
  };
  set("dt", o.dt);
  set("T1", o.t1);
  set("T2", o.t2);
  set("ratio_cap", o.ratio_cap);
  set("t_end", o.t_end);
  for (const auto& kv : o.overrides) {
    const auto [k, v] = cmd_detail::split_override(kv);
    apply_override(s, k, v);
  }
  return s;
}

// Runs `body`, mapping library exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, const Body& body) {
  try {
    return body();
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceDetected& e) {
    err << "error: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

inline int cmd_validate(const ScenarioOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = prepare_scenario(o);
    SynthesisOptions opt;
    opt.enforce_gain_conditions = false;
    const auto r = synthesize(s, opt);
    out << "scenario: " << s.name << "\n" << checks_text(r);
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
    const bool ok = r.gain_conditions_hold() && r.certificates_hold();
    out << "validation: " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitValidation;
  });
}

inline int cmd_gains(const ScenarioOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = prepare_scenario(o);
    SynthesisOptions opt;
    opt.enforce_gain_conditions = false;
    out << gains_report(s, synthesize(s, opt));
    return kExitOk;
  });
}

struct PlotOptions {
  std::vector<double> snapshots{1.0, 2.0, 4.0, 10.0};
};

/// Writes observer_error.svg, formation_error.svg and snapshots_<t>.svg.
inline std::vector<std::filesystem::path> write_plots(const TrajectoryLog& log, const std::filesystem::path& dir,
                                                      const PlotOptions& po = {}) {
  std::vector<std::filesystem::path> written;
  if (log.records.empty()) return written;
  const std::size_t n = log.followers();
  std::vector<svg::Series> obs(n), form(n);
  for (std::size_t i = 0; i < n; ++i) {
    obs[i].name = form[i].name = fmt::format("agent {}", i + 1);
    const std::size_t stride = std::max<std::size_t>(1, log.records.size() / 4000);
    for (std::size_t k = 0; k < log.records.size(); k += stride) {
      const auto& r = log.records[k];
      obs[i].x.push_back(r.t);
      obs[i].y.push_back(norm(r.xi_err[i]));
      form[i].x.push_back(r.t);
      form[i].y.push_back(norm(r.ebar[i]));
    }
  }
  std::filesystem::create_directories(dir);
  written.push_back(dir / "observer_error.svg");
  cmd_detail::write_file(written.back(), svg::line_chart("observer error", "t [s]", "|xi_i - x0|", obs));
  written.push_back(dir / "formation_error.svg");
  cmd_detail::write_file(written.back(), svg::line_chart("formation error", "t [s]", "|ebar_i|", form));

  for (double ts : po.snapshots) {
    const auto it = std::min_element(log.records.begin(), log.records.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.t - ts) < std::abs(b.t - ts);
    });
    const auto& r = *it;
    // y_i - y0 = ebar_i + h_i, so the formation shape needs no output matrices.
    std::vector<svg::Marker> marks{{"leader", 0.0, 0.0, true}};
    for (std::size_t i = 0; i < n; ++i) {
      const Vector rel = r.ebar[i] + r.h[i];
      marks.push_back({fmt::format("{}", i + 1), rel[0], rel.rows() > 1 ? rel[1] : 0.0, false});
    }
    written.push_back(dir / fmt::format("snapshot_{:g}s.svg", ts));
    cmd_detail::write_file(written.back(),
                           svg::scatter_chart(fmt::format("outputs relative to the leader at t = {:g} s", r.t),
                                              "y_1 - y0_1", "y_2 - y0_2", marks));
  }
  return written;
}

struct SimulateOptions {
  ScenarioOptions scenario;
  std::string out_dir = "run";
  bool skip_validate = false;
  bool plot = false;
  bool full_resolution = false;
  PlotOptions plots;
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = prepare_scenario(o.scenario);
    SynthesisOptions opt;
    opt.enforce_gain_conditions = !o.skip_validate;
    const auto synth = synthesize(s, opt);
    for (const auto& w : synth.warnings) err << "warning: " << w << "\n";
    RunOptions ro;
    ro.full_resolution = o.full_resolution;
    const auto log = run(s, synth, ro);
    const auto report = certify(log, s, synth);

    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    write_csv(log, (dir / "trajectory.csv").string());
    cmd_detail::write_file(dir / "certificate.txt", report.text());
    if (o.plot) write_plots(log, dir, o.plots);
    out << report.text();
    return report.passed() ? kExitOk : kExitCertificate;
  });
}

struct CertifyOptions {
  ScenarioOptions scenario;
  std::string csv;
};

/// Re-checks a previously written trajectory against its scenario.
inline int cmd_certify(const CertifyOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = prepare_scenario(o.scenario);
    SynthesisOptions opt;
    opt.enforce_gain_conditions = false;
    const auto synth = synthesize(s, opt);
    const auto log = read_csv(o.csv);
    const auto report = certify(log, s, synth);
    out << report.text();
    return report.passed() ? kExitOk : kExitCertificate;
  });
}

struct PlotCommandOptions {
  std::string csv;
  std::string out_dir = ".";
  PlotOptions plots;
};

inline int cmd_plot(const PlotCommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto log = read_csv(o.csv);
    for (const auto& p : write_plots(log, o.out_dir, o.plots)) out << p.string() << "\n";
    return kExitOk;
  });
}

}  // namespace ptf
