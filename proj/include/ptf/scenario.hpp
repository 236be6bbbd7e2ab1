#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ptf/graph.hpp"
#include "ptf/models.hpp"
#include "ptf/timescale.hpp"

namespace ptf {

struct TimeSettings {
  double t0 = 0.0;
  double t1 = 0.5;  // observer deadline, relative to t0
  double t2 = 4.0;  // controller window length, starting at t0 + t1
  double v = 3.0;
  double t_end = 10.0;
  double dt = 1e-4;
  double ratio_cap = 1e3;
  std::size_t log_stride = 10;

  double observer_deadline() const { return t0 + t1; }
  double formation_deadline() const { return t0 + t1 + t2; }
  TimeScale observer_scale() const { return {t0, t1, v, ratio_cap}; }
  TimeScale controller_scale() const { return {t0 + t1, t2, v, ratio_cap}; }
  std::size_t step_count() const { return static_cast<std::size_t>(std::llround((t_end - t0) / dt)); }
};

struct ControlSettings {
  double eps_s = 1e-6;  // smooth_sgn boundary layer
  double eps_c = 1e-9;  // zero guard on ||B^T P e||
  bool robust_term = true;        // u_{i,2}
  bool compensation_term = true;  // u_{i,3}
};

struct GainSettings {
  std::vector<double> c;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> k4;
  std::array<double, 4> rho{};
};

/// Known constants bounding ||N_i(t)||, the M_i magnitude, ||d_i|| and ||u0||.
struct Bounds {
  double n_bar = 0.0;
  double m_bar = 0.0;
  double d_bar = 0.0;
  double u_bar = 0.0;
};

struct InitialConditions {
  Vector x0;
  std::vector<Vector> x;
  std::vector<Vector> xi;
};

struct Scenario {
  std::string name;
  LeaderModel leader;
  std::vector<FollowerModel> followers;
  std::vector<ExosystemModel> exosystems;
  Topology topology;
  TimeSettings times;
  ControlSettings control;
  GainSettings gains;
  Bounds bounds;
  InitialConditions initial;

  std::size_t size() const { return followers.size(); }
};

/// Structural checks that do not need any solver: dimensions, time grid,
/// gain signs. Assumptions 3-5 are checked during synthesis.
inline void validate_structure(const Scenario& s) {
  const std::size_t n = s.followers.size();
  if (n == 0) throw ValidationError("scenario has no followers");
  s.leader.validate();
  if (s.exosystems.size() != n) throw ValidationError("one exosystem per follower is required");
  if (s.topology.size() != n) throw ValidationError("topology size must equal the number of followers");
  const std::size_t q = s.leader.output_dim();
  for (std::size_t i = 0; i < n; ++i) {
    s.followers[i].validate(i);
    s.exosystems[i].validate(i);
    if (s.followers[i].output_dim() != q)
      throw ValidationError("follower " + std::to_string(i + 1) + ": output dimension differs from the leader");
    if (s.exosystems[i].c_h.rows() != q)
      throw ValidationError("exosystem " + std::to_string(i + 1) + ": output dimension differs from the leader");
  }

  const auto& t = s.times;
  if (!(t.t1 > 0.0) || !(t.t2 > 0.0)) throw ValidationError("T1 and T2 must be positive");
  if (!(t.t2 > t.t1)) throw ValidationError("T2 must exceed T1");
  if (!(t.dt > 0.0)) throw ValidationError("dt must be positive");
  if (t.dt > t.t1 / 100.0 * (1.0 + 1e-12)) throw ValidationError("dt must not exceed T1 / 100");
  if (!(t.formation_deadline() <= t.t_end)) throw ValidationError("t_end must be at least t0 + T1 + T2");
  const double steps_to_switch = t.t1 / t.dt;
  if (std::abs(steps_to_switch - std::round(steps_to_switch)) > 1e-6)
    throw ValidationError("T1 must be an integer multiple of dt");
  if (t.log_stride == 0) throw ValidationError("log_stride must be positive");
  t.observer_scale().validate();
  t.controller_scale().validate();

  if (!(s.control.eps_s > 0.0) || !(s.control.eps_c > 0.0))
    throw ValidationError("eps_s and eps_c must be positive");

  const auto& g = s.gains;
  if (g.c.size() != n || g.alpha.size() != n || g.beta.size() != n || g.k4.size() != n)
    throw ValidationError("per-follower gains must have one entry per follower");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(g.c[i] > 0.0) || !(g.alpha[i] > 0.0) || !(g.beta[i] > 0.0) || !(g.k4[i] > 0.0))
      throw ValidationError("gains c, alpha, beta, K4 must be positive");
  }
  for (double r : g.rho)
    if (!(r > 0.0)) throw ValidationError("rho_1..rho_4 must be positive");

  const auto& b = s.bounds;
  if (b.n_bar < 0.0 || b.d_bar < 0.0 || b.u_bar < 0.0) throw ValidationError("bounds must be nonnegative");
  if (!(b.m_bar >= 0.0 && b.m_bar < 1.0)) throw ValidationError("m_bar must lie in [0, 1)");

  const auto& init = s.initial;
  if (init.x0.rows() != s.leader.state_dim()) throw ValidationError("initial x0 dimension");
  if (init.x.size() != n || init.xi.size() != n) throw ValidationError("initial x and xi need one entry per follower");
  for (std::size_t i = 0; i < n; ++i) {
    if (init.x[i].rows() != s.followers[i].state_dim())
      throw ValidationError("initial x_" + std::to_string(i + 1) + " dimension");
    if (init.xi[i].rows() != s.leader.state_dim())
      throw ValidationError("initial xi_" + std::to_string(i + 1) + " dimension");
  }
}

}  // namespace ptf
