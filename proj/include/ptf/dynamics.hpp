#pragma once

// Right-hand sides of every moving part: leader, exosystems, distributed
// observer, uncertain followers, and the three-term formation controller.
// All functions are pure in (t, state).

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ptf/graph.hpp"
#include "ptf/models.hpp"
#include "ptf/scenario.hpp"
#include "ptf/synthesis.hpp"
#include "ptf/timescale.hpp"

namespace ptf {

struct SystemState {
  double t = 0.0;
  Vector x0;
  std::vector<Vector> x;
  std::vector<Vector> xi;
  std::vector<Vector> h_tilde;

  std::size_t size() const { return x.size(); }

  /// Returns *this + s * d over every block (t is left unchanged).
  SystemState plus_scaled(double s, const SystemState& d) const {
    SystemState out = *this;
    out.x0.add_scaled(s, d.x0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.x[i].add_scaled(s, d.x[i]);
      out.xi[i].add_scaled(s, d.xi[i]);
      out.h_tilde[i].add_scaled(s, d.h_tilde[i]);
    }
    return out;
  }

  double max_block_norm() const {
    double m = norm(x0);
    for (std::size_t i = 0; i < x.size(); ++i)
      m = std::max({m, norm(x[i]), norm(xi[i]), norm(h_tilde[i])});
    return m;
  }

  bool all_finite() const {
    if (!x0.all_finite()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!x[i].all_finite() || !xi[i].all_finite() || !h_tilde[i].all_finite()) return false;
    return true;
  }
};

inline SystemState initial_state(const Scenario& s) {
  SystemState st;
  st.t = s.times.t0;
  st.x0 = s.initial.x0;
  st.x = s.initial.x;
  st.xi = s.initial.xi;
  for (const auto& exo : s.exosystems) st.h_tilde.push_back(exo.h0);
  return st;
}

/// Neighbourhood disagreement sum_j a_ij (xi_i - xi_j) + b_i (xi_i - x0).
/// Reads x0 only when follower i is pinned, and xi_j only for neighbours.
inline Vector eta(std::size_t i, const SystemState& state, const Topology& topo) {
  Vector out(state.xi[i].rows(), 1);
  for (std::size_t j : topo.neighbors(i)) {
    out.add_scaled(topo.weight(i, j), state.xi[i]);
    out.add_scaled(-topo.weight(i, j), state.xi[j]);
  }
  if (topo.pinned(i)) {
    out += state.xi[i];
    out -= state.x0;
  }
  return out;
}

/// v / max(||v||, eps): the unit vector away from the origin, linear inside
/// the eps-ball, zero at zero.
inline Vector smooth_sgn(const Vector& v, double eps) {
  return v * (1.0 / std::max(norm(v), eps));
}

/// d xi_i / dt.
inline Vector observer_rhs(std::size_t i, const SystemState& state, const Topology& topo,
                           const LeaderModel& leader, const SynthesisResult& synth, const TimeScale& ts1,
                           double eps_s) {
  const auto& fs = synth.followers[i];
  const Vector e = eta(i, state, topo);
  const Vector p0e = synth.p0 * e;
  Vector out = leader.a0 * state.xi[i];
  out.add_scaled(-0.5 * fs.c, leader.b0 * (leader.b0.transpose() * p0e));
  out.add_scaled(-fs.beta * mu_ratio(ts1, state.t), e);
  out.add_scaled(-fs.alpha, smooth_sgn(p0e, eps_s));
  return out;
}

/// e_i = x_i - X_i xi_i - X_hi h~_i.
inline Vector tracking_error(std::size_t i, const SystemState& state, const SynthesisResult& synth) {
  const auto& fs = synth.followers[i];
  return state.x[i] - fs.x * state.xi[i] - fs.x_h * state.h_tilde[i];
}

/// Formation control input. Zero up to and including the observer deadline
/// (ts2.start); afterwards the nominal term plus the robust and
/// compensation terms, both suppressed when ||B^T P e|| < eps_c.
inline Vector controller(std::size_t i, const SystemState& state, const FollowerModel& follower,
                         const SynthesisResult& synth, const TimeScale& ts2, const ControlSettings& control) {
  const auto& fs = synth.followers[i];
  if (state.t <= ts2.start) return Vector(follower.input_dim(), 1);

  const Vector e = tracking_error(i, state, synth);
  const double ratio = mu_ratio(ts2, state.t);
  const Vector k1x = fs.k1 * state.x[i];
  const Vector k2xi = fs.k2 * state.xi[i];
  const Vector k3h = fs.k3 * state.h_tilde[i];
  const Vector scaled_e = (ratio * fs.k4) * (fs.b_plus * e);

  Vector u = k1x + k2xi + k3h - scaled_e;

  const Vector s = follower.b.transpose() * (fs.p * e);
  const double ns = norm(s);
  if (ns < control.eps_c) return u;
  const Vector dir = s * (1.0 / ns);

  if (control.robust_term) {
    const auto& rho = synth.rho;
    u.add_scaled(-(rho[0] + rho[1] * norm(state.x[i]) + rho[2] * fs.f_norm), dir);
  }
  if (control.compensation_term) {
    const double mag = norm(k1x) + norm(k2xi) + norm(k3h) + norm(scaled_e);
    u.add_scaled(-synth.rho[3] * mag, dir);
  }
  return u;
}

/// (A + B N(t)) x + (B + B M(t)) (u + d(t)).
inline Vector follower_rhs(std::size_t i, const SystemState& state, const Vector& u,
                           const FollowerModel& follower) {
  const double t = state.t;
  const Vector& x = state.x[i];
  const Vector ud = u + follower.disturbance(t);
  Vector out = follower.a * x + follower.b * ud;
  const auto& unc = follower.uncertainty;
  if (!unc.n_of_t.is_zero()) out += follower.b * (unc.n_of_t(t) * x);
  if (!unc.m_of_t.is_zero()) out += follower.b * (unc.m_of_t(t) * ud);
  return out;
}

inline Vector leader_rhs(const SystemState& state, const LeaderModel& leader) {
  return leader.a0 * state.x0 + leader.b0 * leader.u0(state.t);
}

inline Vector exo_rhs(std::size_t i, const SystemState& state, const ExosystemModel& exo) {
  return exo.a_h * state.h_tilde[i];
}

/// y_i - y0 - h_i.
inline Vector formation_error(std::size_t i, const SystemState& state, const FollowerModel& follower,
                              const LeaderModel& leader, const ExosystemModel& exo) {
  return follower.c * state.x[i] - leader.c0 * state.x0 - exo.c_h * state.h_tilde[i];
}

}  // namespace ptf
