#pragma once

// Fixed-step closed-loop integration, trajectory logging, and convergence
// certificates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ptf/dynamics.hpp"
#include "ptf/scenario.hpp"
#include "ptf/synthesis.hpp"

namespace ptf {

inline constexpr double kDivergenceSentinel = 1e9;

/// Binds a scenario and its synthesis result into the full vector field.
class ClosedLoop {
 public:
  ClosedLoop(const Scenario& s, const SynthesisResult& synth)
      : s_(s), synth_(synth), ts1_(s.times.observer_scale()), ts2_(s.times.controller_scale()) {}

  std::vector<Vector> inputs(const SystemState& st) const {
    std::vector<Vector> u;
    u.reserve(st.size());
    for (std::size_t i = 0; i < st.size(); ++i)
      u.push_back(controller(i, st, s_.followers[i], synth_, ts2_, s_.control));
    return u;
  }

  SystemState derivative(const SystemState& st) const {
    SystemState d;
    d.t = st.t;
    d.x0 = leader_rhs(st, s_.leader);
    const auto u = inputs(st);
    for (std::size_t i = 0; i < st.size(); ++i) {
      d.x.push_back(follower_rhs(i, st, u[i], s_.followers[i]));
      d.xi.push_back(observer_rhs(i, st, s_.topology, s_.leader, synth_, ts1_, s_.control.eps_s));
      d.h_tilde.push_back(exo_rhs(i, st, s_.exosystems[i]));
    }
    return d;
  }

  const Scenario& scenario() const { return s_; }
  const SynthesisResult& synthesis() const { return synth_; }

 private:
  const Scenario& s_;
  const SynthesisResult& synth_;
  TimeScale ts1_;
  TimeScale ts2_;
};

/// One classical RK4 step of a time-dependent field f(state) -> derivative.
template <typename State, typename Field>
State rk4_advance(const State& st, double dt, const Field& f) {
  const State k1 = f(st);
  State s2 = st.plus_scaled(0.5 * dt, k1);
  s2.t = st.t + 0.5 * dt;
  const State k2 = f(s2);
  State s3 = st.plus_scaled(0.5 * dt, k2);
  s3.t = st.t + 0.5 * dt;
  const State k3 = f(s3);
  State s4 = st.plus_scaled(dt, k3);
  s4.t = st.t + dt;
  const State k4 = f(s4);
  State out = st.plus_scaled(dt / 6.0, k1).plus_scaled(dt / 3.0, k2).plus_scaled(dt / 3.0, k3).plus_scaled(dt / 6.0, k4);
  out.t = st.t + dt;
  return out;
}

inline SystemState rk4_step(const SystemState& st, double dt, const ClosedLoop& loop) {
  if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be positive");
  SystemState next = rk4_advance(st, dt, [&](const SystemState& s) { return loop.derivative(s); });
  if (!next.all_finite() || next.max_block_norm() > kDivergenceSentinel) {
    throw DivergenceDetected(fmt::format("state diverged at t = {:.6f}", next.t), next.t);
  }
  return next;
}

struct LogRecord {
  double t = 0.0;
  Vector x0;
  std::vector<Vector> x;
  std::vector<Vector> xi;
  std::vector<Vector> xi_err;  // xi_i - x0
  std::vector<Vector> e;       // tracking error
  std::vector<Vector> ebar;    // formation error
  std::vector<Vector> u;
  std::vector<Vector> h;       // C_h h~
  double v = 0.0;              // xi~^T (H kron P0) xi~
  std::vector<double> vbar;    // 0.5 e_i^T P_i e_i
};

struct TrajectoryLog {
  std::string scenario;
  std::vector<LogRecord> records;

  std::size_t followers() const { return records.empty() ? 0 : records.front().x.size(); }
};

inline LogRecord make_record(const SystemState& st, const ClosedLoop& loop) {
  const auto& s = loop.scenario();
  const auto& synth = loop.synthesis();
  LogRecord r;
  r.t = st.t;
  r.x0 = st.x0;
  r.x = st.x;
  r.xi = st.xi;
  r.u = loop.inputs(st);
  const std::size_t n = st.size();
  for (std::size_t i = 0; i < n; ++i) {
    r.xi_err.push_back(st.xi[i] - st.x0);
    r.e.push_back(tracking_error(i, st, synth));
    r.ebar.push_back(formation_error(i, st, s.followers[i], s.leader, s.exosystems[i]));
    r.h.push_back(s.exosystems[i].c_h * st.h_tilde[i]);
    r.vbar.push_back(0.5 * dot(r.e[i], synth.followers[i].p * r.e[i]));
  }
  const Matrix& h = s.topology.h_matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (h(i, j) != 0.0) r.v += h(i, j) * dot(r.xi_err[i], synth.p0 * r.xi_err[j]);
  return r;
}

struct RunOptions {
  bool full_resolution = false;  // log every step instead of every log_stride steps
};

/// Integrates t0 -> t_end with fixed-step RK4 and logs at the configured
/// stride (always including the final step).
inline TrajectoryLog run(const Scenario& s, const SynthesisResult& synth, const RunOptions& opt = {}) {
  const ClosedLoop loop(s, synth);
  const std::size_t steps = s.times.step_count();
  const std::size_t stride = opt.full_resolution ? 1 : s.times.log_stride;
  TrajectoryLog log;
  log.scenario = s.name;
  SystemState st = initial_state(s);
  log.records.push_back(make_record(st, loop));
  for (std::size_t k = 1; k <= steps; ++k) {
    st = rk4_step(st, s.times.dt, loop);
    st.t = s.times.t0 + static_cast<double>(k) * s.times.dt;
    if (k % stride == 0 || k == steps) log.records.push_back(make_record(st, loop));
  }
  return log;
}

inline TrajectoryLog run(const Scenario& s, const RunOptions& opt = {}) {
  const auto synth = synthesize(s);
  return run(s, synth, opt);
}

// ---------------------------------------------------------------------------
// Certificates

struct CertificateTolerances {
  double observer_ratio = 1e-2;       // ||xi~(T1)|| relative to ||xi~(t0)||
  double observer_floor = 1e-6;       // absolute floor when xi~(t0) is ~0
  double formation = 1e-2;            // sup ||ebar|| after T1 + T2 + margin
  double formation_margin = 0.1;      // s
  double monitor_slack_rate = 10.0;   // allowed relative growth per second
  // Monitor increases are ignored once the monitor is inside the band the
  // matching error certificate accepts: V <= observer_ratio^2 V(t0) and
  // Vbar_i <= 0.5 lambda_max(P_i) formation^2.
  bool monitor_band = true;
};

struct CertificateItem {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct CertificateReport {
  std::string scenario;
  std::vector<CertificateItem> items;

  bool passed() const {
    return std::all_of(items.begin(), items.end(), [](const CertificateItem& c) { return c.passed; });
  }
  bool observer_passed() const { return group_passed("observer"); }
  bool formation_passed() const { return group_passed("formation"); }

  const CertificateItem* find(const std::string& name) const {
    for (const auto& c : items)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::string text() const {
    std::string out = fmt::format("certificate report: {}\n", scenario);
    for (const auto& c : items) {
      out += fmt::format("  {:<52} value={:>14.6e} limit={:>14.6e}  {}\n", c.name, c.value, c.limit,
                         c.passed ? "PASS" : "FAIL");
    }
    out += fmt::format("overall: {}\n", passed() ? "PASS" : "FAIL");
    return out;
  }

 private:
  bool group_passed(const std::string& prefix) const {
    for (const auto& c : items)
      if (c.name.rfind(prefix, 0) == 0 && !c.passed) return false;
    return true;
  }
};

namespace detail {
inline double max_norm(const std::vector<Vector>& vs) {
  double m = 0.0;
  for (const auto& v : vs) m = std::max(m, norm(v));
  return m;
}

// Largest V_{k+1} - V_k (1 + rate * (t_{k+1} - t_k)) over samples with both
// times inside (lo, hi), skipping steps that end inside the accepted band.
template <typename Get>
double largest_jump(const std::vector<LogRecord>& rs, double lo, double hi, double rate, double band,
                    const Get& get) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < rs.size(); ++k) {
    if (rs[k].t <= lo || rs[k + 1].t >= hi) continue;
    const double a = get(rs[k]), b = get(rs[k + 1]);
    if (b <= band) continue;
    worst = std::max(worst, b - a * (1.0 + rate * (rs[k + 1].t - rs[k].t)));
  }
  return std::isfinite(worst) ? worst : 0.0;
}
}  // namespace detail

inline CertificateReport certify(const TrajectoryLog& log, const Scenario& s, const SynthesisResult& synth,
                                 const CertificateTolerances& tol = {}) {
  CertificateReport rep;
  rep.scenario = s.name;
  if (log.records.empty()) {
    rep.items.push_back({"log non-empty", 0.0, 1.0, false});
    return rep;
  }
  const auto& rs = log.records;
  const double t1 = s.times.observer_deadline();
  const double t12 = s.times.formation_deadline();
  const double half_step = 0.5 * s.times.dt;

  const double initial = detail::max_norm(rs.front().xi_err);
  const double obs_limit = std::max(tol.observer_ratio * initial, tol.observer_floor);
  const LogRecord* at_t1 = nullptr;
  double after_t1 = 0.0;
  for (const auto& r : rs) {
    if (r.t <= t1 + half_step) at_t1 = &r;
    if (r.t > t1 + half_step) after_t1 = std::max(after_t1, detail::max_norm(r.xi_err));
  }
  rep.items.push_back({"observer: max_i |xi~_i| at T1", at_t1 ? detail::max_norm(at_t1->xi_err) : INFINITY,
                       obs_limit, false});
  rep.items.push_back({"observer: sup_{t>T1} max_i |xi~_i|", after_t1, obs_limit, false});

  double formation = 0.0;
  for (const auto& r : rs)
    if (r.t >= t12 + tol.formation_margin - half_step) formation = std::max(formation, detail::max_norm(r.ebar));
  rep.items.push_back({fmt::format("formation: sup_(t>=T1+T2+{:g}) max_i |ebar_i|", tol.formation_margin),
                       formation, tol.formation, false});

  const double v_band = tol.monitor_band ? tol.observer_ratio * tol.observer_ratio * rs.front().v : 0.0;
  rep.items.push_back({"monitor: largest jump of V on (t0, T1)",
                       detail::largest_jump(rs, s.times.t0, t1 - half_step, tol.monitor_slack_rate, v_band,
                                            [](const LogRecord& r) { return r.v; }),
                       0.0, false});
  const double clamp_start = s.times.controller_scale().clamp_onset();
  for (std::size_t i = 0; i < log.followers(); ++i) {
    const double band =
        tol.monitor_band ? 0.5 * lambda_max(synth.followers[i].p) * tol.formation * tol.formation : 0.0;
    rep.items.push_back({fmt::format("monitor: largest jump of Vbar_{} on (T1, T1+T2-d)", i + 1),
                         detail::largest_jump(rs, t1, clamp_start, tol.monitor_slack_rate, band,
                                              [i](const LogRecord& r) { return r.vbar[i]; }),
                         0.0, false});
  }

  for (auto& c : rep.items) c.passed = c.value <= c.limit;
  return rep;
}

}  // namespace ptf
