#pragma once

// Offline synthesis: Riccati gains, regulator equations, F_i, and the
// inequality checks the observer and controller gains must satisfy.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ptf/linalg.hpp"
#include "ptf/scenario.hpp"

namespace ptf {

struct RegulationSolution {
  Matrix x;
  Matrix u;
  double dynamics_residual = 0.0;  // ||X A - A_i X - B_i U||_F
  double output_residual = 0.0;    // ||C_i X - C_target||_F
  double residual() const { return std::max(dynamics_residual, output_residual); }
};

namespace detail {

// X a_target = A_i X + B_i U,  C_i X = c_target.
inline RegulationSolution solve_regulator_pair(const Matrix& a_i, const Matrix& b_i, const Matrix& c_i,
                                               const Matrix& a_target, const Matrix& c_target,
                                               const Tolerances& tol) {
  const std::size_t n = a_i.rows(), m = b_i.cols(), nt = a_target.rows();
  if (c_i.rows() != c_target.rows() || c_target.cols() != nt)
    throw DimensionMismatch("regulation: output dimensions disagree");
  LinearMatrixSystem sys;
  const auto x = sys.add_unknown(n, nt);
  const auto u = sys.add_unknown(m, nt);
  const auto dyn = sys.add_equation(Matrix(n, nt));
  sys.add_term(dyn, Matrix::identity(n), x, a_target);
  sys.add_term(dyn, -a_i, x, Matrix::identity(nt));
  sys.add_term(dyn, -b_i, u, Matrix::identity(nt));
  const auto out = sys.add_equation(c_target);
  sys.add_term(out, c_i, x, Matrix::identity(nt));
  auto sol = solve_sylvester_general(sys, tol);
  return {sol.unknowns[0], sol.unknowns[1], sol.equation_residuals[0], sol.equation_residuals[1]};
}

}  // namespace detail

/// Solves X A0 = A_i X + B_i U, C_i X = C0.
inline RegulationSolution solve_regulation(const LeaderModel& leader, const FollowerModel& f,
                                           const Tolerances& tol = default_tolerances()) {
  return detail::solve_regulator_pair(f.a, f.b, f.c, leader.a0, leader.c0, tol);
}

/// Solves X_h A_h = A_i X_h + B_i U_h, C_i X_h = C_h.
inline RegulationSolution solve_formation_regulation(const FollowerModel& f, const ExosystemModel& exo,
                                                     const Tolerances& tol = default_tolerances()) {
  return detail::solve_regulator_pair(f.a, f.b, f.c, exo.a_h, exo.c_h, tol);
}

/// One checked inequality: `value >= limit` (lower bound) or
/// `value <= limit` (upper bound).
struct Check {
  enum class Kind { GainCondition, Certificate };
  Kind kind;
  std::string label;
  double value;
  double limit;
  bool upper = false;

  bool passed() const { return upper ? value <= limit : value >= limit; }
  /// Distance to the limit, positive when passed.
  double margin() const { return upper ? limit - value : value - limit; }
};

struct FollowerSynthesis {
  Matrix p;
  Matrix k1;  // -B^T P
  Matrix k2;  // U - K1 X
  Matrix k3;  // U_h - K1 X_h
  double k4 = 1.0;
  Matrix x, u;
  Matrix x_h, u_h;
  Matrix f;       // B^+ X B0
  Matrix b_plus;  // right inverse of B
  double f_norm = 0.0;
  double c = 0.0, alpha = 0.0, beta = 0.0;

  double care_residual = 0.0;
  double regulation_residual = 0.0;
  double formation_residual = 0.0;
  double f_residual = 0.0;  // ||X B0 - B F||_F
  // Largest eigenvalue of (A + B K1)^T P + P (A + B K1); negative certifies
  // that A + B K1 is Hurwitz.
  double closed_loop_max_eig = 0.0;
};

struct SynthesisResult {
  Matrix p0;
  double care_residual_p0 = 0.0;
  std::vector<FollowerSynthesis> followers;
  std::array<double, 4> rho{};
  double lambda_min_h = 0.0;
  double lambda_max_h = 0.0;
  double lambda_max_h_p0 = 0.0;  // lambda_max(H kron P0)
  double norm_b0 = 0.0;
  Bounds declared;
  Bounds sampled;
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  bool gain_conditions_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) {
      return c.kind != Check::Kind::GainCondition || c.passed();
    });
  }
  bool certificates_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) {
      return c.kind != Check::Kind::Certificate || c.passed();
    });
  }
};

/// Sup-norm samples of u0, d_i, N_i and M_i over [t0, t_end].
inline Bounds derive_signal_bounds(const Scenario& s) {
  const double span = s.times.t_end - s.times.t0;
  const double step = std::min(1e-2, span / 1000.0);
  Bounds b;
  for (double t : sample_grid(s.times.t0, s.times.t_end, step)) {
    b.u_bar = std::max(b.u_bar, norm(s.leader.u0(t)));
    for (const auto& f : s.followers) {
      b.d_bar = std::max(b.d_bar, norm(f.disturbance(t)));
      if (!f.uncertainty.n_of_t.is_zero()) b.n_bar = std::max(b.n_bar, norm2(f.uncertainty.n_of_t(t)));
      if (!f.uncertainty.m_of_t.is_zero()) b.m_bar = std::max(b.m_bar, f.uncertainty.m_magnitude(t));
    }
  }
  return b;
}

/// Observer and controller gain inequalities, evaluated against the
/// declared bounds. The alpha bound uses ||B0|| u_bar.
inline std::vector<Check> gain_conditions(const Scenario& s, double lambda_min_h, double norm_b0) {
  std::vector<Check> out;
  const auto& g = s.gains;
  const auto& b = s.bounds;
  const auto gc = Check::Kind::GainCondition;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    out.push_back({gc, "c_" + id + " >= 1/lambda_min(H)", g.c[i], 1.0 / lambda_min_h});
    out.push_back({gc, "alpha_" + id + " >= ||B0|| u_bar", g.alpha[i], norm_b0 * b.u_bar});
  }
  const double den = 1.0 - b.m_bar;
  out.push_back({gc, "rho_1 >= (1 + m_bar) d_bar / (1 - m_bar)", g.rho[0], (1.0 + b.m_bar) * b.d_bar / den});
  out.push_back({gc, "rho_2 >= n_bar / (1 - m_bar)", g.rho[1], b.n_bar / den});
  out.push_back({gc, "rho_3 >= u_bar / (1 - m_bar)", g.rho[2], b.u_bar / den});
  out.push_back({gc, "rho_4 >= m_bar / (1 - m_bar)", g.rho[3], b.m_bar / den});
  return out;
}

struct SynthesisOptions {
  bool enforce_gain_conditions = true;
};

namespace detail {
template <typename E, typename... Extra>
[[noreturn]] void rethrow_for_follower(const E& e, std::size_t i, Extra... extra) {
  throw E("follower " + std::to_string(i + 1) + ": " + e.what(), extra...);
}
}  // namespace detail

/// Computes every gain and certificate for a scenario. With
/// `enforce_gain_conditions` a failing inequality raises
/// GainConditionViolated listing each failing bound; otherwise the result is
/// returned with the failures recorded in `checks`.
inline SynthesisResult synthesize(const Scenario& s, const SynthesisOptions& opt = {},
                                  const Tolerances& tol = default_tolerances()) {
  validate_structure(s);
  SynthesisResult r;
  const auto cert = Check::Kind::Certificate;

  r.p0 = solve_care(s.leader.a0, s.leader.b0, tol);
  r.care_residual_p0 = care_residual(s.leader.a0, s.leader.b0, r.p0).frobenius_norm();
  r.checks.push_back({cert, "CARE residual P0", r.care_residual_p0, tol.care_residual, true});
  r.lambda_min_h = s.topology.lambda_min_h();
  r.lambda_max_h = s.topology.lambda_max_h();
  r.lambda_max_h_p0 = r.lambda_max_h * lambda_max(r.p0);
  r.norm_b0 = norm2(s.leader.b0, tol);
  r.rho = s.gains.rho;
  r.declared = s.bounds;
  r.sampled = derive_signal_bounds(s);

  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& f = s.followers[i];
    const std::string id = std::to_string(i + 1);
    FollowerSynthesis fs;
    try {
      fs.b_plus = pinv_right(f.b, tol);
      fs.p = solve_care(f.a, f.b, tol);
      const auto reg = solve_regulation(s.leader, f, tol);
      const auto form = solve_formation_regulation(f, s.exosystems[i], tol);
      fs.x = reg.x;
      fs.u = reg.u;
      fs.regulation_residual = reg.residual();
      fs.x_h = form.x;
      fs.u_h = form.u;
      fs.formation_residual = form.residual();
    } catch (const NoSolution& e) {
      detail::rethrow_for_follower(e, i, e.residual());
    } catch (const CareDiverged& e) {
      detail::rethrow_for_follower(e, i);
    } catch (const RankDeficient& e) {
      detail::rethrow_for_follower(e, i);
    }
    fs.k1 = -(f.b.transpose() * fs.p);
    fs.k2 = fs.u - fs.k1 * fs.x;
    fs.k3 = fs.u_h - fs.k1 * fs.x_h;
    fs.k4 = s.gains.k4[i];
    fs.f = fs.b_plus * fs.x * s.leader.b0;
    fs.f_norm = norm2(fs.f, tol);
    fs.c = s.gains.c[i];
    fs.alpha = s.gains.alpha[i];
    fs.beta = s.gains.beta[i];

    fs.care_residual = care_residual(f.a, f.b, fs.p).frobenius_norm();
    fs.f_residual = (fs.x * s.leader.b0 - f.b * fs.f).frobenius_norm();
    const Matrix acl = f.a + f.b * fs.k1;
    fs.closed_loop_max_eig = lambda_max(symmetrize(acl.transpose() * fs.p + fs.p * acl));

    r.checks.push_back({cert, "CARE residual P_" + id, fs.care_residual, tol.care_residual, true});
    r.checks.push_back({cert, "regulation residual (X_" + id + ", U_" + id + ")", fs.regulation_residual,
                        tol.regulation_accept, true});
    r.checks.push_back({cert, "formation regulation residual (X_h" + id + ", U_h" + id + ")",
                        fs.formation_residual, tol.regulation_accept, true});
    r.checks.push_back({cert, "||X_" + id + " B0 - B_" + id + " F_" + id + "||", fs.f_residual,
                        tol.regulation_accept, true});
    r.checks.push_back({cert, "lambda_max(closed-loop Lyapunov form) follower " + id,
                        fs.closed_loop_max_eig, 0.0, true});
    r.followers.push_back(std::move(fs));
  }

  const auto gains = gain_conditions(s, r.lambda_min_h, r.norm_b0);
  r.checks.insert(r.checks.end(), gains.begin(), gains.end());

  auto warn_bound = [&](const char* name, double declared, double sampled) {
    if (sampled > declared * (1.0 + 1e-12)) {
      r.warnings.push_back(std::string("declared ") + name + " = " + std::to_string(declared) +
                           " is below the sampled value " + std::to_string(sampled));
    }
  };
  warn_bound("n_bar", r.declared.n_bar, r.sampled.n_bar);
  warn_bound("m_bar", r.declared.m_bar, r.sampled.m_bar);
  warn_bound("d_bar", r.declared.d_bar, r.sampled.d_bar);
  warn_bound("u_bar", r.declared.u_bar, r.sampled.u_bar);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.followers[i].uncertainty.m_diagonal) {
      r.warnings.push_back("follower " + std::to_string(i + 1) +
                           ": B^+ dB is not diagonal; kept in full product form, bounded in spectral norm");
    }

  if (opt.enforce_gain_conditions && !r.gain_conditions_hold()) {
    std::string msg = "gain condition violated:";
    for (const auto& c : r.checks)
      if (c.kind == Check::Kind::GainCondition && !c.passed()) {
        msg += " [" + c.label + ": have " + std::to_string(c.value) + ", need " + std::to_string(c.limit) + "]";
      }
    throw GainConditionViolated(msg);
  }
  return r;
}

}  // namespace ptf
