#pragma once

#include <random>

#include "ptf/commands.hpp"

namespace ptf::testing {

inline Matrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(r, c);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = dist(rng);
  return m;
}

inline Matrix random_symmetric(std::mt19937& rng, std::size_t n) { return symmetrize(random_matrix(rng, n, n)); }

// Diagonally dominant, hence well conditioned.
inline Matrix random_well_conditioned(std::mt19937& rng, std::size_t n) {
  Matrix a = random_matrix(rng, n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n) + 1.0;
  return a;
}

inline const Scenario& sec4() {
  static const Scenario s = resolve_scenario("sec4");
  return s;
}

inline const SynthesisResult& sec4_synthesis() {
  static const SynthesisResult r = [] {
    SynthesisOptions opt;
    opt.enforce_gain_conditions = false;
    return synthesize(sec4(), opt);
  }();
  return r;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

}  // namespace ptf::testing

namespace ptf::testing {

// One scalar follower identical to a scalar leader x0' = -x0 + u0.
inline Scenario scalar_scenario(double u_amplitude = 1.0, double rho3 = 1.0) {
  return parse_scenario(fmt::format(R"({{
    "name": "scalar",
    "leader": {{"A": [[-1]], "B": [[1]], "C": [[1]], "input": [{{"kind": "sin", "amplitude": {}, "frequency": 1}}]}},
    "followers": [{{"A": [[-1]], "B": [[1]], "C": [[1]]}}],
    "exosystems": [{{"A": [[0]], "C": [[0]], "h0": [0]}}],
    "topology": {{"edges": [], "pinned": [1]}},
    "times": {{"T1": 0.5, "T2": 1, "t_end": 2, "dt": 0.001}},
    "gains": {{"c": 1, "alpha": 1, "beta": 0.5, "rho": [0.01, 0.01, {}, 0.01]}},
    "bounds": {{"n_bar": 0, "m_bar": 0, "d_bar": 0, "u_bar": {}}},
    "initial": {{"x0": [1], "x": [[0]], "xi": [[0]]}}
  }})",
                                    u_amplitude, rho3, u_amplitude));
}

}  // namespace ptf::testing
