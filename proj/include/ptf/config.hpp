#pragma once

namespace ptf {

/// Every numerical threshold used by the solvers and validators. Tests may
/// pass a tightened copy; library code takes `const Tolerances&` defaulted
/// to `default_tolerances()`.
struct Tolerances {
  // LU pivot floor, relative to max |a_ij|.
  double singular_pivot = 1e-13;
  // Rank decision in pivoted QR and in b*b^T, relative to the largest value.
  double rank = 1e-12;

  // Regulation / Sylvester-type systems.
  double regulation_reject = 1e-6;
  double regulation_accept = 1e-9;

  // Riccati.
  double care_residual = 1e-8;
  int care_max_iterations = 100;
  double symmetry = 1e-10;
  double positive_floor = 1e-10;

  // Jacobi eigensolver.
  int jacobi_max_sweeps = 100;

  // Power iteration for the spectral norm.
  double norm2_relative = 1e-10;
  int norm2_max_iterations = 20000;

  // Uncertainty factorisation checks.
  double factorization = 1e-6;
  double diagonal = 1e-6;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace ptf
