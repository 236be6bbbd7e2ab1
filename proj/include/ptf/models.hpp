#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ptf/linalg.hpp"
#include "ptf/signal.hpp"

namespace ptf {

/// x0' = A0 x0 + B0 u0(t), y0 = C0 x0. u0 is unknown to the followers; only
/// the simulator evaluates it.
struct LeaderModel {
  Matrix a0;
  Matrix b0;
  Matrix c0;
  Signal u0;

  std::size_t state_dim() const { return a0.rows(); }
  std::size_t input_dim() const { return b0.cols(); }
  std::size_t output_dim() const { return c0.rows(); }

  void validate() const {
    if (!a0.is_square()) throw ValidationError("leader: A0 must be square, got " + a0.shape());
    if (b0.rows() != a0.rows()) throw ValidationError("leader: B0 rows must match A0");
    if (c0.cols() != a0.rows()) throw ValidationError("leader: C0 columns must match A0");
    if (u0.rows() != b0.cols() || u0.cols() != 1) throw ValidationError("leader: input signal dimension");
  }
};

/// Matched uncertainty dA = B N(t), dB = B M(t).
///
/// `m_diagonal` records whether M(t) was diagonal on the sampled grid. A
/// non-diagonal M is kept as the full product B M(t) (which reproduces the
/// raw dB exactly); its bound is then taken in the spectral norm.
struct UncertaintyModel {
  Signal n_of_t;  // m x n
  Signal m_of_t;  // m x m
  bool m_diagonal = true;

  static UncertaintyModel none(std::size_t n, std::size_t m) {
    return {Signal::zero(m, n), Signal::zero(m, m), true};
  }

  /// Factors raw tables through a right inverse of b and checks, on the
  /// sample grid, that b * N reproduces dA and b * M reproduces dB.
  static UncertaintyModel from_raw(const Matrix& b, const Matrix& b_plus, const Signal& delta_a,
                                   const Signal& delta_b, const std::vector<double>& grid,
                                   const Tolerances& tol = default_tolerances()) {
    if (delta_a.rows() != b.rows() || delta_a.cols() != b.rows())
      throw ValidationError("uncertainty: delta_A must be n x n");
    if (delta_b.rows() != b.rows() || delta_b.cols() != b.cols())
      throw ValidationError("uncertainty: delta_B must be n x m");
    UncertaintyModel u{delta_a.left_multiply(b_plus), delta_b.left_multiply(b_plus), true};
    for (double t : grid) {
      const Matrix da = delta_a(t), db = delta_b(t);
      const Matrix nm = u.n_of_t(t), mm = u.m_of_t(t);
      if ((da - b * nm).max_abs() > tol.factorization || (db - b * mm).max_abs() > tol.factorization) {
        throw UnmatchedUncertainty("uncertainty is not in the range of B at t = " + std::to_string(t));
      }
      for (std::size_t r = 0; r < mm.rows(); ++r)
        for (std::size_t c = 0; c < mm.cols(); ++c)
          if (r != c && std::abs(mm(r, c)) > tol.diagonal) u.m_diagonal = false;
    }
    return u;
  }

  /// The magnitude the M-bound constrains: max |diagonal| when diagonal,
  /// otherwise the spectral norm.
  double m_magnitude(double t) const {
    const Matrix mm = m_of_t(t);
    if (m_diagonal) {
      double w = 0.0;
      for (std::size_t k = 0; k < mm.rows(); ++k) w = std::max(w, std::abs(mm(k, k)));
      return w;
    }
    return norm2(mm);
  }
};

/// x' = (A + dA) x + (B + dB)(u + d), y = C x.
struct FollowerModel {
  Matrix a;
  Matrix b;
  Matrix c;
  UncertaintyModel uncertainty;
  Signal disturbance;

  std::size_t state_dim() const { return a.rows(); }
  std::size_t input_dim() const { return b.cols(); }
  std::size_t output_dim() const { return c.rows(); }

  void validate(std::size_t index) const {
    const std::string who = "follower " + std::to_string(index + 1) + ": ";
    if (!a.is_square()) throw ValidationError(who + "A must be square");
    if (b.rows() != a.rows()) throw ValidationError(who + "B rows must match A");
    if (c.cols() != a.rows()) throw ValidationError(who + "C columns must match A");
    if (disturbance.rows() != b.cols() || disturbance.cols() != 1)
      throw ValidationError(who + "disturbance dimension must equal input dimension");
    if (uncertainty.n_of_t.rows() != b.cols() || uncertainty.n_of_t.cols() != a.rows())
      throw ValidationError(who + "N(t) must be m x n");
    if (uncertainty.m_of_t.rows() != b.cols() || uncertainty.m_of_t.cols() != b.cols())
      throw ValidationError(who + "M(t) must be m x m");
  }
};

/// Local formation generator h~' = A_h h~, h = C_h h~.
struct ExosystemModel {
  Matrix a_h;
  Matrix c_h;
  Vector h0;

  void validate(std::size_t index) const {
    const std::string who = "exosystem " + std::to_string(index + 1) + ": ";
    if (!a_h.is_square()) throw ValidationError(who + "A_h must be square");
    if (c_h.cols() != a_h.rows()) throw ValidationError(who + "C_h columns must match A_h");
    if (h0.rows() != a_h.rows() || h0.cols() != 1) throw ValidationError(who + "h0 dimension");
  }
};

}  // namespace ptf
