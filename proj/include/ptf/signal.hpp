#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ptf/linalg.hpp"

namespace ptf {

/// One elementary time function.
struct SignalTerm {
  enum class Kind { Zero, Const, Sin, Cos, ExpDecay, Table };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad
  double rate = 0.0;       // 1/s, ExpDecay only
  std::vector<std::pair<double, double>> table;  // (t, value), ascending t

  static SignalTerm zero() { return {}; }
  static SignalTerm constant(double a) { return make(Kind::Const, a, 0.0, 0.0, 0.0); }
  static SignalTerm sine(double a, double w, double phi = 0.0) { return make(Kind::Sin, a, w, phi, 0.0); }
  static SignalTerm cosine(double a, double w, double phi = 0.0) { return make(Kind::Cos, a, w, phi, 0.0); }
  static SignalTerm exp_decay(double a, double r) { return make(Kind::ExpDecay, a, 0.0, 0.0, r); }
  static SignalTerm from_table(std::vector<std::pair<double, double>> pts) {
    if (pts.empty()) throw ValidationError("signal table must have at least one point");
    for (std::size_t k = 1; k < pts.size(); ++k)
      if (!(pts[k].first > pts[k - 1].first)) throw ValidationError("signal table times must increase");
    SignalTerm s;
    s.kind = Kind::Table;
    s.amplitude = 1.0;
    s.table = std::move(pts);
    return s;
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::Const:
        return amplitude;
      case Kind::Sin:
        return amplitude * std::sin(frequency * t + phase);
      case Kind::Cos:
        return amplitude * std::cos(frequency * t + phase);
      case Kind::ExpDecay:
        return amplitude * std::exp(-rate * t);
      case Kind::Table:
        return amplitude * interpolate(t);
    }
    return 0.0;
  }

 private:
  static SignalTerm make(Kind k, double a, double w, double phi, double r) {
    SignalTerm s;
    s.kind = k;
    s.amplitude = a;
    s.frequency = w;
    s.phase = phi;
    s.rate = r;
    return s;
  }

  // Linear interpolation, held constant beyond the first/last sample.
  double interpolate(double t) const {
    if (t <= table.front().first) return table.front().second;
    if (t >= table.back().first) return table.back().second;
    const auto hi = std::upper_bound(table.begin(), table.end(), t,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto lo = hi - 1;
    const double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  }
};

/// Sum of terms.
struct ScalarSignal {
  std::vector<SignalTerm> terms;

  double operator()(double t) const {
    double s = 0.0;
    for (const auto& term : terms) s += term(t);
    return s;
  }

  bool is_zero() const {
    return std::all_of(terms.begin(), terms.end(), [](const SignalTerm& s) {
      return s.kind == SignalTerm::Kind::Zero || (s.kind != SignalTerm::Kind::Table && s.amplitude == 0.0);
    });
  }

  ScalarSignal scaled(double k) const {
    ScalarSignal out = *this;
    for (auto& term : out.terms) term.amplitude *= k;
    return out;
  }
};

/// Deterministic time -> matrix (or vector, with one column) mapping built
/// entrywise from ScalarSignals. Closed under left multiplication by a
/// constant matrix, which is how matched-uncertainty factors are formed.
class Signal {
 public:
  Signal() = default;
  Signal(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}
  Signal(std::size_t rows, std::size_t cols, std::vector<ScalarSignal> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) throw DimensionMismatch("Signal: entry count mismatch");
  }

  static Signal zero(std::size_t rows, std::size_t cols = 1) { return Signal(rows, cols); }

  static Signal constant(const Matrix& m) {
    Signal s(m.rows(), m.cols());
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k] != 0.0) s.entries_[k].terms.push_back(SignalTerm::constant(m[k]));
    return s;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ScalarSignal& at(std::size_t r, std::size_t c) { return entries_.at(r * cols_ + c); }
  const ScalarSignal& at(std::size_t r, std::size_t c) const { return entries_.at(r * cols_ + c); }

  Matrix operator()(double t) const {
    Matrix m(rows_, cols_);
    for (std::size_t k = 0; k < entries_.size(); ++k) m[k] = entries_[k](t);
    return m;
  }

  bool is_zero() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const ScalarSignal& s) { return s.is_zero(); });
  }

  /// The signal t -> left * S(t).
  Signal left_multiply(const Matrix& left) const {
    if (left.cols() != rows_) throw DimensionMismatch("Signal::left_multiply: " + left.shape());
    Signal out(left.rows(), cols_);
    for (std::size_t i = 0; i < left.rows(); ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        auto& dst = out.at(i, j).terms;
        for (std::size_t k = 0; k < rows_; ++k) {
          const double w = left(i, k);
          if (w == 0.0) continue;
          for (const auto& term : at(k, j).scaled(w).terms) dst.push_back(term);
        }
      }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ScalarSignal> entries_;
};

/// Evenly spaced sample times covering [t0, t1] inclusive.
inline std::vector<double> sample_grid(double t0, double t1, double step) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / step - 1e-9));
  for (std::size_t k = 0; k <= n; ++k) out.push_back(std::min(t0 + static_cast<double>(k) * step, t1));
  return out;
}

}  // namespace ptf
