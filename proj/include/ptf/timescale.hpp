#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ptf/errors.hpp"

namespace ptf {

/// Rational prescribed-time scaling mu(t) = T^v / (T + start - t)^v on
/// [start, start + T), 1 afterwards. The log-derivative v / (T + start - t)
/// is capped at `ratio_cap`, which freezes the gain over the last
/// v / ratio_cap seconds of the window.
struct TimeScale {
  double start = 0.0;
  double horizon = 1.0;
  double exponent = 3.0;
  double ratio_cap = 1e3;

  void validate() const {
    if (!(horizon > 0.0)) throw ValidationError("time scale horizon must be positive");
    if (!(exponent > 2.0)) throw ValidationError("time scale exponent v must exceed 2");
    if (!(ratio_cap > 0.0)) throw ValidationError("ratio_cap must be positive");
    if (!(ratio_cap > exponent / horizon)) {
      throw ValidationError("ratio_cap must exceed v / T so the clamp only acts inside the window");
    }
  }

  double end() const { return start + horizon; }
  /// Width of the clamped tail of the window.
  double clamp_width() const { return exponent / ratio_cap; }
  double clamp_onset() const { return end() - clamp_width(); }
};

namespace detail {
inline void require_in_window(const TimeScale& ts, double t) {
  if (t < ts.start) {
    throw TimeBeforeWindow("time " + std::to_string(t) + " precedes window start " +
                           std::to_string(ts.start));
  }
}
// Distance to the deadline, floored at the clamp width.
inline double remaining(const TimeScale& ts, double t) {
  return std::max(ts.horizon + ts.start - t, ts.clamp_width());
}
}  // namespace detail

inline double mu(const TimeScale& ts, double t) {
  detail::require_in_window(ts, t);
  if (t >= ts.end()) return 1.0;
  return std::pow(ts.horizon / detail::remaining(ts, t), ts.exponent);
}

inline double mu_ratio(const TimeScale& ts, double t) {
  detail::require_in_window(ts, t);
  if (t >= ts.end()) return 0.0;
  return std::min(ts.exponent / detail::remaining(ts, t), ts.ratio_cap);
}

/// Exact solution of dV/dt = -a V - b (mu'/mu) V with V(start) = v0. With
/// b > 0 the unclamped solution reaches zero at the deadline and stays there.
inline double lemma1_closed_form(double a, double b, const TimeScale& ts, double v0, double t) {
  detail::require_in_window(ts, t);
  if (b > 0.0 && t >= ts.end()) return 0.0;
  return v0 * std::exp(-a * (t - ts.start)) * std::pow(mu(ts, t), -b);
}

}  // namespace ptf
