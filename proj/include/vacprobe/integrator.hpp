#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace vacprobe {

/// Step-size control could not reach the requested tolerance.
class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A monitored quantity left its admissible range (e.g. a diverging coordinate).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0 picks one automatically
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  double next_step = 0.0;  // proposal for a continuation call
};

namespace detail {

template <class State>
double scaled_rms(const State& err, const State& y0, const State& y1, double atol, double rtol) {
  const auto scale = atol + rtol * y0.cwiseAbs().array().max(y1.cwiseAbs().array());
  return std::sqrt((err.cwiseAbs().array() / scale).square().mean());
}

}  // namespace detail

/// Dormand-Prince 5(4) with FSAL and local extrapolation.
///
/// `rhs(t, y, dydt)` fills dydt; `observe(t, y)` sees t0 and every accepted step.
/// State is any dense Eigen vector or matrix type.
template <class State, class Rhs, class Observer>
IntegrationStats integrate_dopri5(Rhs&& rhs, State& y, double t0, double t1, const StepControl& ctl,
                                  Observer&& observe) {
  IntegrationStats stats;
  observe(t0, y);
  if (t1 <= t0) return stats;

  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  State k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err;
  rhs(t0, y, k1);

  double t = t0;
  double h = ctl.initial_step;
  if (h <= 0.0) {
    const double d0 = detail::scaled_rms(y, y, y, ctl.atol, ctl.rtol);
    const double d1 = detail::scaled_rms(k1, y, y, ctl.atol, ctl.rtol);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, 1e-2 * (t1 - t0) + 1e-6);
  }
  h = std::min(h, ctl.max_step);

  bool last_rejected = false;
  while (t < t1) {
    if (stats.accepted + stats.rejected >= ctl.max_steps)
      throw ToleranceError("integrate_dopri5: step budget exhausted at t = " + std::to_string(t));
    const double h_unclipped = h;
    const bool final_step = t + h >= t1;
    if (final_step) h = t1 - t;
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
      throw ToleranceError("integrate_dopri5: step size underflow at t = " + std::to_string(t));

    tmp = y + h * a21 * k1;
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(final_step ? t1 : t + h, tmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = final_step ? t1 : t + h;
    rhs(t_new, ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double e = detail::scaled_rms(err, y, ynew, ctl.atol, ctl.rtol);
    if (!std::isfinite(e)) throw ToleranceError("integrate_dopri5: non-finite error estimate");
    if (e <= 1.0) {
      t = t_new;
      y.swap(ynew);
      k1.swap(k7);
      ++stats.accepted;
      observe(t, y);
      double factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
      if (last_rejected) factor = std::min(factor, 1.0);
      last_rejected = false;
      if (!final_step) h = std::min(h * factor, ctl.max_step);
      stats.next_step = final_step ? h_unclipped : h;
    } else {
      ++stats.rejected;
      last_rejected = true;
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
    }
  }
  return stats;
}

template <class State, class Rhs>
IntegrationStats integrate_dopri5(Rhs&& rhs, State& y, double t0, double t1, const StepControl& ctl) {
  return integrate_dopri5(std::forward<Rhs>(rhs), y, t0, t1, ctl, [](double, const State&) {});
}

}  // namespace vacprobe
