#include "vacprobe/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vacprobe/optimize.hpp"

namespace vacprobe {

namespace {

constexpr double kPi = std::numbers::pi;

struct Envelope {
  double value;
  double slope;  // d/ds on the unit window
};

Envelope ramp(double u) { return {std::pow(std::sin(0.5 * kPi * u), 2), 0.5 * kPi * std::sin(kPi * u)}; }

Envelope fall(double u) {
  const Envelope r = ramp(u);
  return {1.0 - r.value, -r.slope};
}

// Profiles in the measurement direction on s in [0, 1], normalized to peak 1.
Envelope laser_profile(EnvelopeFamily family, double s) {
  if (family == EnvelopeFamily::cos2_sin2) return fall(s);
  if (s < 0.25) {
    const Envelope r = ramp(4.0 * s);
    return {r.value, 4.0 * r.slope};
  }
  if (s < 0.5) return {1.0, 0.0};
  if (s < 0.75) {
    const Envelope f = fall(4.0 * s - 2.0);
    return {f.value, 4.0 * f.slope};
  }
  return {0.0, 0.0};
}

Envelope cavity_profile(EnvelopeFamily family, double s) {
  if (family == EnvelopeFamily::cos2_sin2) return ramp(s);
  if (s < 0.25) return {0.0, 0.0};
  if (s < 0.5) {
    const Envelope r = ramp(4.0 * s - 1.0);
    return {r.value, 4.0 * r.slope};
  }
  if (s < 0.75) return {1.0, 0.0};
  const Envelope f = fall(4.0 * s - 3.0);
  return {f.value, 4.0 * f.slope};
}

// Maps t to the measurement-direction unit window; the sign carries d s / d t direction.
struct WindowPoint {
  double s;
  double ds_dt;
};

WindowPoint window(const PulseSchedule& p, double t) {
  const double T = p.duration;
  const double slack = 1e-12 * std::max(T, 1.0);
  if (!(t >= -slack && t <= T + slack))
    throw std::out_of_range("PulseSchedule: t = " + std::to_string(t) + " outside [0, T]");
  if (T == 0.0) return {p.direction == Direction::measurement ? 0.0 : 1.0, 0.0};
  const double u = std::clamp(t / T, 0.0, 1.0);
  if (p.direction == Direction::measurement) return {u, 1.0 / T};
  return {1.0 - u, -1.0 / T};
}

}  // namespace

double PulseSchedule::gamma_a(double t) const {
  return laser_peak * laser_profile(envelope, window(*this, t).s).value;
}

double PulseSchedule::gamma_b(double t) const {
  return cavity_peak * cavity_profile(envelope, window(*this, t).s).value;
}

double PulseSchedule::gamma_a_rate(double t) const {
  const WindowPoint w = window(*this, t);
  return laser_peak * laser_profile(envelope, w.s).slope * w.ds_dt;
}

double PulseSchedule::gamma_b_rate(double t) const {
  const WindowPoint w = window(*this, t);
  return cavity_peak * cavity_profile(envelope, w.s).slope * w.ds_dt;
}

PulseSchedule PulseSchedule::reversed() const {
  return with_direction(direction == Direction::measurement ? Direction::addition : Direction::measurement);
}

PulseSchedule PulseSchedule::with_duration(double T) const {
  if (!(T >= 0.0)) throw std::invalid_argument("PulseSchedule: negative duration");
  PulseSchedule p = *this;
  p.duration = T;
  return p;
}

PulseSchedule PulseSchedule::with_direction(Direction d) const {
  PulseSchedule p = *this;
  p.direction = d;
  return p;
}

// ---- mixing angle ---------------------------------------------------------

MixingAngleProfile::MixingAngleProfile(int n, PulseSchedule schedule) : n_(n), schedule_(schedule) {
  if (n < 1) throw std::invalid_argument("MixingAngleProfile: n must be >= 1");
}

double MixingAngleProfile::theta(double t) const {
  return std::atan2(std::sqrt(static_cast<double>(n_)) * schedule_.gamma_b(t), schedule_.gamma_a(t));
}

double MixingAngleProfile::nu(double t) const {
  const double a = schedule_.gamma_a(t);
  const double b = schedule_.gamma_b(t);
  return std::sqrt(a * a + n_ * b * b);
}

double MixingAngleProfile::theta_rate(double t) const {
  const double a = schedule_.gamma_a(t);
  const double b = schedule_.gamma_b(t);
  const double denom = a * a + n_ * b * b;
  if (denom == 0.0) return 0.0;
  const double num = schedule_.gamma_b_rate(t) * a - b * schedule_.gamma_a_rate(t);
  return std::sqrt(static_cast<double>(n_)) * num / denom;
}

double gamma_A(double t, const PulseSchedule& schedule) { return schedule.gamma_a(t); }
double gamma_B(double t, const PulseSchedule& schedule) { return schedule.gamma_b(t); }
double theta(double t, int n, const PulseSchedule& schedule) { return MixingAngleProfile(n, schedule).theta(t); }
double nu(double t, int n, const PulseSchedule& schedule) { return MixingAngleProfile(n, schedule).nu(t); }
double theta_rate(double t, int n, const PulseSchedule& schedule) {
  return MixingAngleProfile(n, schedule).theta_rate(t);
}

double nu_0(int n, double detuning, const PulseSchedule& schedule) {
  if (n < 1) throw std::invalid_argument("nu_0: n must be >= 1");
  // The gap depends on the envelope shape only, so work on a unit window.
  const PulseSchedule unit = schedule.with_duration(1.0);
  const double half = 0.5 * detuning;
  auto gap = [&](double t) {
    const double a = unit.gamma_a(t);
    const double b = unit.gamma_b(t);
    return std::sqrt(half * half + a * a + n * b * b) - half;
  };
  constexpr int kSamples = 4000;
  int best = 0;
  double best_value = gap(0.5 / kSamples);
  for (int i = 1; i < kSamples; ++i) {
    const double v = gap((i + 0.5) / kSamples);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double lo = std::max(0.0, static_cast<double>(best - 1) / kSamples);
  const double hi = std::min(1.0, static_cast<double>(best + 2) / kSamples);
  const auto refined = numerics::golden_section_minimize(gap, lo, hi, 1e-12);
  return std::min(best_value, refined.value);
}

}  // namespace vacprobe
