#pragma once

namespace vacprobe {

/// measurement: laser (A) leads, maps |g',n> -> |g,n-1>. addition: the time reverse.
enum class Direction { measurement, addition };

enum class EnvelopeFamily {
  /// gamma_A ~ cos^2(pi t / 2T), gamma_B ~ sin^2(pi t / 2T) over one window.
  cos2_sin2,
  /// A on, B on, A off, B off; each edge a sin^2 ramp over a quarter window.
  four_phase,
};

/// Coupling envelopes gamma_A(t), gamma_B(t) on [0, duration]. Units of g, times in 1/g.
struct PulseSchedule {
  double duration = 100.0;
  double laser_peak = 2.0;
  double cavity_peak = 1.0;
  Direction direction = Direction::measurement;
  EnvelopeFamily envelope = EnvelopeFamily::cos2_sin2;

  double gamma_a(double t) const;
  double gamma_b(double t) const;
  double gamma_a_rate(double t) const;
  double gamma_b_rate(double t) const;

  PulseSchedule reversed() const;
  PulseSchedule with_duration(double T) const;
  PulseSchedule with_direction(Direction d) const;

  bool operator==(const PulseSchedule&) const = default;
};

/// theta(t), nu(t) and dtheta/dt for the (|g,n-1>, |e,n-1>, |g',n>) triplet.
class MixingAngleProfile {
 public:
  MixingAngleProfile(int n, PulseSchedule schedule);

  int n() const { return n_; }
  const PulseSchedule& schedule() const { return schedule_; }

  double theta(double t) const;
  double nu(double t) const;
  double theta_rate(double t) const;

 private:
  int n_;
  PulseSchedule schedule_;
};

double gamma_A(double t, const PulseSchedule& schedule);
double gamma_B(double t, const PulseSchedule& schedule);
double theta(double t, int n, const PulseSchedule& schedule);
double nu(double t, int n, const PulseSchedule& schedule);
double theta_rate(double t, int n, const PulseSchedule& schedule);

/// min_t sqrt((Delta/2)^2 + gamma_A^2 + n gamma_B^2) - Delta/2, by dense sampling and golden refinement.
double nu_0(int n, double detuning, const PulseSchedule& schedule);

}  // namespace vacprobe
