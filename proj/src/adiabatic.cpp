#include "vacprobe/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace vacprobe {

namespace {

void check_n(int n, const SystemConfig& config) {
  if (n < 1) throw std::invalid_argument("adiabatic analysis: n must be >= 1");
  if (n > config.trunc.n_max()) throw TruncationError("adiabatic analysis: n exceeds the Fock truncation");
}

void check_samples(std::span<const double> times, double duration) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > duration) throw std::out_of_range("sample time outside [0, T]");
    if (i > 0 && times[i] < times[i - 1]) throw std::invalid_argument("sample times must be sorted");
  }
}

// Integrates from 0 to T, reporting either every accepted step or exactly the requested times.
template <class State, class Rhs, class Record>
void integrate_sampled(Rhs&& rhs, State& y, double duration, std::span<const double> times, Tolerances tol,
                       Record&& record) {
  StepControl ctl;
  ctl.rtol = tol.rtol;
  ctl.atol = tol.atol;
  if (times.empty()) {
    integrate_dopri5(rhs, y, 0.0, duration, ctl, record);
    return;
  }
  check_samples(times, duration);
  double t = 0.0;
  for (double target : times) {
    if (target > t) {
      const auto stats = integrate_dopri5(rhs, y, t, target, ctl);
      ctl.initial_step = stats.next_step;
      t = target;
    }
    record(target, y);
  }
}

}  // namespace

DarkBrightBasis dark_bright_basis(int n, double t, const SystemConfig& config) {
  check_n(n, config);
  const Space space = Space::single_mode(config.trunc);
  const double th = theta(t, n, config.schedule);
  const int g = space.index(level::g, n - 1);
  const int gp = space.index(level::gp, n);
  Vector dark = Vector::Zero(space.dim());
  Vector bright = Vector::Zero(space.dim());
  dark(g) = std::sin(th);
  dark(gp) = -std::cos(th);
  bright(g) = std::cos(th);
  bright(gp) = std::sin(th);
  return {PureState(space, std::move(dark)), PureState(space, std::move(bright)),
          PureState::basis(space, space.index(level::e, n - 1))};
}

AmplitudeSample project_onto_triplet(const PureState& psi, int n, double t, const SystemConfig& config) {
  const DarkBrightBasis basis = dark_bright_basis(n, t, config);
  return {t, basis.dark.amplitudes().dot(psi.amplitudes()), basis.bright.amplitudes().dot(psi.amplitudes()),
          basis.excited.amplitudes().dot(psi.amplitudes())};
}

std::vector<AmplitudeSample> amplitude_odes_evolve(int n, const SystemConfig& config,
                                                   std::span<const double> sample_times, Tolerances tol) {
  check_n(n, config);
  const MixingAngleProfile profile(n, config.schedule);
  const double delta = config.detuning;
  auto rhs = [&](double t, const Eigen::Vector3cd& y, Eigen::Vector3cd& dy) {
    const double rate = profile.theta_rate(t);
    const double gap = profile.nu(t);
    dy(0) = rate * y(1);
    dy(1) = -rate * y(0) - kI * gap * y(2);
    dy(2) = -kI * gap * y(1) - kI * delta * y(2);
  };
  Eigen::Vector3cd y(1.0, 0.0, 0.0);
  std::vector<AmplitudeSample> out;
  integrate_sampled(rhs, y, config.schedule.duration, sample_times, tol,
                    [&](double t, const Eigen::Vector3cd& s) { out.push_back({t, s(0), s(1), s(2)}); });
  return out;
}

std::vector<ProjectiveSample> projective_odes_evolve(int n, const SystemConfig& config,
                                                     std::span<const double> sample_times, Tolerances tol,
                                                     double guard) {
  check_n(n, config);
  const MixingAngleProfile profile(n, config.schedule);
  const double delta = config.detuning;
  auto rhs = [&](double t, const Eigen::Vector2cd& k, Eigen::Vector2cd& dk) {
    const double rate = profile.theta_rate(t);
    const double gap = profile.nu(t);
    dk(0) = -rate - kI * gap * k(1) - rate * k(0) * k(0);
    dk(1) = -kI * gap * k(0) - kI * delta * k(1) - rate * k(0) * k(1);
  };
  Eigen::Vector2cd k(0.0, 0.0);
  std::vector<ProjectiveSample> out;
  auto record = [&](double t, const Eigen::Vector2cd& s) {
    if (std::abs(s(0)) > guard || std::abs(s(1)) > guard)
      throw NumericalError("projective_odes_evolve: projective coordinates diverged at t = " + std::to_string(t));
    out.push_back({t, s(0), s(1)});
  };
  integrate_sampled(rhs, k, config.schedule.duration, sample_times, tol, record);
  return out;
}

std::pair<cplx, cplx> asymptotic_kappas(int n, double t, const SystemConfig& config) {
  const MixingAngleProfile profile(n, config.schedule);
  const double rate = profile.theta_rate(t);
  const double gap = profile.nu(t);
  if (gap == 0.0) return {0.0, 0.0};
  return {-kI * rate * config.detuning / (gap * gap), kI * rate / gap};
}

PhaseShift phase_shift(int n, const SystemConfig& config) {
  check_n(n, config);
  const MixingAngleProfile profile(n, config.schedule);
  const double T = config.schedule.duration;
  auto integrand = [&](double t) {
    const double gap = profile.nu(t);
    if (gap == 0.0) return 0.0;
    const double rate = profile.theta_rate(t);
    return rate * rate / (gap * gap);
  };
  // Quarter windows keep the piecewise envelope kinks on panel edges.
  double integral = 0.0;
  if (T > 0.0)
    for (int q = 0; q < 4; ++q)
      integral += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, q * T / 4, (q + 1) * T / 4,
                                                                                 15, 1e-13);
  const double end[1] = {T};
  const auto samples = amplitude_odes_evolve(n, config, end);
  return {-config.detuning * integral, std::arg(samples.back().dark)};
}

double diabatic_probability(int n, const SystemConfig& config) {
  const double end[1] = {config.schedule.duration};
  const AmplitudeSample s = amplitude_odes_evolve(n, config, end).back();
  const double outside = std::norm(s.bright) + std::norm(s.excited);
  return std::clamp(outside / (outside + std::norm(s.dark)), 0.0, 1.0);
}

AdiabaticReport analyze_adiabatic(int n, const SystemConfig& config) {
  const double T = config.schedule.duration;
  const double times[2] = {0.5 * T, T};
  const auto samples = amplitude_odes_evolve(n, config, times);
  const AmplitudeSample& mid = samples[0];
  const AmplitudeSample& end = samples[1];

  AdiabaticReport r;
  r.n = n;
  r.duration = T;
  r.detuning = config.detuning;
  r.nu0 = nu_0(n, config.detuning, config.schedule);
  r.kappa_b_end = end.bright / end.dark;
  r.kappa_e_end = end.excited / end.dark;
  std::tie(r.kappa_b_pred, r.kappa_e_pred) = asymptotic_kappas(n, T, config);
  const auto [kb_mid, ke_mid] = asymptotic_kappas(n, 0.5 * T, config);
  r.kappa_b_mid_residual = std::abs(mid.bright / mid.dark - kb_mid);
  r.kappa_e_mid_residual = std::abs(mid.excited / mid.dark - ke_mid);
  const PhaseShift phase = phase_shift(n, config);
  r.phi_pred = phase.predicted;
  r.phi_num = phase.numerical;
  const double outside = std::norm(end.bright) + std::norm(end.excited);
  r.p_diabatic = std::clamp(outside / (outside + std::norm(end.dark)), 0.0, 1.0);
  return r;
}

std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ScalingFit diabatic_scaling_fit(int n, std::span<const double> durations, const SystemConfig& config) {
  if (config.detuning == 0.0) throw std::invalid_argument("diabatic_scaling_fit: requires nonzero detuning");
  if (durations.size() < 3) throw std::invalid_argument("diabatic_scaling_fit: need at least three durations");
  if (!std::is_sorted(durations.begin(), durations.end()) || durations.front() <= 0.0)
    throw std::invalid_argument("diabatic_scaling_fit: durations must be positive and increasing");
  if (durations.back() < 10.0 * durations.front())
    throw std::invalid_argument("diabatic_scaling_fit: durations must span at least one decade");

  ScalingFit fit;
  fit.durations.assign(durations.begin(), durations.end());
  std::vector<double> log_t, log_p;
  for (double T : durations) {
    SystemConfig c = config;
    c.schedule = config.schedule.with_duration(T);
    const double p = diabatic_probability(n, c);
    if (!(p > 0.0)) throw NumericalError("diabatic_scaling_fit: leakage vanished below integrator resolution");
    fit.leakage.push_back(p);
    log_t.push_back(std::log(T));
    log_p.push_back(std::log(p));
  }
  for (std::size_t i = 0; i + 1 < log_t.size(); ++i)
    fit.local_slopes.push_back((log_p[i + 1] - log_p[i]) / (log_t[i + 1] - log_t[i]));

  // Longest run [i, j] of local slopes with (max - min) <= 10% of |mean|.
  std::size_t best_i = 0, best_j = 0;
  for (std::size_t i = 0; i < fit.local_slopes.size(); ++i) {
    double lo = fit.local_slopes[i], hi = lo, sum = 0.0;
    for (std::size_t j = i; j < fit.local_slopes.size(); ++j) {
      lo = std::min(lo, fit.local_slopes[j]);
      hi = std::max(hi, fit.local_slopes[j]);
      sum += fit.local_slopes[j];
      const double mean = sum / static_cast<double>(j - i + 1);
      if (hi - lo > 0.1 * std::abs(mean)) break;
      if (j - i >= best_j - best_i) {
        best_i = i;
        best_j = j;
      }
    }
  }
  fit.window_first = best_i;
  fit.window_last = best_j + 1;
  const std::span<const double> xs(log_t.data() + best_i, best_j - best_i + 2);
  const std::span<const double> ys(log_p.data() + best_i, best_j - best_i + 2);
  std::tie(fit.slope, fit.intercept) = linear_fit(xs, ys);
  return fit;
}

}  // namespace vacprobe
