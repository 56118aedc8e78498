// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "vacprobe/harness.hpp"
#include "vacprobe/multimode.hpp"

using namespace vacprobe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Report {
 public:
  void run(const std::string& name, const std::function<Outcome()>& body, double time_limit = 0.0) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit > 0.0 && seconds > time_limit) {
      o.pass = false;
      o.detail += "; over the " + fmt(time_limit) + " s budget";
    }
    std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures_ += o.pass ? 0 : 1;
  }
  int failures() const { return failures_; }

  static std::string fmt(double v, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
  }

 private:
  int failures_ = 0;
};

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::string fmt(double v, int digits = 6) { return Report::fmt(v, digits); }

PureState stripped(const PureState& a) {
  Vector v = a.amplitudes();
  v(0) = 0.0;
  return PureState(a.space(), v.normalized());
}

double poisson(int k) { return std::exp(-1.0) / std::tgamma(k + 1.0); }

Outcome reference_point() {
  const Fig4Summary s = run_wigner_fig4(fig4_defaults());
  const bool ok = within(s.p_success, 0.61, 0.03) && within(s.p_vacuum, 0.37, 0.01) && within(s.loss_error, 0.02, 0.01) &&
                  within(s.fidelity, 0.96, 0.02) && !s.at_range_edge;
  return {ok, "T_opt=" + fmt(s.T_opt) + " p_success=" + fmt(s.p_success) + " p_vacuum=" + fmt(s.p_vacuum) +
                  " loss_error=" + fmt(s.loss_error) + " fidelity=" + fmt(s.fidelity) +
                  (s.at_range_edge ? " (T_opt at range edge)" : "")};
}

Outcome ideal_branch() {
  const FockTruncation t(40);
  SystemConfig c;
  c.trunc = t;
  double worst_p = 0.0, worst_ratio = 0.0;
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    const PureState a = coherent_state(alpha, t);
    const MeasurementRecord r = measure_vacuum(DensityOperator(a), c, Mode::ideal);
    worst_p = std::max(worst_p, std::abs(r.p_vacuum - std::exp(-alpha * alpha)));
    const DensityOperator& out = *r.conditional_field_not_vacuum;
    for (int n = 1; n <= 12; ++n)
      for (int m = 1; m <= 12; ++m) {
        const cplx expected = a[n] / a[m];
        const cplx got = out(n - 1, m - 1) / out(m - 1, m - 1);
        worst_ratio = std::max(worst_ratio, std::abs(got - expected) / std::max(1.0, std::abs(expected)));
      }
  }
  return {worst_p <= 1e-10 && worst_ratio <= 1e-10,
          "max |p_vacuum - e^-|a|^2| = " + fmt(worst_p, 3) + ", max ratio error = " + fmt(worst_ratio, 3)};
}

Outcome diabatic_scaling() {
  SystemConfig c;
  c.trunc = FockTruncation(2);
  c.detuning = 0.5;
  const std::vector<double> durations{20, 40, 80, 160, 320, 640};
  const ScalingFit fit = diabatic_scaling_fit(1, durations, c);
  // |phi_num - phi_pred| must fall at least as fast as T^-2 between every pair of durations.
  std::vector<double> residual;
  for (double T : durations) {
    SystemConfig ct = c;
    ct.schedule = c.schedule.with_duration(T);
    const PhaseShift ph = phase_shift(1, ct);
    residual.push_back(std::abs(ph.numerical - ph.predicted));
  }
  bool phase_ok = true;
  for (std::size_t i = 1; i < durations.size(); ++i) {
    const double bound = residual[i - 1] * std::pow(durations[i - 1] / durations[i], 2.0);
    phase_ok = phase_ok && residual[i] <= bound;
  }
  const double phase_slope =
      std::log(residual.back() / residual.front()) / std::log(durations.back() / durations.front());
  const bool ok = within(fit.slope, -4.0, 0.5) && phase_ok;
  return {ok, "leakage slope=" + fmt(fit.slope, 4) + " (window T=" + fmt(durations[fit.window_first]) + ".." +
                  fmt(durations[fit.window_last]) + "), phase residual slope=" + fmt(phase_slope, 4) +
                  (phase_ok ? "" : " (not falling as T^-2 everywhere)")};
}

Outcome cross_oracle() {
  SystemConfig c = fig4_defaults().system;
  c.trunc = FockTruncation(3);
  c.schedule = c.schedule.with_duration(16.0);
  c.open = {1e-10, 1e-12};
  const Space atom = Space::atom_only(AtomLevelSet::lambda());
  Vector f(4);
  f << 0.6, 0.5, 0.4, 0.3;
  const PureState field(Space::field(c.trunc), f.normalized());
  const DensityOperator rho0(tensor(PureState::basis(atom, level::gp), field));
  const double distance = trace_distance(evolve_lindblad(rho0, c).state, oracle_evolve(rho0, c));

  double worst_amp = 0.0;
  SystemConfig closed;
  closed.trunc = FockTruncation(4);
  closed.detuning = 0.5;
  closed.schedule = closed.schedule.with_duration(50.0);
  closed.closed = {1e-12, 1e-13};
  const Space s = Space::single_mode(closed.trunc);
  const double T[] = {50.0};
  for (int n = 1; n <= 3; ++n) {
    const PureState end = evolve_schrodinger(PureState::basis(s, s.index(level::gp, n)), closed).state;
    const AmplitudeSample ode = amplitude_odes_evolve(n, closed, T).back();
    const DarkBrightBasis b = dark_bright_basis(n, 50.0, closed);
    // The ODE starts on the dark state, which is -|g',n> at t = 0.
    const Vector expected = -(ode.dark * b.dark.amplitudes() + ode.bright * b.bright.amplitudes() +
                              ode.excited * b.excited.amplitudes());
    worst_amp = std::max(worst_amp, (end.amplitudes() - expected).norm());
  }
  return {distance <= 1e-5 && worst_amp <= 1e-6,
          "Lindblad vs fixed-step trace distance=" + fmt(distance, 3) + ", Schrodinger vs amplitude ODE=" + fmt(worst_amp, 3)};
}

Outcome photon_number_insensitivity() {
  SystemConfig c;
  c.trunc = FockTruncation(8);
  c.schedule = c.schedule.with_duration(100.0);
  c.closed = {1e-12, 1e-13};
  const Space s = Space::single_mode(c.trunc);
  std::vector<double> f;
  for (int n = 1; n <= 8; ++n) {
    const PureState end = evolve_schrodinger(PureState::basis(s, s.index(level::gp, n)), c).state;
    f.push_back(std::norm(end[s.index(level::g, n - 1)]));
  }
  bool floor_ok = true, monotone = true;
  std::string detail = "F(n=1..8) =";
  for (std::size_t i = 0; i < f.size(); ++i) {
    floor_ok = floor_ok && f[i] >= 0.999;
    if (i > 0 && f[i] < f[i - 1]) monotone = false;
    detail += " " + fmt(f[i], 12);
  }
  detail += floor_ok ? "; all >= 0.999" : "; some below 0.999";
  detail += monotone ? "; non-decreasing" : "; not non-decreasing in n";
  return {floor_ok && monotone, detail};
}

Outcome bare_operator_statistics() {
  const FockTruncation t(40);
  const PureState a = coherent_state(1.0, t);
  const PureState raised = bare_raise(t).apply(a).normalized();
  const PureState lowered = bare_lower(t).apply(a).normalized();
  const PhotonStatistics up = photon_statistics(raised), down = photon_statistics(lowered);
  const bool ok = within(up.mandel_q, -0.5, 1e-10) && up.distribution[0] == 0.0 && down.mandel_q > 0.0;
  return {ok, "Q(E+|1>)=" + fmt(up.mandel_q, 14) + " P0=" + fmt(up.distribution[0]) + " Q(E-|1>)=" + fmt(down.mandel_q)};
}

Outcome scissors_and_counting() {
  const FockTruncation t(40);
  SystemConfig c;
  c.trunc = t;
  const DensityOperator a(coherent_state(1.0, t));
  double worst_scissors = 0.0, cumulative = 0.0;
  for (int n = 1; n <= 3; ++n) {
    cumulative += poisson(n - 1);
    worst_scissors = std::max(worst_scissors, std::abs(scissors_truncate(a, n, c, Mode::ideal).p_success - (1.0 - cumulative)));
  }
  const CountDistribution counts = number_resolving_measure(a, c, Mode::ideal);
  double worst_count = 0.0;
  for (std::size_t k = 0; k < counts.probabilities.size(); ++k)
    worst_count = std::max(worst_count, std::abs(counts.probabilities[k] - poisson(static_cast<int>(k))));
  return {worst_scissors <= 1e-10 && worst_count <= 1e-14,
          "max scissors error=" + fmt(worst_scissors, 3) + ", max count error vs Poisson(1)=" + fmt(worst_count, 3)};
}

Outcome multimode() {
  SystemConfig c;
  c.trunc = FockTruncation(11);
  c.schedule = c.schedule.with_duration(100.0);
  const PureState a = coherent_state(1.0, c.trunc);
  const DensityOperator fields(tensor(a, a));
  const std::vector<SystemConfig> configs{c, c};
  const JointVacuumRecord r = joint_vacuum_measure(fields, configs, Mode::simulated, true);
  const bool ok = within(r.record.p_vacuum, std::exp(-2.0), 1e-3) && r.restored &&
                  r.restored_ground_population > 1.0 - 1e-3 && std::abs(r.purity_deficit) < 1e-3;
  return {ok, "p_vacuum=" + fmt(r.record.p_vacuum, 8) + " (e^-2=" + fmt(std::exp(-2.0), 8) +
                  ") g_0 after restore=" + fmt(r.restored_ground_population, 8) +
                  " purity deficit=" + fmt(r.purity_deficit, 3) + " fidelity=" + fmt(r.fidelity_to_ideal, 8)};
}

Outcome phase_space() {
  const FockTruncation t(12);
  std::string detail = "integrals:";
  bool ok = true;
  for (const PureState& psi : {fock_state(0, t), fock_state(1, t), coherent_state(1.0, t)}) {
    const double integral = integrate(wigner(psi));
    ok = ok && within(integral, 1.0, 1e-3);
    detail += " " + fmt(integral, 8);
  }
  const double min_w = wigner(stripped(coherent_state(1.0, t))).W.minCoeff();
  ok = ok && min_w < 0.0;
  detail += "; stripped |alpha=1> min W=" + fmt(min_w);

  // Surface stand-in: optimal fidelity must fall as cavity loss grows.
  RunConfig sweep = fig4_defaults();
  sweep.sweep.alphas = {1.0};
  sweep.sweep.kappas = {0.0, 0.005, 0.02};
  sweep.sweep.t_grid = 8;
  sweep.sweep.log_t_tol = 0.02;
  const auto rows = run_sweep_fig3(sweep, 1);
  bool monotone = true;
  detail += "; optimal fidelity vs kappa:";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].fidelity > rows[i - 1].fidelity) monotone = false;
    detail += " " + fmt(rows[i].kappa) + "->" + fmt(rows[i].fidelity, 6);
  }
  return {ok && monotone, detail};
}

}  // namespace

int main() {
  Report report;
  report.run("reference loss point (alpha=1, kappa=0.005, Gamma_e=0.01, optimal T)", reference_point, 120.0);
  report.run("ideal branch exactness", ideal_branch, 1.0);
  report.run("diabatic scaling and phase residual", diabatic_scaling, 60.0);
  report.run("cross-oracle agreement", cross_oracle);
  report.run("photon-number insensitivity at T=100", photon_number_insensitivity);
  report.run("bare-operator statistics", bare_operator_statistics);
  report.run("scissors and counting", scissors_and_counting);
  report.run("multimode joint vacuum with restore", multimode);
  report.run("Wigner diagnostics and loss monotonicity", phase_space);
  std::printf("%d criteria failed\n", report.failures());
  return report.failures() == 0 ? 0 : 1;
}
