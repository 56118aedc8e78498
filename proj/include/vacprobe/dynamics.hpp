#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "vacprobe/fock.hpp"
#include "vacprobe/integrator.hpp"
#include "vacprobe/pulses.hpp"

namespace vacprobe {

struct Tolerances {
  double rtol;
  double atol;

  bool operator==(const Tolerances&) const = default;
};

/// Physical parameters in units of g = max gamma_B, hbar = 1.
struct SystemConfig {
  double detuning = 0.0;
  double kappa = 0.0;    // cavity field decay rate
  double gamma_e = 0.0;  // |e> -> |s> decay rate
  FockTruncation trunc{12};
  PulseSchedule schedule{};
  Tolerances closed{1e-9, 1e-9};
  Tolerances open{1e-8, 1e-8};
  /// Free cavity decay between measurement and photon replacement.
  double idle = 0.0;

  /// Throws std::invalid_argument on negative or non-finite rates.
  void validate() const;

  bool operator==(const SystemConfig&) const = default;
};

using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// Time-dependent generator H(t) = H_0 + sum_k f_k(t) H_k with collapse operators L_j.
///
/// The Lindblad right-hand side is dρ/dt = -i[H, ρ] + sum_j (L_j ρ L_j^† - ½{L_j^† L_j, ρ}).
class Generator {
 public:
  Generator(Space space, SparseMatrix static_part);

  void add_term(std::function<double(double)> coefficient, SparseMatrix op);
  /// `op` carries the square root of its rate.
  void add_collapse(SparseMatrix op);

  const Space& space() const { return space_; }
  bool has_dissipation() const { return !collapse_.empty(); }

  SparseMatrix hamiltonian(double t) const;
  void schrodinger_rhs(double t, const Vector& psi, Vector& out) const;
  void lindblad_rhs(double t, const Matrix& rho, Matrix& out) const;

 private:
  struct Term {
    std::function<double(double)> coefficient;
    SparseMatrix op;
  };
  Space space_;
  SparseMatrix static_;
  std::vector<Term> terms_;
  std::vector<SparseMatrix> collapse_;
  SparseMatrix decay_;  // sum L^dag L
};

/// Which levels and mode one adiabatic sweep couples.
struct CouplingLegs {
  int excited;
  int laser_level;   // driven by gamma_A (laser)
  int cavity_level;  // coupled to `mode` by gamma_B
  int mode;
};

/// Lambda-atom legs for the single-mode space.
CouplingLegs lambda_legs();

/// Sparse generator for one sweep on `space`. Cavity loss acts on every mode (at config.kappa, or
/// mode_kappas[m] when given) and Gamma_e feeds level "s".
Generator make_generator(const Space& space, const CouplingLegs& legs, const SystemConfig& config,
                         std::span<const double> mode_kappas = {});
Generator single_mode_generator(const SystemConfig& config);

/// Dense rotating-wave Hamiltonian on the lambda-atom x single-mode space.
LinearOperator build_hamiltonian(double t, const SystemConfig& config);

/// Spectrum of H on span{|g,n-1>, |e,n-1>, |g',n>}: {0, E+, E-}; for n = 0 just {0}.
std::vector<double> triplet_eigenenergies(int n, double t, const SystemConfig& config);

struct SeriesPoint {
  double t;
  double p_dark;
  double p_bright;
  double p_excited;
  double p_sink;
  double trace;
};

template <class State>
struct EvolveResult {
  State state;
  double sink_population = 0.0;
  std::vector<SeriesPoint> series;
  IntegrationStats stats;
};

PureState evolve_pure(const Generator& gen, const PureState& psi0, double duration, Tolerances tol);
DensityOperator evolve_density(const Generator& gen, const DensityOperator& rho0, double duration, Tolerances tol);

/// Closed evolution over the schedule window; requires kappa = gamma_e = 0.
EvolveResult<PureState> evolve_schrodinger(const PureState& psi0, const SystemConfig& config,
                                           bool record_series = false);
/// Open evolution over the schedule window.
EvolveResult<DensityOperator> evolve_lindblad(const DensityOperator& rho0, const SystemConfig& config,
                                              bool record_series = false);

/// Fixed-step reference propagator: each step applies the exponential of the generator frozen at the
/// step's left endpoint (first order in dt). Dense; limited to 64 basis states.
PureState oracle_evolve(const PureState& psi0, const SystemConfig& config, double dt = 1e-4);
DensityOperator oracle_evolve(const DensityOperator& rho0, const SystemConfig& config, double dt = 1e-4);

/// Zero-energy and bright populations on the single-mode space at time t.
SeriesPoint diagnostics(double t, const DensityOperator& rho, const SystemConfig& config);
SeriesPoint diagnostics(double t, const PureState& psi, const SystemConfig& config);

/// Header `t,P_dark,P_bright,P_e,P_sink,trace`.
void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series);

}  // namespace vacprobe
