#pragma once

#include <span>
#include <vector>

#include "vacprobe/dynamics.hpp"
#include "vacprobe/fock.hpp"

namespace vacprobe {

/// Tolerances for the three-amplitude equations; diabatic leakage reaches 1e-10 at long T.
inline constexpr Tolerances kAdiabaticTolerance{1e-12, 1e-14};

/// |a> = sin θ |g,n-1> - cos θ |g',n>, |b> = cos θ |g,n-1> + sin θ |g',n>, and |e,n-1>.
struct DarkBrightBasis {
  PureState dark;
  PureState bright;
  PureState excited;
};

DarkBrightBasis dark_bright_basis(int n, double t, const SystemConfig& config);

struct AmplitudeSample {
  double t;
  cplx dark;
  cplx bright;
  cplx excited;
};

/// Components of a single-mode state along the triplet-n basis at time t.
AmplitudeSample project_onto_triplet(const PureState& psi, int n, double t, const SystemConfig& config);

/// Integrates
///   α̇_a = θ̇ α_b,  α̇_b = -θ̇ α_a - i ν α_e,  α̇_e = -i ν α_b - i Δ α_e
/// from α = (1, 0, 0). Returns samples at `sample_times` (sorted, within [0, T]) or, if empty,
/// at every accepted step.
std::vector<AmplitudeSample> amplitude_odes_evolve(int n, const SystemConfig& config,
                                                   std::span<const double> sample_times = {},
                                                   Tolerances tol = kAdiabaticTolerance);

struct ProjectiveSample {
  double t;
  cplx kappa_b;
  cplx kappa_e;
};

/// κ_b = α_b/α_a, κ_e = α_e/α_a obey
///   κ̇_b = -θ̇ - i ν κ_e - θ̇ κ_b²,  κ̇_e = -i ν κ_b - i Δ κ_e - θ̇ κ_b κ_e.
/// Throws NumericalError if |κ| passes `guard` (α_a approaching zero).
std::vector<ProjectiveSample> projective_odes_evolve(int n, const SystemConfig& config,
                                                     std::span<const double> sample_times = {},
                                                     Tolerances tol = kAdiabaticTolerance, double guard = 1e3);

/// Leading-order κ_b = -i θ̇ Δ / ν², κ_e = i θ̇ / ν.
std::pair<cplx, cplx> asymptotic_kappas(int n, double t, const SystemConfig& config);

struct PhaseShift {
  double predicted;  // -Δ ∫ θ̇²/ν² dt
  double numerical;  // arg α_a(T)
};

PhaseShift phase_shift(int n, const SystemConfig& config);

struct AdiabaticReport {
  int n = 1;
  double duration = 0.0;
  double detuning = 0.0;
  double nu0 = 0.0;
  cplx kappa_b_end, kappa_e_end;    // integrated
  cplx kappa_b_pred, kappa_e_pred;  // asymptotic, at t = T
  double kappa_b_mid_residual = 0.0;  // |κ - κ_pred| at t = T/2
  double kappa_e_mid_residual = 0.0;
  double phi_pred = 0.0;
  double phi_num = 0.0;
  double p_diabatic = 0.0;
};

/// Population outside the dark state at t = T, normalized by the integrated total.
double diabatic_probability(int n, const SystemConfig& config);

AdiabaticReport analyze_adiabatic(int n, const SystemConfig& config);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;           // of log P vs log T
  std::size_t window_first = 0;     // indices into durations, inclusive
  std::size_t window_last = 0;
  std::vector<double> durations;
  std::vector<double> leakage;
  std::vector<double> local_slopes;  // between consecutive durations
};

/// Log-log slope of diabatic leakage against T. The fit window is the longest contiguous run of
/// local slopes whose spread stays within 10% of their mean (later runs win ties).
/// Requires Δ != 0 and durations spanning at least one decade.
ScalingFit diabatic_scaling_fit(int n, std::span<const double> durations, const SystemConfig& config);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace vacprobe
