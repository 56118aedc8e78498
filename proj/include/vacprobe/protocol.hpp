#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "vacprobe/dynamics.hpp"
#include "vacprobe/fock.hpp"

namespace vacprobe {

/// ideal: the algebraic map of perfect adiabatic transfer without loss.
/// simulated: the atom is attached and the sweep integrated with the Lindblad equation.
enum class Mode { ideal, simulated };

/// Outcome of one vacuum probe. The atom reads g' (vacuum), g (not vacuum) or anything else (sink).
struct MeasurementRecord {
  double p_vacuum = 0.0;
  double p_not_vacuum = 0.0;
  double p_sink = 0.0;
  /// Normalized field state per branch; empty when the branch has zero probability.
  std::optional<DensityOperator> conditional_field_vacuum;
  std::optional<DensityOperator> conditional_field_not_vacuum;
  bool atom_disposed = true;
};

/// A single conditional field output.
struct ConditionalField {
  double p_success = 0.0;
  std::optional<DensityOperator> field;
};

struct AddPhotonResult {
  DensityOperator field;
  /// Probability the atom ended in g' (the transfer happened); the field is not conditioned on it.
  double p_transfer = 1.0;
};

struct ProjectionResult {
  double p_success = 0.0;
  std::optional<DensityOperator> field;
  MeasurementRecord measurement;
  double p_transfer = 0.0;
};

struct ScissorsRecord {
  int n_cut = 0;
  double p_success = 0.0;
  std::optional<DensityOperator> output_field;
  std::vector<MeasurementRecord> rounds;
};

struct CountDistribution {
  /// probabilities[k]: k not-vacuum outcomes before the first vacuum outcome.
  std::vector<double> probabilities;
  /// Weight that left through the sink in some round.
  double p_lost = 0.0;
  int rounds = 0;
};

/// Probe the field for vacuum with an atom prepared in g'.
MeasurementRecord measure_vacuum(const DensityOperator& field, const SystemConfig& config, Mode mode);

/// Forward sweep with the atom in g; ideal mode applies E+.
AddPhotonResult add_photon(const DensityOperator& field, const SystemConfig& config, Mode mode);

/// Vacuum probe followed by photon replacement on the not-vacuum branch: realizes I - |0><0|.
ProjectionResult project_nonvacuum(const DensityOperator& field, const SystemConfig& config, Mode mode);

/// Vacuum probe without replacement: the not-vacuum branch carries E- rho E+.
ConditionalField bare_lower_protocol(const DensityOperator& field, const SystemConfig& config, Mode mode);

/// n_cut probes without replacement (each conditioned on not-vacuum), then n_cut photon additions.
ScissorsRecord scissors_truncate(const DensityOperator& field, int n_cut, const SystemConfig& config, Mode mode);

/// Repeated probes without replacement until a vacuum outcome; at most n_max + 1 rounds.
CountDistribution number_resolving_measure(const DensityOperator& field, const SystemConfig& config, Mode mode);

/// Atom and field after the ideal probe: |g'> a_0 |0> - |g> sum a_n |n-1>.
PureState ideal_measurement_output(const PureState& field);

/// Unitary on span{g, g'}: |g> -> cos(a/2)|g> + e^{i p} sin(a/2)|g'>, |g'> -> -e^{-i p} sin(a/2)|g> + cos(a/2)|g'>.
PureState rotate_ground(const PureState& state, double angle, double phase);
DensityOperator rotate_ground(const DensityOperator& state, double angle, double phase);

/// Free cavity decay of a field for `duration` at rate `kappa`.
DensityOperator cavity_decay(const DensityOperator& field, double kappa, double duration, Tolerances tol);

nlohmann::json to_json(const MeasurementRecord& record);
nlohmann::json to_json(const ProjectionResult& result);
nlohmann::json to_json(const ScissorsRecord& record);
nlohmann::json to_json(const CountDistribution& counts);

}  // namespace vacprobe
