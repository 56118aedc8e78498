#pragma once

#include <span>

#include <json.hpp>

#include "vacprobe/protocol.hpp"

namespace vacprobe {

/// Largest joint space (atom x modes) the Lindblad path accepts; lossless runs go through
/// per-eigenvector Schrödinger sweeps and only need the pure-state dimension.
inline constexpr int kJointDensityDimCap = 256;
inline constexpr int kMaxJointModes = 3;

struct JointVacuumRecord {
  MeasurementRecord record;
  bool restored = false;
  /// Population of g_0 after the restoring sweeps (1 when not restored and the branch is vacuum).
  double restored_ground_population = 0.0;
  /// purity(ideal complement) - purity(reduced field after restore).
  double purity_deficit = 0.0;
  double fidelity_to_ideal = 0.0;
};

/// Joint n-mode vacuum probe with an (n+1)-pod atom {g_0, g_1..g_n, e, s}.
///
/// Sweep j couples e-g_j by laser and e-g_0 to mode j by the cavity, with every other coupling off.
/// configs[j] supplies the schedule, detuning and Gamma_e for sweep j and the loss rate of mode j.
/// With `restore`, the complement branch is swept back in reverse order to return the atom to g_0.
JointVacuumRecord joint_vacuum_measure(const DensityOperator& fields, std::span<const SystemConfig> configs, Mode mode,
                                       bool restore);

nlohmann::json to_json(const JointVacuumRecord& record);

}  // namespace vacprobe
