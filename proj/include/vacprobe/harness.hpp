#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacprobe/adiabatic.hpp"
#include "vacprobe/dynamics.hpp"
#include "vacprobe/protocol.hpp"
#include "vacprobe/wigner.hpp"

namespace vacprobe {

/// Invalid or unreadable run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"measure",    "project-nonvacuum", "scissors",    "number-resolve",
                                            "joint-vacuum", "sweep-fig3",      "wigner-fig4", "adiabatic-study"};
  return ids;
}

struct SweepSettings {
  std::vector<double> alphas{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> kappas{0.0, 0.001, 0.002, 0.005, 0.01, 0.02};
  double t_min = 5.0;
  double t_max = 500.0;
  int t_grid = 12;
  /// Bracket width of the golden refinement in log(T).
  double log_t_tol = 2e-3;

  bool operator==(const SweepSettings&) const = default;
};

struct JointSettings {
  std::vector<double> alphas{1.0, 1.0};
  int n_max = 11;
  bool restore = true;

  bool operator==(const JointSettings&) const = default;
};

struct AdiabaticSettings {
  std::vector<int> photon_numbers{1, 2, 3};
  std::vector<double> detunings{0.0, 0.5};
  std::vector<double> durations{20, 40, 80, 160, 320, 640};

  bool operator==(const AdiabaticSettings&) const = default;
};

struct OutputSettings {
  std::string dir = ".";
  std::string fig3 = "fig3.csv";
  std::string fig4_summary = "fig4_summary.json";
  std::string fig4_wigner = "fig4_wigner.csv";
  std::string adiabatic = "adiabatic.csv";
  /// JSON result of the single-state experiments; empty selects "<experiment>.json".
  std::string result;

  bool operator==(const OutputSettings&) const = default;
};

struct RunConfig {
  std::string experiment = "wigner-fig4";
  SystemConfig system{};
  Mode mode = Mode::simulated;
  double alpha = 1.0;
  /// Size n_max from alpha so the coherent tail stays below 1e-8 (never below system.trunc).
  bool auto_truncation = false;
  /// When false, single-state experiments use system.schedule.duration instead of a T search.
  bool optimize_duration = true;
  int n_cut = 1;
  SweepSettings sweep{};
  JointSettings joint{};
  AdiabaticSettings adiabatic{};
  GridSpec wigner{};
  OutputSettings output{};
  int workers = 1;
  std::uint64_t seed = 0;  // reserved

  /// Throws ConfigError on inconsistent values.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Reference loss point: alpha = 1, kappa = 0.005, Gamma_e = 0.01, Delta = 0.
RunConfig fig4_defaults();

// ---- experiments ----------------------------------------------------------

struct ProjectionPoint {
  double duration = 0.0;
  double fidelity = 0.0;
  double p_success = 0.0;  // atom found in g
  double p_vacuum_detected = 0.0;  // atom found in g'
  double p_sink = 0.0;
  std::optional<DensityOperator> field;
};

/// Simulated vacuum probe plus replacement on |alpha>, scored against normalized (I - P0)|alpha>.
ProjectionPoint evaluate_projection(double alpha, const SystemConfig& config, Mode mode = Mode::simulated);

struct OptimalDuration {
  double duration = 0.0;
  double fidelity = 0.0;
  bool at_range_edge = false;
  std::vector<double> grid;
  std::vector<double> grid_fidelity;
};

/// Coarse log grid over [t_min, t_max] followed by golden refinement around the best grid point.
OptimalDuration optimal_T_search(double alpha, double kappa, const SystemConfig& config, const SweepSettings& settings);

struct SweepRow {
  double alpha, kappa, T_opt, fidelity, p_success, p_vacuum, p_sink;
  bool at_range_edge = false;
};

/// One row per (alpha, kappa), alpha slowest; independent of the worker count.
std::vector<SweepRow> run_sweep_fig3(const RunConfig& config, int workers);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct Fig4Summary {
  double T_opt = 0.0;
  double fidelity = 0.0;
  double p_success = 0.0;
  /// <0|rho|0> of the input: the weight a perfect probe reports as vacuum.
  double p_vacuum = 0.0;
  /// Simulated probability of the atom ending in g'.
  double p_vacuum_detected = 0.0;
  double p_sink = 0.0;
  /// 1 - p_success - p_vacuum
  double loss_error = 0.0;
  bool at_range_edge = false;
  double wigner_integral = 0.0;
  double wigner_min = 0.0;
  double negativity_volume = 0.0;
  WignerGrid grid;
};

Fig4Summary run_wigner_fig4(const RunConfig& config);
nlohmann::json to_json(const Fig4Summary& summary);

struct AdiabaticRow {
  AdiabaticReport report;
  /// Fitted log-log slope of the (n, Delta) group; NaN when Delta = 0 or the fit is undefined.
  double slope = 0.0;
};

std::vector<AdiabaticRow> run_adiabatic_study(const RunConfig& config, int workers);
void write_adiabatic_csv(std::ostream& out, const std::vector<AdiabaticRow>& rows);

/// Runs `config.experiment`, writing its outputs under `out_dir`. Returns the written paths.
std::vector<std::filesystem::path> run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                                                  int workers, std::ostream& log);

}  // namespace vacprobe
