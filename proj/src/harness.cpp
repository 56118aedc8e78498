#include "vacprobe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "vacprobe/format.hpp"
#include "vacprobe/multimode.hpp"
#include "vacprobe/optimize.hpp"
#include "vacprobe/serialize.hpp"

namespace vacprobe {

using nlohmann::json;

namespace {

// ---- config parsing -------------------------------------------------------

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number()) throw ConfigError(path(key) + ": expected a number");
      if constexpr (std::is_integral_v<T>) {
        const double v = it->template get<double>();
        if (v != std::floor(v)) throw ConfigError(path(key) + ": expected an integer");
      }
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.contains(item.key())) throw ConfigError("unknown key " + path(item.key()));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const char* envelope_name(EnvelopeFamily e) { return e == EnvelopeFamily::cos2_sin2 ? "cos2_sin2" : "four_phase"; }

EnvelopeFamily parse_envelope(const std::string& s) {
  if (s == "cos2_sin2") return EnvelopeFamily::cos2_sin2;
  if (s == "four_phase") return EnvelopeFamily::four_phase;
  throw ConfigError("unknown envelope '" + s + "'");
}

const char* mode_name(Mode m) { return m == Mode::ideal ? "ideal" : "simulated"; }

Mode parse_mode(const std::string& s) {
  if (s == "ideal") return Mode::ideal;
  if (s == "simulated") return Mode::simulated;
  throw ConfigError("unknown mode '" + s + "'");
}

Tolerances parse_tolerances(const json& j, const std::string& where, Tolerances tol) {
  ObjectReader r(j, where);
  r.get("rtol", tol.rtol);
  r.get("atol", tol.atol);
  r.finish();
  return tol;
}

json tolerances_json(Tolerances t) { return {{"rtol", t.rtol}, {"atol", t.atol}}; }

SystemConfig parse_system(const json& j) {
  SystemConfig c;
  ObjectReader r(j, "system");
  r.get("detuning", c.detuning);
  r.get("kappa", c.kappa);
  r.get("gamma_e", c.gamma_e);
  r.get("idle", c.idle);
  int n_max = c.trunc.n_max();
  r.get("n_max", n_max);
  if (n_max < 1) throw ConfigError("system.n_max must be >= 1");
  c.trunc = FockTruncation(n_max);
  if (const json* s = r.child("schedule")) {
    ObjectReader sr(*s, "system.schedule");
    sr.get("duration", c.schedule.duration);
    sr.get("laser_peak", c.schedule.laser_peak);
    sr.get("cavity_peak", c.schedule.cavity_peak);
    std::string envelope = envelope_name(c.schedule.envelope);
    sr.get("envelope", envelope);
    c.schedule.envelope = parse_envelope(envelope);
    sr.finish();
  }
  if (const json* t = r.child("tolerances")) {
    ObjectReader tr(*t, "system.tolerances");
    if (const json* closed = tr.child("closed")) c.closed = parse_tolerances(*closed, "system.tolerances.closed", c.closed);
    if (const json* open = tr.child("open")) c.open = parse_tolerances(*open, "system.tolerances.open", c.open);
    tr.finish();
  }
  r.finish();
  return c;
}

json system_json(const SystemConfig& c) {
  return {{"detuning", c.detuning},
          {"kappa", c.kappa},
          {"gamma_e", c.gamma_e},
          {"idle", c.idle},
          {"n_max", c.trunc.n_max()},
          {"schedule",
           {{"duration", c.schedule.duration},
            {"laser_peak", c.schedule.laser_peak},
            {"cavity_peak", c.schedule.cavity_peak},
            {"envelope", envelope_name(c.schedule.envelope)}}},
          {"tolerances", {{"closed", tolerances_json(c.closed)}, {"open", tolerances_json(c.open)}}}};
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// ---- output helpers -------------------------------------------------------

double round12(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(format_number(x));
}

// Rounds every floating-point leaf to 12 significant digits so dumps are stable and compact.
void round_numbers(json& j) {
  if (j.is_number_float()) {
    j = round12(j.get<double>());
  } else if (j.is_structured()) {
    for (auto& v : j) round_numbers(v);
  }
}

std::string dump(json j) {
  round_numbers(j);
  return j.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

constexpr const char* kUnitsLine = "# units: rates and energies in g (peak cavity coupling), times in 1/g, hbar = 1";

template <class F>
void parallel_for(std::size_t count, int workers, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  {
    std::vector<std::jthread> pool;
    for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

FockTruncation truncation_for(double alpha, const SystemConfig& system) {
  return FockTruncation(std::max(system.trunc.n_max(), truncation_for_coherent(alpha).n_max()));
}

SystemConfig single_state_system(const RunConfig& config) {
  SystemConfig s = config.system;
  if (config.auto_truncation) s.trunc = truncation_for(config.alpha, s);
  return s;
}

DensityOperator coherent_field(double alpha, FockTruncation trunc) {
  return DensityOperator(coherent_state(alpha, trunc));
}

}  // namespace

// ---- RunConfig ------------------------------------------------------------

void RunConfig::validate() const {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), experiment) == ids.end())
    throw ConfigError("unknown experiment '" + experiment + "'");
  try {
    system.validate();
    wigner.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(system.schedule.duration >= 0.0)) throw ConfigError("system.schedule.duration must be >= 0");
  if (!finite_positive(system.schedule.laser_peak) || !finite_positive(system.schedule.cavity_peak))
    throw ConfigError("system.schedule peaks must be positive");
  if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
  if (n_cut < 1) throw ConfigError("n_cut must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!finite_positive(sweep.t_min)) throw ConfigError("sweep.T_min must be > 0");
  if (!(sweep.t_max > sweep.t_min) || !std::isfinite(sweep.t_max)) throw ConfigError("sweep.T_max must exceed T_min");
  if (sweep.t_grid < 3) throw ConfigError("sweep.T_grid must be >= 3");
  if (!finite_positive(sweep.log_t_tol)) throw ConfigError("sweep.log_T_tol must be > 0");
  if (sweep.alphas.empty() || sweep.kappas.empty()) throw ConfigError("sweep.alphas and sweep.kappas must be non-empty");
  for (double k : sweep.kappas)
    if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("sweep.kappas must be finite and >= 0");
  for (double a : sweep.alphas)
    if (!std::isfinite(a)) throw ConfigError("sweep.alphas must be finite");
  if (joint.alphas.empty() || static_cast<int>(joint.alphas.size()) > kMaxJointModes)
    throw ConfigError("joint.alphas must list between 1 and 3 modes");
  if (joint.n_max < 1) throw ConfigError("joint.n_max must be >= 1");
  if (adiabatic.photon_numbers.empty() || adiabatic.detunings.empty() || adiabatic.durations.empty())
    throw ConfigError("adiabatic lists must be non-empty");
  for (int n : adiabatic.photon_numbers)
    if (n < 1 || n > system.trunc.n_max()) throw ConfigError("adiabatic.n entries must lie in [1, system.n_max]");
  for (double T : adiabatic.durations)
    if (!finite_positive(T)) throw ConfigError("adiabatic.durations must be > 0");
  if (!std::is_sorted(adiabatic.durations.begin(), adiabatic.durations.end()))
    throw ConfigError("adiabatic.durations must be increasing");
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  ObjectReader r(j, "config");
  r.get("experiment", c.experiment);
  if (const json* s = r.child("system")) c.system = parse_system(*s);
  std::string mode = mode_name(c.mode);
  r.get("mode", mode);
  c.mode = parse_mode(mode);
  r.get("alpha", c.alpha);
  r.get("auto_truncation", c.auto_truncation);
  r.get("optimize_duration", c.optimize_duration);
  r.get("n_cut", c.n_cut);
  r.get("workers", c.workers);
  r.get("seed", c.seed);
  if (const json* s = r.child("sweep")) {
    ObjectReader sr(*s, "config.sweep");
    sr.get("alphas", c.sweep.alphas);
    sr.get("kappas", c.sweep.kappas);
    sr.get("T_min", c.sweep.t_min);
    sr.get("T_max", c.sweep.t_max);
    sr.get("T_grid", c.sweep.t_grid);
    sr.get("log_T_tol", c.sweep.log_t_tol);
    sr.finish();
  }
  if (const json* s = r.child("joint")) {
    ObjectReader sr(*s, "config.joint");
    sr.get("alphas", c.joint.alphas);
    sr.get("n_max", c.joint.n_max);
    sr.get("restore", c.joint.restore);
    sr.finish();
  }
  if (const json* s = r.child("adiabatic")) {
    ObjectReader sr(*s, "config.adiabatic");
    sr.get("n", c.adiabatic.photon_numbers);
    sr.get("detunings", c.adiabatic.detunings);
    sr.get("durations", c.adiabatic.durations);
    sr.finish();
  }
  if (const json* s = r.child("wigner")) {
    ObjectReader sr(*s, "config.wigner");
    sr.get("x_min", c.wigner.x_min);
    sr.get("x_max", c.wigner.x_max);
    sr.get("x_points", c.wigner.x_points);
    sr.get("p_min", c.wigner.p_min);
    sr.get("p_max", c.wigner.p_max);
    sr.get("p_points", c.wigner.p_points);
    sr.finish();
  }
  if (const json* s = r.child("output")) {
    ObjectReader sr(*s, "config.output");
    sr.get("dir", c.output.dir);
    sr.get("fig3", c.output.fig3);
    sr.get("fig4_summary", c.output.fig4_summary);
    sr.get("fig4_wigner", c.output.fig4_wigner);
    sr.get("adiabatic", c.output.adiabatic);
    sr.get("result", c.output.result);
    sr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  return {{"experiment", c.experiment},
          {"system", system_json(c.system)},
          {"mode", mode_name(c.mode)},
          {"alpha", c.alpha},
          {"auto_truncation", c.auto_truncation},
          {"optimize_duration", c.optimize_duration},
          {"n_cut", c.n_cut},
          {"workers", c.workers},
          {"seed", c.seed},
          {"sweep",
           {{"alphas", c.sweep.alphas},
            {"kappas", c.sweep.kappas},
            {"T_min", c.sweep.t_min},
            {"T_max", c.sweep.t_max},
            {"T_grid", c.sweep.t_grid},
            {"log_T_tol", c.sweep.log_t_tol}}},
          {"joint", {{"alphas", c.joint.alphas}, {"n_max", c.joint.n_max}, {"restore", c.joint.restore}}},
          {"adiabatic",
           {{"n", c.adiabatic.photon_numbers},
            {"detunings", c.adiabatic.detunings},
            {"durations", c.adiabatic.durations}}},
          {"wigner",
           {{"x_min", c.wigner.x_min},
            {"x_max", c.wigner.x_max},
            {"x_points", c.wigner.x_points},
            {"p_min", c.wigner.p_min},
            {"p_max", c.wigner.p_max},
            {"p_points", c.wigner.p_points}}},
          {"output",
           {{"dir", c.output.dir},
            {"fig3", c.output.fig3},
            {"fig4_summary", c.output.fig4_summary},
            {"fig4_wigner", c.output.fig4_wigner},
            {"adiabatic", c.output.adiabatic},
            {"result", c.output.result}}}};
}

RunConfig fig4_defaults() {
  RunConfig c;
  c.experiment = "wigner-fig4";
  c.system.kappa = 0.005;
  c.system.gamma_e = 0.01;
  c.system.detuning = 0.0;
  c.system.trunc = FockTruncation(12);
  c.alpha = 1.0;
  return c;
}

// ---- projection scoring ---------------------------------------------------

namespace {

// Normalized (I - |0><0|)|alpha>.
PureState stripped_coherent(double alpha, FockTruncation trunc) {
  const PureState input = coherent_state(alpha, trunc);
  Vector stripped = input.amplitudes();
  stripped(0) = 0.0;
  return PureState(input.space(), stripped.normalized());
}

}  // namespace

ProjectionPoint evaluate_projection(double alpha, const SystemConfig& config, Mode mode) {
  const PureState input = coherent_state(alpha, config.trunc);
  const PureState target = stripped_coherent(alpha, config.trunc);
  const ProjectionResult result = project_nonvacuum(DensityOperator(input), config, mode);
  ProjectionPoint out;
  out.duration = config.schedule.duration;
  out.p_success = result.p_success;
  out.p_vacuum_detected = result.measurement.p_vacuum;
  out.p_sink = result.measurement.p_sink;
  if (result.field) {
    out.fidelity = fidelity(*result.field, target);
    out.field = result.field;
  }
  return out;
}

OptimalDuration optimal_T_search(double alpha, double kappa, const SystemConfig& config,
                                 const SweepSettings& settings) {
  SystemConfig base = config;
  base.kappa = kappa;
  auto score = [&](double T) {
    SystemConfig c = base;
    c.schedule = base.schedule.with_duration(T);
    return evaluate_projection(alpha, c).fidelity;
  };

  OptimalDuration out;
  out.grid = numerics::logspace(settings.t_min, settings.t_max, settings.t_grid);
  for (double T : out.grid) out.grid_fidelity.push_back(score(T));
  const auto best = static_cast<std::size_t>(
      std::max_element(out.grid_fidelity.begin(), out.grid_fidelity.end()) - out.grid_fidelity.begin());
  const std::size_t last = out.grid.size() - 1;
  out.at_range_edge = best == 0 || best == last;

  const double lo = std::log(out.grid[best == 0 ? 0 : best - 1]);
  const double hi = std::log(out.grid[std::min(best + 1, last)]);
  const auto refined =
      numerics::golden_section_maximize([&](double u) { return score(std::exp(u)); }, lo, hi, settings.log_t_tol);
  if (refined.value >= out.grid_fidelity[best]) {
    out.duration = std::exp(refined.x);
    out.fidelity = refined.value;
  } else {
    out.duration = out.grid[best];
    out.fidelity = out.grid_fidelity[best];
  }
  return out;
}

// ---- sweep ----------------------------------------------------------------

std::vector<SweepRow> run_sweep_fig3(const RunConfig& config, int workers) {
  const auto& alphas = config.sweep.alphas;
  const auto& kappas = config.sweep.kappas;
  std::vector<SweepRow> rows(alphas.size() * kappas.size());
  parallel_for(rows.size(), workers, [&](std::size_t idx) {
    const double alpha = alphas[idx / kappas.size()];
    const double kappa = kappas[idx % kappas.size()];
    SystemConfig system = config.system;
    system.trunc = truncation_for(alpha, system);
    const OptimalDuration opt = optimal_T_search(alpha, kappa, system, config.sweep);
    system.kappa = kappa;
    system.schedule = system.schedule.with_duration(opt.duration);
    const ProjectionPoint point = evaluate_projection(alpha, system);
    const double p_vacuum = std::exp(-alpha * alpha);
    rows[idx] = {alpha, kappa, opt.duration, point.fidelity, point.p_success, p_vacuum, point.p_sink, opt.at_range_edge};
  });
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kUnitsLine << "; p_vacuum = <0|rho_in|0>\n";
  out << "alpha,kappa,T_opt,fidelity,p_success,p_vacuum,p_sink\n";
  for (const auto& r : rows)
    out << format_number(r.alpha) << ',' << format_number(r.kappa) << ',' << format_number(r.T_opt) << ','
        << format_number(r.fidelity) << ',' << format_number(r.p_success) << ',' << format_number(r.p_vacuum) << ','
        << format_number(r.p_sink) << '\n';
}

// ---- single reference point ------------------------------------------------

Fig4Summary run_wigner_fig4(const RunConfig& config) {
  SystemConfig system = single_state_system(config);
  Fig4Summary s;
  if (config.optimize_duration) {
    const OptimalDuration opt = optimal_T_search(config.alpha, system.kappa, system, config.sweep);
    system.schedule = system.schedule.with_duration(opt.duration);
    s.at_range_edge = opt.at_range_edge;
  }
  const ProjectionPoint point = evaluate_projection(config.alpha, system);
  if (!point.field) throw NumericalError("wigner-fig4: the not-vacuum branch has zero probability");
  s.T_opt = system.schedule.duration;
  s.fidelity = point.fidelity;
  s.p_success = point.p_success;
  s.p_vacuum = std::norm(coherent_state(config.alpha, system.trunc)[0]);
  s.p_vacuum_detected = point.p_vacuum_detected;
  s.p_sink = point.p_sink;
  s.loss_error = 1.0 - s.p_success - s.p_vacuum;
  s.grid = wigner(*point.field, config.wigner);
  s.wigner_integral = integrate(s.grid);
  s.wigner_min = s.grid.W.minCoeff();
  s.negativity_volume = negativity_volume(s.grid);
  check_normalization(s.grid);
  return s;
}

json to_json(const Fig4Summary& s) {
  return {{"T_opt", s.T_opt},
          {"fidelity", s.fidelity},
          {"p_success", s.p_success},
          {"p_vacuum", s.p_vacuum},
          {"p_vacuum_detected", s.p_vacuum_detected},
          {"p_sink", s.p_sink},
          {"loss_error", s.loss_error},
          {"T_opt_at_range_edge", s.at_range_edge},
          {"wigner_integral", s.wigner_integral},
          {"wigner_min", s.wigner_min},
          {"negativity_volume", s.negativity_volume},
          {"wigner_convention", s.grid.convention},
          {"units", "rates in g, times in 1/g"}};
}

// ---- adiabatic study ------------------------------------------------------

std::vector<AdiabaticRow> run_adiabatic_study(const RunConfig& config, int workers) {
  const auto& ns = config.adiabatic.photon_numbers;
  const auto& deltas = config.adiabatic.detunings;
  const auto& Ts = config.adiabatic.durations;
  const std::size_t groups = ns.size() * deltas.size();
  std::vector<AdiabaticRow> rows(groups * Ts.size());
  parallel_for(groups, workers, [&](std::size_t gi) {
    const int n = ns[gi / deltas.size()];
    SystemConfig c = config.system;
    c.detuning = deltas[gi % deltas.size()];
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (c.detuning != 0.0 && Ts.size() >= 3 && Ts.back() >= 10.0 * Ts.front())
      slope = diabatic_scaling_fit(n, Ts, c).slope;
    for (std::size_t ti = 0; ti < Ts.size(); ++ti) {
      SystemConfig ct = c;
      ct.schedule = c.schedule.with_duration(Ts[ti]);
      rows[gi * Ts.size() + ti] = {analyze_adiabatic(n, ct), slope};
    }
  });
  return rows;
}

void write_adiabatic_csv(std::ostream& out, const std::vector<AdiabaticRow>& rows) {
  out << kUnitsLine << "; phases in rad\n";
  out << "n,Delta,T,nu0,p_diabatic,phi_pred,phi_num,kappa_b_end_abs,kappa_e_end_abs,kappa_b_mid_residual,"
         "kappa_e_mid_residual,slope\n";
  for (const auto& row : rows) {
    const AdiabaticReport& r = row.report;
    out << r.n << ',' << format_number(r.detuning) << ',' << format_number(r.duration) << ',' << format_number(r.nu0)
        << ',' << format_number(r.p_diabatic) << ',' << format_number(r.phi_pred) << ',' << format_number(r.phi_num)
        << ',' << format_number(std::abs(r.kappa_b_end)) << ',' << format_number(std::abs(r.kappa_e_end)) << ','
        << format_number(r.kappa_b_mid_residual) << ',' << format_number(r.kappa_e_mid_residual) << ','
        << format_number(row.slope) << '\n';
  }
}

// ---- dispatch -------------------------------------------------------------

std::vector<std::filesystem::path> run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                                                  int workers, std::ostream& log) {
  config.validate();
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = out_dir / name;
    write_file(path, text);
    written.push_back(path);
  };
  const std::string result_name = config.output.result.empty() ? config.experiment + ".json" : config.output.result;
  const std::string& id = config.experiment;

  if (id == "sweep-fig3") {
    const auto rows = run_sweep_fig3(config, workers);
    for (const auto& r : rows)
      if (r.at_range_edge)
        log << "warning: optimal T for alpha=" << format_number(r.alpha) << " kappa=" << format_number(r.kappa)
            << " lies at the edge of the search range\n";
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    emit(config.output.fig3, csv.str());
  } else if (id == "wigner-fig4") {
    const Fig4Summary s = run_wigner_fig4(config);
    if (s.at_range_edge) log << "warning: optimal T lies at the edge of the search range\n";
    emit(config.output.fig4_summary, dump(to_json(s)));
    std::ostringstream csv;
    csv << "# units: x, p dimensionless quadratures; " << kWignerConvention << "\n";
    write_wigner_csv(csv, s.grid);
    emit(config.output.fig4_wigner, csv.str());
  } else if (id == "adiabatic-study") {
    std::ostringstream csv;
    write_adiabatic_csv(csv, run_adiabatic_study(config, workers));
    emit(config.output.adiabatic, csv.str());
  } else if (id == "joint-vacuum") {
    std::vector<SystemConfig> configs;
    std::optional<DensityOperator> fields;
    for (double a : config.joint.alphas) {
      SystemConfig c = config.system;
      c.trunc = FockTruncation(config.joint.n_max);
      configs.push_back(c);
      const DensityOperator mode_state = DensityOperator(coherent_state(a, c.trunc));
      fields = fields ? tensor(*fields, mode_state) : mode_state;
    }
    const JointVacuumRecord record = joint_vacuum_measure(*fields, configs, config.mode, config.joint.restore);
    emit(result_name, dump({{"config", to_json(config)}, {"result", to_json(record)}}));
  } else {
    SystemConfig system = single_state_system(config);
    json result;
    if (id == "project-nonvacuum") {
      if (config.optimize_duration && config.mode == Mode::simulated) {
        const OptimalDuration opt = optimal_T_search(config.alpha, system.kappa, system, config.sweep);
        if (opt.at_range_edge) log << "warning: optimal T lies at the edge of the search range\n";
        system.schedule = system.schedule.with_duration(opt.duration);
      }
      const ProjectionResult full =
          project_nonvacuum(coherent_field(config.alpha, system.trunc), system, config.mode);
      result = to_json(full);
      result["fidelity"] = full.field ? fidelity(*full.field, stripped_coherent(config.alpha, system.trunc)) : 0.0;
      result["duration"] = system.schedule.duration;
    } else {
      const DensityOperator field = coherent_field(config.alpha, system.trunc);
      if (id == "measure") result = to_json(measure_vacuum(field, system, config.mode));
      else if (id == "scissors") result = to_json(scissors_truncate(field, config.n_cut, system, config.mode));
      else result = to_json(number_resolving_measure(field, system, config.mode));
    }
    emit(result_name, dump({{"config", to_json(config)}, {"result", result}}));
  }
  return written;
}

}  // namespace vacprobe
