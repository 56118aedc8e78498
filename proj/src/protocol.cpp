#include "vacprobe/protocol.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "vacprobe/format.hpp"
#include "vacprobe/serialize.hpp"

namespace vacprobe {

namespace {

// Branches below this weight carry no usable conditional state.
constexpr double kBranchFloor = 1e-14;

void require_field(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  const Space& space = field.space();
  if (space.has_atom() || space.mode_count() != 1) throw DimensionError("protocol: expected a single-mode field state");
  if (mode == Mode::simulated && !(space.mode(0) == config.trunc))
    throw DimensionError("protocol: field truncation differs from the configured one");
  field.validate();
}

// Integration error leaves slightly negative eigenvalues in small blocks; clip them before normalizing.
std::optional<DensityOperator> branch(const Space& space, const Matrix& block, double p) {
  if (p <= kBranchFloor) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (block + block.adjoint()));
  const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  const Matrix clipped = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
  return DensityOperator(space, clipped / w.sum());
}

SystemConfig with_direction(const SystemConfig& config, Direction d) {
  SystemConfig c = config;
  c.schedule = config.schedule.with_direction(d);
  return c;
}

MeasurementRecord measure_ideal(const DensityOperator& field) {
  const FockTruncation trunc = field.space().mode(0);
  const Space& space = field.space();
  MeasurementRecord r;
  r.p_vacuum = std::max(field(0, 0).real(), 0.0);
  const DensityOperator lowered = bare_lower(trunc).conjugate(field);
  r.p_not_vacuum = std::max(lowered.trace(), 0.0);
  r.p_sink = 0.0;
  if (r.p_vacuum > kBranchFloor) r.conditional_field_vacuum = DensityOperator(fock_state(0, trunc));
  r.conditional_field_not_vacuum = branch(space, lowered.matrix(), r.p_not_vacuum);
  return r;
}

MeasurementRecord measure_simulated(const DensityOperator& field, const SystemConfig& config) {
  const Space atom = Space::atom_only(AtomLevelSet::lambda());
  const DensityOperator start = tensor(DensityOperator(PureState::basis(atom, level::gp)), field);
  const auto result = evolve_lindblad(start, with_direction(config, Direction::measurement));
  const DensityOperator& rho = result.state;
  const Space fspace = field.space();

  MeasurementRecord r;
  const Matrix g_block = atom_block(rho, level::g, level::g);
  const Matrix gp_block = atom_block(rho, level::gp, level::gp);
  r.p_not_vacuum = std::max(g_block.trace().real(), 0.0);
  r.p_vacuum = std::max(gp_block.trace().real(), 0.0);
  r.p_sink = std::max(atom_block(rho, level::e, level::e).trace().real() + result.sink_population, 0.0);
  r.conditional_field_vacuum = branch(fspace, gp_block, r.p_vacuum);
  r.conditional_field_not_vacuum = branch(fspace, g_block, r.p_not_vacuum);
  return r;
}

}  // namespace

MeasurementRecord measure_vacuum(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  require_field(field, config, mode);
  return mode == Mode::ideal ? measure_ideal(field) : measure_simulated(field, config);
}

AddPhotonResult add_photon(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  require_field(field, config, mode);
  const FockTruncation trunc = field.space().mode(0);
  const double top = field(trunc.n_max(), trunc.n_max()).real();
  if (top > 1e-8) throw TruncationError("add_photon: population of |n_max> is " + format_number(top));

  if (mode == Mode::ideal) {
    const DensityOperator raised = bare_raise(trunc).conjugate(field);
    return {raised.normalized(), 1.0};
  }
  const Space atom = Space::atom_only(AtomLevelSet::lambda());
  const DensityOperator start = tensor(DensityOperator(PureState::basis(atom, level::g)), field);
  const auto result = evolve_lindblad(start, with_direction(config, Direction::addition));
  const double transfer = atom_block(result.state, level::gp, level::gp).trace().real();
  return {trace_out_atom(result.state), transfer};
}

ProjectionResult project_nonvacuum(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  ProjectionResult out;
  out.measurement = measure_vacuum(field, config, mode);
  out.p_success = out.measurement.p_not_vacuum;
  if (!out.measurement.conditional_field_not_vacuum) return out;
  DensityOperator lowered = *out.measurement.conditional_field_not_vacuum;
  if (mode == Mode::simulated && config.idle > 0.0 && config.kappa > 0.0)
    lowered = cavity_decay(lowered, config.kappa, config.idle, config.open);
  AddPhotonResult added = add_photon(lowered, config, mode);
  out.p_transfer = added.p_transfer;
  out.field = std::move(added.field);
  return out;
}

ConditionalField bare_lower_protocol(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  MeasurementRecord r = measure_vacuum(field, config, mode);
  return {r.p_not_vacuum, std::move(r.conditional_field_not_vacuum)};
}

ScissorsRecord scissors_truncate(const DensityOperator& field, int n_cut, const SystemConfig& config, Mode mode) {
  if (n_cut < 1) throw std::invalid_argument("scissors_truncate: n_cut must be >= 1");
  ScissorsRecord out;
  out.n_cut = n_cut;
  out.p_success = 1.0;
  DensityOperator current = field;
  for (int round = 0; round < n_cut; ++round) {
    out.rounds.push_back(measure_vacuum(current, config, mode));
    const MeasurementRecord& r = out.rounds.back();
    out.p_success *= r.p_not_vacuum;
    if (!r.conditional_field_not_vacuum) {
      out.p_success = 0.0;
      return out;
    }
    current = *r.conditional_field_not_vacuum;
  }
  for (int round = 0; round < n_cut; ++round) current = add_photon(current, config, mode).field;
  out.output_field = std::move(current);
  return out;
}

CountDistribution number_resolving_measure(const DensityOperator& field, const SystemConfig& config, Mode mode) {
  require_field(field, config, mode);
  const int cap = field.space().mode(0).n_max() + 1;
  CountDistribution out;
  out.probabilities.assign(static_cast<std::size_t>(cap), 0.0);
  DensityOperator current = field;
  double weight = 1.0;
  for (int k = 0; k < cap; ++k) {
    const MeasurementRecord r = measure_vacuum(current, config, mode);
    ++out.rounds;
    out.probabilities[static_cast<std::size_t>(k)] = weight * r.p_vacuum;
    out.p_lost += weight * r.p_sink;
    weight *= r.p_not_vacuum;
    if (!r.conditional_field_not_vacuum || weight <= kBranchFloor) return out;
    current = *r.conditional_field_not_vacuum;
  }
  if (weight > 1e-8)
    throw std::runtime_error("number_resolving_measure: round cap exceeded with weight " + format_number(weight));
  return out;
}

PureState ideal_measurement_output(const PureState& field) {
  const Space& fspace = field.space();
  if (fspace.has_atom() || fspace.mode_count() != 1) throw DimensionError("ideal_measurement_output: expected a field");
  const FockTruncation trunc = fspace.mode(0);
  const Space space = Space::single_mode(trunc);
  Vector v = Vector::Zero(space.dim());
  v(space.index(level::gp, 0)) = field[0];
  for (int n = 1; n <= trunc.n_max(); ++n) v(space.index(level::g, n - 1)) = -field[n];
  return PureState(space, std::move(v));
}

namespace {

LinearOperator ground_rotation(const Space& space, double angle, double phase) {
  const AtomLevelSet& atom = space.atom();
  Matrix u = Matrix::Identity(atom.size(), atom.size());
  const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
  const int g = atom.index("g"), gp = atom.index("g'");
  u(g, g) = c;
  u(gp, g) = std::polar(s, phase);
  u(g, gp) = -std::polar(s, -phase);
  u(gp, gp) = c;
  return embed(LinearOperator(Space::atom_only(atom), std::move(u)), Subsystem::atom(), space);
}

}  // namespace

PureState rotate_ground(const PureState& state, double angle, double phase) {
  return ground_rotation(state.space(), angle, phase).apply(state);
}

DensityOperator rotate_ground(const DensityOperator& state, double angle, double phase) {
  return ground_rotation(state.space(), angle, phase).conjugate(state);
}

DensityOperator cavity_decay(const DensityOperator& field, double kappa, double duration, Tolerances tol) {
  const Space& space = field.space();
  if (space.has_atom() || space.mode_count() != 1) throw DimensionError("cavity_decay: expected a field");
  if (kappa < 0.0) throw std::invalid_argument("cavity_decay: negative rate");
  Generator gen(space, SparseMatrix(space.dim(), space.dim()));
  gen.add_collapse(std::sqrt(kappa) * annihilation(space.mode(0)).matrix().sparseView());
  return evolve_density(gen, field, duration, tol);
}

// ---- serialization --------------------------------------------------------

nlohmann::json to_json(const MeasurementRecord& record) {
  nlohmann::json j{{"p_vacuum", record.p_vacuum},
                   {"p_not_vacuum", record.p_not_vacuum},
                   {"p_sink", record.p_sink},
                   {"atom_disposed", record.atom_disposed}};
  j["conditional_field_vacuum"] =
      record.conditional_field_vacuum ? to_json(*record.conditional_field_vacuum) : nlohmann::json(nullptr);
  j["conditional_field_not_vacuum"] =
      record.conditional_field_not_vacuum ? to_json(*record.conditional_field_not_vacuum) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ProjectionResult& result) {
  return {{"p_success", result.p_success},
          {"p_transfer", result.p_transfer},
          {"measurement", to_json(result.measurement)},
          {"field", result.field ? to_json(*result.field) : nlohmann::json(nullptr)}};
}

nlohmann::json to_json(const ScissorsRecord& record) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : record.rounds) rounds.push_back(to_json(r));
  return {{"n_cut", record.n_cut},
          {"p_success", record.p_success},
          {"output_field", record.output_field ? to_json(*record.output_field) : nlohmann::json(nullptr)},
          {"rounds", rounds}};
}

nlohmann::json to_json(const CountDistribution& counts) {
  return {{"probabilities", counts.probabilities}, {"p_lost", counts.p_lost}, {"rounds", counts.rounds}};
}

}  // namespace vacprobe
