#include "vacprobe/multimode.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "vacprobe/serialize.hpp"

namespace vacprobe {

namespace {

// Pod levels: g_0 = 0, g_j = j, e = n + 1, s = n + 2.
struct Pod {
  int modes;
  int ground(int j) const { return j; }
  int excited() const { return modes + 1; }
  int sink() const { return modes + 2; }
};

CouplingLegs sweep_legs(const Pod& pod, int j) { return {pod.excited(), pod.ground(j + 1), pod.ground(0), j}; }

SystemConfig sweep_config(const SystemConfig& config, Direction d) {
  SystemConfig c = config;
  c.schedule = config.schedule.with_direction(d);
  return c;
}

/// Weighted ensemble of pure joint states; lossless sweeps act on each member separately.
struct Ensemble {
  std::vector<double> weights;
  std::vector<Vector> members;

  Matrix density() const {
    const Eigen::Index d = members.empty() ? 0 : members.front().size();
    Matrix rho = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < members.size(); ++i) rho += weights[i] * members[i] * members[i].adjoint();
    return rho;
  }
};

Ensemble lift_to_ground(const DensityOperator& fields, const Space& joint) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (fields.matrix() + fields.matrix().adjoint()));
  Ensemble out;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double w = eig.eigenvalues()(k);
    if (w <= 1e-14) continue;
    Vector v = Vector::Zero(joint.dim());
    v.head(joint.field_dim()) = eig.eigenvectors().col(k);
    out.weights.push_back(w);
    out.members.push_back(std::move(v));
  }
  return out;
}

class JointRunner {
 public:
  JointRunner(const Space& joint, std::span<const SystemConfig> configs) : joint_(joint), configs_(configs) {
    pod_.modes = joint.mode_count();
    for (const auto& c : configs) kappas_.push_back(c.kappa);
    lossless_ = true;
    for (const auto& c : configs) lossless_ = lossless_ && c.kappa == 0.0 && c.gamma_e == 0.0;
  }

  bool lossless() const { return lossless_; }

  Generator generator(int j, Direction d) const {
    return make_generator(joint_, sweep_legs(pod_, j), sweep_config(configs_[static_cast<std::size_t>(j)], d), kappas_);
  }

  double duration(int j) const { return configs_[static_cast<std::size_t>(j)].schedule.duration; }
  Tolerances closed(int j) const { return configs_[static_cast<std::size_t>(j)].closed; }
  Tolerances open(int j) const { return configs_[static_cast<std::size_t>(j)].open; }

  void sweep(Ensemble& ens, int j, Direction d) const {
    const Generator gen = generator(j, d);
    for (auto& v : ens.members) {
      const double norm = v.norm();
      if (norm == 0.0) continue;
      const PureState out = evolve_pure(gen, PureState(joint_, v / norm), duration(j), closed(j));
      v = out.amplitudes() * norm;
    }
  }

  void sweep(Matrix& rho, int j, Direction d) const {
    const Generator gen = generator(j, d);
    rho = evolve_density(gen, DensityOperator(joint_, rho), duration(j), open(j)).matrix();
  }

  const Pod& pod() const { return pod_; }

 private:
  Space joint_;
  std::span<const SystemConfig> configs_;
  std::vector<double> kappas_;
  Pod pod_{};
  bool lossless_ = true;
};

// Keeps the field components on atomic levels in [first, last].
void keep_levels(Vector& v, int first, int last, int fdim) {
  const Eigen::Index lo = static_cast<Eigen::Index>(first) * fdim;
  const Eigen::Index hi = static_cast<Eigen::Index>(last + 1) * fdim;
  v.head(lo).setZero();
  v.tail(v.size() - hi).setZero();
}

void keep_levels(Matrix& rho, int first, int last, int fdim) {
  const Eigen::Index lo = static_cast<Eigen::Index>(first) * fdim;
  const Eigen::Index hi = static_cast<Eigen::Index>(last + 1) * fdim;
  const Eigen::Index d = rho.rows();
  Matrix out = Matrix::Zero(d, d);
  out.block(lo, lo, hi - lo, hi - lo) = rho.block(lo, lo, hi - lo, hi - lo);
  rho = std::move(out);
}

// Ideal Kraus action: |g_0> P_all + sum_j |g_{j+1}> (-E-_j) prod_{k<j} P0_k.
Matrix ideal_measurement_map(const Space& joint) {
  const Space field = joint.field_part();
  const int fdim = field.dim();
  Matrix k = Matrix::Zero(joint.dim(), fdim);
  for (int f = 0; f < fdim; ++f) {
    auto photons = field.decompose(f).second;
    int first = -1;
    for (int j = 0; j < static_cast<int>(photons.size()); ++j)
      if (photons[static_cast<std::size_t>(j)] > 0) {
        first = j;
        break;
      }
    if (first < 0) {
      k(joint.index(0, photons), f) = 1.0;
      continue;
    }
    photons[static_cast<std::size_t>(first)] -= 1;
    k(joint.index(first + 1, photons), f) = -1.0;
  }
  return k;
}

}  // namespace

JointVacuumRecord joint_vacuum_measure(const DensityOperator& fields, std::span<const SystemConfig> configs, Mode mode,
                                       bool restore) {
  const Space& fspace = fields.space();
  if (fspace.has_atom()) throw DimensionError("joint_vacuum_measure: expected a field-only state");
  const int n = fspace.mode_count();
  if (n < 1 || n > kMaxJointModes) throw DimensionError("joint_vacuum_measure: between 1 and 3 modes supported");
  if (static_cast<int>(configs.size()) != n) throw DimensionError("joint_vacuum_measure: one config per mode expected");
  fields.validate();
  for (int j = 0; j < n; ++j) {
    configs[static_cast<std::size_t>(j)].validate();
    if (mode == Mode::simulated && !(configs[static_cast<std::size_t>(j)].trunc == fspace.mode(j)))
      throw DimensionError("joint_vacuum_measure: truncation of mode " + std::to_string(j) + " differs from config");
  }

  const Space joint(AtomLevelSet::pod(n), fspace.modes());
  const int fdim = fspace.dim();
  const Pod pod{n};
  JointRunner runner(joint, configs);

  const bool use_ensemble = mode == Mode::simulated && runner.lossless();
  if (mode == Mode::simulated && !use_ensemble && joint.dim() > kJointDensityDimCap)
    throw DimensionError("joint_vacuum_measure: lossy joint space of dimension " + std::to_string(joint.dim()) +
                         " exceeds the cap of " + std::to_string(kJointDensityDimCap));

  Ensemble ens;
  Matrix rho;
  if (mode == Mode::ideal) {
    const Matrix k = ideal_measurement_map(joint);
    rho = k * fields.matrix() * k.adjoint();
  } else if (use_ensemble) {
    ens = lift_to_ground(fields, joint);
    for (int j = 0; j < n; ++j) runner.sweep(ens, j, Direction::measurement);
    rho = ens.density();
  } else {
    rho = Matrix::Zero(joint.dim(), joint.dim());
    rho.topLeftCorner(fdim, fdim) = fields.matrix();
    for (int j = 0; j < n; ++j) runner.sweep(rho, j, Direction::measurement);
  }
  rho = 0.5 * (rho + rho.adjoint());
  const DensityOperator measured(joint, rho);

  JointVacuumRecord out;
  MeasurementRecord& r = out.record;
  const Matrix vac_block = atom_block(measured, pod.ground(0), pod.ground(0));
  Matrix rest_block = Matrix::Zero(fdim, fdim);
  for (int j = 1; j <= n; ++j) rest_block += atom_block(measured, j, j);
  r.p_vacuum = std::max(vac_block.trace().real(), 0.0);
  r.p_not_vacuum = std::max(rest_block.trace().real(), 0.0);
  r.p_sink = std::max(
      atom_block(measured, pod.excited(), pod.excited()).trace().real() + atom_block(measured, pod.sink(), pod.sink()).trace().real(),
      0.0);
  if (r.p_vacuum > 1e-14) r.conditional_field_vacuum = DensityOperator(fspace, vac_block / r.p_vacuum);
  if (r.p_not_vacuum > 1e-14) r.conditional_field_not_vacuum = DensityOperator(fspace, rest_block / r.p_not_vacuum);
  r.atom_disposed = !restore;

  // Ideal complement (I - P_vac) rho (I - P_vac), normalized.
  Matrix complement = fields.matrix();
  complement.row(0).setZero();
  complement.col(0).setZero();
  const double complement_weight = complement.trace().real();

  if (!restore || r.p_not_vacuum <= 1e-14) {
    out.restored_ground_population = r.p_vacuum > 0.0 ? 1.0 : 0.0;
    return out;
  }

  Matrix restored;
  if (mode == Mode::ideal) {
    restored = Matrix::Zero(joint.dim(), joint.dim());
    restored.topLeftCorner(fdim, fdim) = complement / complement_weight;
  } else if (use_ensemble) {
    for (auto& v : ens.members) keep_levels(v, 1, n, fdim);
    for (int j = n - 1; j >= 0; --j) runner.sweep(ens, j, Direction::addition);
    restored = ens.density() / r.p_not_vacuum;
  } else {
    restored = rho;
    keep_levels(restored, 1, n, fdim);
    restored /= r.p_not_vacuum;
    for (int j = n - 1; j >= 0; --j) runner.sweep(restored, j, Direction::addition);
  }
  restored = 0.5 * (restored + restored.adjoint());
  const DensityOperator restored_state(joint, restored);
  out.restored = true;
  out.restored_ground_population = atom_block(restored_state, pod.ground(0), pod.ground(0)).trace().real();

  const DensityOperator field_out = trace_out_atom(restored_state);
  if (complement_weight > 1e-14) {
    const DensityOperator ideal(fspace, complement / complement_weight);
    out.purity_deficit = ideal.purity() - field_out.purity();
    out.fidelity_to_ideal = fidelity(field_out, ideal);
  }
  return out;
}

nlohmann::json to_json(const JointVacuumRecord& record) {
  return {{"measurement", to_json(record.record)},
          {"restored", record.restored},
          {"restored_ground_population", record.restored_ground_population},
          {"purity_deficit", record.purity_deficit},
          {"fidelity_to_ideal", record.fidelity_to_ideal}};
}

}  // namespace vacprobe
