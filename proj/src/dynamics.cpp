#include "vacprobe/dynamics.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "vacprobe/format.hpp"

namespace vacprobe {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix from_triplets(int dim, const std::vector<Triplet>& entries) {
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

int mode_stride(const Space& space, int mode) {
  int stride = 1;
  for (int k = mode + 1; k < space.mode_count(); ++k) stride *= space.mode(k).dim();
  return stride;
}

void require_finite_nonnegative(double x, const char* name) {
  if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument(std::string("SystemConfig: ") + name + " must be finite and >= 0");
}

}  // namespace

void SystemConfig::validate() const {
  if (!std::isfinite(detuning)) throw std::invalid_argument("SystemConfig: detuning must be finite");
  require_finite_nonnegative(kappa, "kappa");
  require_finite_nonnegative(gamma_e, "gamma_e");
  require_finite_nonnegative(idle, "idle");
  require_finite_nonnegative(schedule.duration, "duration");
  require_finite_nonnegative(schedule.laser_peak, "laser_peak");
  require_finite_nonnegative(schedule.cavity_peak, "cavity_peak");
  for (const Tolerances& t : {closed, open})
    if (!(t.rtol > 0.0) || !(t.atol > 0.0)) throw std::invalid_argument("SystemConfig: tolerances must be positive");
}

// ---- Generator ------------------------------------------------------------

Generator::Generator(Space space, SparseMatrix static_part)
    : space_(std::move(space)), static_(std::move(static_part)), decay_(space_.dim(), space_.dim()) {
  if (static_.rows() != space_.dim()) throw DimensionError("Generator: static part has wrong size");
}

void Generator::add_term(std::function<double(double)> coefficient, SparseMatrix op) {
  if (op.rows() != space_.dim()) throw DimensionError("Generator: term has wrong size");
  terms_.push_back({std::move(coefficient), std::move(op)});
}

void Generator::add_collapse(SparseMatrix op) {
  if (op.rows() != space_.dim()) throw DimensionError("Generator: collapse operator has wrong size");
  decay_ = SparseMatrix(decay_ + SparseMatrix(op.adjoint()) * op);
  collapse_.push_back(std::move(op));
}

SparseMatrix Generator::hamiltonian(double t) const {
  SparseMatrix h = static_;
  for (const Term& term : terms_) h += term.coefficient(t) * term.op;
  return h;
}

void Generator::schrodinger_rhs(double t, const Vector& psi, Vector& out) const {
  out.noalias() = static_ * psi;
  for (const Term& term : terms_) {
    const double c = term.coefficient(t);
    if (c != 0.0) out.noalias() += c * (term.op * psi);
  }
  out *= -kI;
}

void Generator::lindblad_rhs(double t, const Matrix& rho, Matrix& out) const {
  // out = A + A^dag with A = -i H rho - ½ K rho + ½ sum L rho L^dag, K = sum L^dag L.
  Matrix a = static_ * rho;
  for (const Term& term : terms_) {
    const double c = term.coefficient(t);
    if (c != 0.0) a.noalias() += c * (term.op * rho);
  }
  a *= -kI;
  if (!collapse_.empty()) {
    a.noalias() -= 0.5 * (decay_ * rho);
    for (const SparseMatrix& l : collapse_) {
      const Matrix lr = l * rho;
      a.noalias() += 0.5 * (lr * l.adjoint());
    }
  }
  out = a + a.adjoint();
}

CouplingLegs lambda_legs() { return {level::e, level::g, level::gp, 0}; }

Generator make_generator(const Space& space, const CouplingLegs& legs, const SystemConfig& config,
                         std::span<const double> mode_kappas) {
  config.validate();
  if (!mode_kappas.empty() && static_cast<int>(mode_kappas.size()) != space.mode_count())
    throw DimensionError("make_generator: one loss rate per mode expected");
  const int dim = space.dim();
  const int fdim = space.field_dim();
  const int sink = space.atom().index("s");
  const int stride = mode_stride(space, legs.mode);

  std::vector<Triplet> detuning, laser, cavity;
  for (int f = 0; f < fdim; ++f) {
    detuning.emplace_back(legs.excited * fdim + f, legs.excited * fdim + f, config.detuning);
    laser.emplace_back(legs.excited * fdim + f, legs.laser_level * fdim + f, 1.0);
    laser.emplace_back(legs.laser_level * fdim + f, legs.excited * fdim + f, 1.0);
    const int n = space.decompose(f).second[legs.mode];
    if (n > 0) {
      // |e, n-1><c, n| sqrt(n) and its conjugate.
      const double amp = std::sqrt(static_cast<double>(n));
      cavity.emplace_back(legs.excited * fdim + f - stride, legs.cavity_level * fdim + f, amp);
      cavity.emplace_back(legs.cavity_level * fdim + f, legs.excited * fdim + f - stride, amp);
    }
  }

  Generator gen(space, from_triplets(dim, detuning));
  const PulseSchedule schedule = config.schedule;
  gen.add_term([schedule](double t) { return schedule.gamma_a(t); }, from_triplets(dim, laser));
  gen.add_term([schedule](double t) { return schedule.gamma_b(t); }, from_triplets(dim, cavity));

  for (int m = 0; m < space.mode_count(); ++m) {
    const double kappa = mode_kappas.empty() ? config.kappa : mode_kappas[static_cast<std::size_t>(m)];
    require_finite_nonnegative(kappa, "kappa");
    if (kappa > 0.0) {
      const double rate = std::sqrt(kappa);
      const int s = mode_stride(space, m);
      std::vector<Triplet> loss;
      for (int i = 0; i < dim; ++i) {
        const int n = space.decompose(i).second[m];
        if (n > 0) loss.emplace_back(i - s, i, rate * std::sqrt(static_cast<double>(n)));
      }
      gen.add_collapse(from_triplets(dim, loss));
    }
  }
  if (config.gamma_e > 0.0) {
    const double rate = std::sqrt(config.gamma_e);
    std::vector<Triplet> decay;
    for (int f = 0; f < fdim; ++f) decay.emplace_back(sink * fdim + f, legs.excited * fdim + f, rate);
    gen.add_collapse(from_triplets(dim, decay));
  }
  return gen;
}

Generator single_mode_generator(const SystemConfig& config) {
  return make_generator(Space::single_mode(config.trunc), lambda_legs(), config);
}

// ---- dense Hamiltonian and spectrum ---------------------------------------

namespace {

// Time-independent pieces: H(t) = detuning + gamma_A(t) laser + gamma_B(t) cavity.
struct HamiltonianParts {
  Matrix detuning, laser, cavity;

  Matrix at(double t, const PulseSchedule& s) const { return detuning + s.gamma_a(t) * laser + s.gamma_b(t) * cavity; }
};

HamiltonianParts hamiltonian_parts(const SystemConfig& config) {
  const Space space = Space::single_mode(config.trunc);
  const AtomLevelSet atom = AtomLevelSet::lambda();
  auto lift = [&](int to, int from) { return embed(atom_transition(atom, to, from), Subsystem::atom(), space); };
  const LinearOperator a = embed(annihilation(config.trunc), Subsystem::mode(0), space);

  const LinearOperator laser = lift(level::e, level::g) + lift(level::g, level::e);
  const LinearOperator cavity_down = lift(level::e, level::gp) * a;
  const LinearOperator cavity = cavity_down + cavity_down.adjoint();
  return {config.detuning * lift(level::e, level::e).matrix(), laser.matrix(), cavity.matrix()};
}

}  // namespace

LinearOperator build_hamiltonian(double t, const SystemConfig& config) {
  return LinearOperator(Space::single_mode(config.trunc), hamiltonian_parts(config).at(t, config.schedule));
}

std::vector<double> triplet_eigenenergies(int n, double t, const SystemConfig& config) {
  if (n < 0) throw std::invalid_argument("triplet_eigenenergies: n must be >= 0");
  if (n == 0) return {0.0};
  const double ga = config.schedule.gamma_a(t);
  const double gb = config.schedule.gamma_b(t);
  const double d = config.detuning;
  const double root = std::sqrt(d * d + 4.0 * ga * ga + 4.0 * n * gb * gb);
  return {0.0, 0.5 * (d + root), 0.5 * (d - root)};
}

// ---- integration ----------------------------------------------------------

namespace {

StepControl control(Tolerances tol) {
  StepControl c;
  c.rtol = tol.rtol;
  c.atol = tol.atol;
  return c;
}

double sink_population(const Space& space, const Vector& psi) {
  const int f = space.field_dim();
  return psi.segment(space.atom().index("s") * f, f).squaredNorm();
}

double sink_population(const Space& space, const Matrix& rho) {
  const int f = space.field_dim();
  const int s = space.atom().index("s") * f;
  return rho.block(s, s, f, f).trace().real();
}

void require_space(const Space& actual, const Space& expected, const char* who) {
  if (!(actual == expected)) throw DimensionError(std::string(who) + ": state does not live on the configured space");
}

}  // namespace

PureState evolve_pure(const Generator& gen, const PureState& psi0, double duration, Tolerances tol) {
  require_space(psi0.space(), gen.space(), "evolve_pure");
  Vector psi = psi0.amplitudes();
  integrate_dopri5([&](double t, const Vector& y, Vector& dy) { gen.schrodinger_rhs(t, y, dy); }, psi, 0.0,
                   duration, control(tol));
  return PureState(gen.space(), std::move(psi));
}

DensityOperator evolve_density(const Generator& gen, const DensityOperator& rho0, double duration, Tolerances tol) {
  require_space(rho0.space(), gen.space(), "evolve_density");
  Matrix rho = rho0.matrix();
  integrate_dopri5([&](double t, const Matrix& y, Matrix& dy) { gen.lindblad_rhs(t, y, dy); }, rho, 0.0, duration,
                   control(tol));
  return DensityOperator(gen.space(), 0.5 * (rho + rho.adjoint()));
}

EvolveResult<PureState> evolve_schrodinger(const PureState& psi0, const SystemConfig& config, bool record_series) {
  if (config.kappa != 0.0 || config.gamma_e != 0.0)
    throw std::invalid_argument("evolve_schrodinger: closed evolution requires kappa = gamma_e = 0");
  if (!psi0.is_normalized()) throw StateError("evolve_schrodinger: initial state is not normalized");
  const Generator gen = single_mode_generator(config);
  require_space(psi0.space(), gen.space(), "evolve_schrodinger");

  std::vector<SeriesPoint> series;
  Vector psi = psi0.amplitudes();
  const auto stats = integrate_dopri5(
      [&](double t, const Vector& y, Vector& dy) { gen.schrodinger_rhs(t, y, dy); }, psi, 0.0,
      config.schedule.duration, control(config.closed), [&](double t, const Vector& y) {
        if (record_series) series.push_back(diagnostics(t, PureState(gen.space(), y), config));
      });
  const double sink = sink_population(gen.space(), psi);
  return {PureState(gen.space(), std::move(psi)), sink, std::move(series), stats};
}

EvolveResult<DensityOperator> evolve_lindblad(const DensityOperator& rho0, const SystemConfig& config,
                                              bool record_series) {
  rho0.validate();
  const Generator gen = single_mode_generator(config);
  require_space(rho0.space(), gen.space(), "evolve_lindblad");

  std::vector<SeriesPoint> series;
  Matrix rho = rho0.matrix();
  const auto stats = integrate_dopri5(
      [&](double t, const Matrix& y, Matrix& dy) { gen.lindblad_rhs(t, y, dy); }, rho, 0.0,
      config.schedule.duration, control(config.open), [&](double t, const Matrix& y) {
        if (record_series) series.push_back(diagnostics(t, DensityOperator(gen.space(), y), config));
      });
  const double sink = sink_population(gen.space(), rho);
  return {DensityOperator(gen.space(), 0.5 * (rho + rho.adjoint())), sink, std::move(series), stats};
}

// ---- reference propagator -------------------------------------------------

namespace {

constexpr int kOracleDimCap = 64;

// sum_k (h G)^k x / k!, truncated once a term drops below machine precision.
template <class State, class Apply>
State exp_action(Apply&& apply, const State& x, double h) {
  State sum = x;
  State term = x;
  const double scale = std::max(x.norm(), 1e-300);
  for (int k = 1; k <= 60; ++k) {
    term = (h / k) * apply(term);
    sum += term;
    if (term.norm() <= 1e-17 * scale) return sum;
  }
  throw ToleranceError("oracle_evolve: exponential series did not converge; reduce dt");
}

struct DenseCollapse {
  std::vector<Matrix> ops;
  Matrix decay;
};

DenseCollapse dense_collapse(const SystemConfig& config) {
  const Space space = Space::single_mode(config.trunc);
  const AtomLevelSet atom = AtomLevelSet::lambda();
  DenseCollapse c{{}, Matrix::Zero(space.dim(), space.dim())};
  if (config.kappa > 0.0)
    c.ops.push_back(std::sqrt(config.kappa) * embed(annihilation(config.trunc), Subsystem::mode(0), space).matrix());
  if (config.gamma_e > 0.0)
    c.ops.push_back(std::sqrt(config.gamma_e) *
                    embed(atom_transition(atom, level::s, level::e), Subsystem::atom(), space).matrix());
  for (const Matrix& l : c.ops) c.decay += l.adjoint() * l;
  return c;
}

template <class Step>
void fixed_steps(double duration, double dt, Step&& step) {
  if (!(dt > 0.0)) throw std::invalid_argument("oracle_evolve: dt must be positive");
  const long n = static_cast<long>(std::ceil(duration / dt - 1e-9));
  for (long k = 0; k < n; ++k) {
    const double t = k * dt;
    step(t, std::min(dt, duration - t));
  }
}

void check_oracle_dim(const Space& space) {
  if (space.dim() > kOracleDimCap) throw DimensionError("oracle_evolve: dimension cap exceeded");
}

}  // namespace

PureState oracle_evolve(const PureState& psi0, const SystemConfig& config, double dt) {
  const Space space = Space::single_mode(config.trunc);
  require_space(psi0.space(), space, "oracle_evolve");
  check_oracle_dim(space);
  if (config.kappa != 0.0 || config.gamma_e != 0.0)
    throw std::invalid_argument("oracle_evolve: pure-state stepping requires kappa = gamma_e = 0");
  const HamiltonianParts parts = hamiltonian_parts(config);
  Vector psi = psi0.amplitudes();
  fixed_steps(config.schedule.duration, dt, [&](double t, double h) {
    const Matrix gen = -kI * parts.at(t, config.schedule);
    psi = exp_action([&](const Vector& x) { return Vector(gen * x); }, psi, h);
  });
  return PureState(space, std::move(psi));
}

DensityOperator oracle_evolve(const DensityOperator& rho0, const SystemConfig& config, double dt) {
  const Space space = Space::single_mode(config.trunc);
  require_space(rho0.space(), space, "oracle_evolve");
  check_oracle_dim(space);
  const DenseCollapse collapse = dense_collapse(config);
  const HamiltonianParts parts = hamiltonian_parts(config);
  Matrix rho = rho0.matrix();
  fixed_steps(config.schedule.duration, dt, [&](double t, double h) {
    // -i (H_eff x - x H_eff^dag) + sum L x L^dag with H_eff = H - (i/2) sum L^dag L
    const Matrix gen = -kI * parts.at(t, config.schedule) - 0.5 * collapse.decay;
    auto liouvillian = [&](const Matrix& x) {
      Matrix gx = gen * x;
      Matrix out = gx + gx.adjoint();
      for (const Matrix& l : collapse.ops) out.noalias() += l * x * l.adjoint();
      return out;
    };
    rho = exp_action(liouvillian, rho, h);
  });
  return DensityOperator(space, 0.5 * (rho + rho.adjoint()));
}

// ---- diagnostics ----------------------------------------------------------

SeriesPoint diagnostics(double t, const DensityOperator& rho, const SystemConfig& config) {
  const Space& space = rho.space();
  require_space(space, Space::single_mode(config.trunc), "diagnostics");
  const int nmax = config.trunc.n_max();
  SeriesPoint p{t, 0.0, 0.0, 0.0, 0.0, rho.trace()};
  p.p_dark = rho(space.index(level::gp, 0), space.index(level::gp, 0)).real();
  for (int n = 1; n <= nmax; ++n) {
    const double th = theta(t, n, config.schedule);
    const double s = std::sin(th), c = std::cos(th);
    const int i = space.index(level::g, n - 1);
    const int j = space.index(level::gp, n);
    const double rii = rho(i, i).real(), rjj = rho(j, j).real(), rij = rho(i, j).real();
    p.p_dark += s * s * rii + c * c * rjj - 2.0 * s * c * rij;
    p.p_bright += c * c * rii + s * s * rjj + 2.0 * s * c * rij;
  }
  const auto pops = atom_populations(rho);
  p.p_excited = pops[level::e];
  p.p_sink = pops[level::s];
  return p;
}

SeriesPoint diagnostics(double t, const PureState& psi, const SystemConfig& config) {
  return diagnostics(t, DensityOperator(psi), config);
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series) {
  out << "t,P_dark,P_bright,P_e,P_sink,trace\n";
  for (const SeriesPoint& p : series)
    out << format_number(p.t) << ',' << format_number(p.p_dark) << ',' << format_number(p.p_bright) << ','
        << format_number(p.p_excited) << ',' << format_number(p.p_sink) << ',' << format_number(p.trace) << '\n';
}

}  // namespace vacprobe
