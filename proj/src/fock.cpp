#include "vacprobe/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "vacprobe/format.hpp"

namespace vacprobe {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void require_same_space(const Space& a, const Space& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": operands live on different spaces");
}

}  // namespace

// ---- FockTruncation -------------------------------------------------------

FockTruncation::FockTruncation(int n_max) : n_max_(n_max) {
  if (n_max < 1) throw std::invalid_argument("FockTruncation: n_max must be >= 1");
}

double coherent_tail(cplx alpha, int n_max) {
  const double x = std::norm(alpha);
  if (x == 0.0) return 0.0;
  const double log_x = std::log(x);
  double tail = 0.0;
  for (int n = n_max + 1;; ++n) {
    const double term = std::exp(-x + n * log_x - std::lgamma(n + 1.0));
    tail += term;
    // Terms decrease geometrically once n exceeds |alpha|^2.
    if (n > x && term < 1e-300 + tail * 1e-17) break;
    if (n > n_max + 100000) break;
  }
  return tail;
}

FockTruncation truncation_for_coherent(cplx alpha, double tail_tol) {
  int n = 1;
  while (coherent_tail(alpha, n) >= tail_tol) ++n;
  return FockTruncation(n);
}

// ---- AtomLevelSet ---------------------------------------------------------

AtomLevelSet::AtomLevelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("AtomLevelSet: no levels");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw std::invalid_argument("AtomLevelSet: duplicate label");
}

AtomLevelSet AtomLevelSet::lambda() { return AtomLevelSet({"g", "g'", "e", "s"}); }

AtomLevelSet AtomLevelSet::pod(int modes) {
  if (modes < 1) throw std::invalid_argument("AtomLevelSet::pod: need at least one mode");
  std::vector<std::string> labels;
  for (int j = 0; j <= modes; ++j) labels.push_back("g_" + std::to_string(j));
  labels.push_back("e");
  labels.push_back("s");
  return AtomLevelSet(std::move(labels));
}

int AtomLevelSet::index(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw std::out_of_range("AtomLevelSet: unknown level " + std::string(label));
  return static_cast<int>(it - labels_.begin());
}

// ---- Space ----------------------------------------------------------------

Space::Space(std::optional<AtomLevelSet> atom, std::vector<FockTruncation> modes)
    : atom_(std::move(atom)), modes_(std::move(modes)), field_dim_(1) {
  for (const auto& m : modes_) field_dim_ *= m.dim();
  if (!atom_ && modes_.empty()) throw std::invalid_argument("Space: empty");
}

Space Space::field(FockTruncation trunc) { return Space(std::nullopt, {trunc}); }
Space Space::atom_only(AtomLevelSet atom) { return Space(std::move(atom), {}); }
Space Space::single_mode(FockTruncation trunc) { return Space(AtomLevelSet::lambda(), {trunc}); }

const AtomLevelSet& Space::atom() const {
  if (!atom_) throw DimensionError("Space: no atom factor");
  return *atom_;
}

Space Space::field_part() const { return Space(std::nullopt, modes_); }

int Space::factor_dim(Subsystem which) const {
  if (which.is_atom()) return atom().size();
  if (which.index >= mode_count()) throw DimensionError("Space: no such mode");
  return mode(which.index).dim();
}

int Space::index(int atom_level, std::span<const int> photons) const {
  if (static_cast<int>(photons.size()) != mode_count())
    throw DimensionError("Space::index: wrong number of photon indices");
  if (atom_level < 0 || atom_level >= atom_dim()) throw std::out_of_range("Space::index: atom level");
  int flat = atom_level;
  for (int j = 0; j < mode_count(); ++j) {
    if (photons[j] < 0 || photons[j] > modes_[j].n_max()) throw std::out_of_range("Space::index: photon number");
    flat = flat * modes_[j].dim() + photons[j];
  }
  return flat;
}

int Space::index(int atom_level, int photons) const {
  const int p[1] = {photons};
  return index(atom_level, std::span<const int>(p, 1));
}

std::pair<int, std::vector<int>> Space::decompose(int flat) const {
  std::vector<int> photons(modes_.size());
  for (int j = mode_count() - 1; j >= 0; --j) {
    photons[j] = flat % modes_[j].dim();
    flat /= modes_[j].dim();
  }
  return {flat, photons};
}

std::string Space::label(int flat) const {
  auto [a, photons] = decompose(flat);
  std::string out;
  if (atom_) out = atom_->label(a);
  for (int n : photons) {
    if (!out.empty()) out += ',';
    out += std::to_string(n);
  }
  return out;
}

std::vector<std::string> Space::labels() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(dim()));
  for (int i = 0; i < dim(); ++i) out.push_back(label(i));
  return out;
}

// ---- PureState ------------------------------------------------------------

PureState::PureState(Space space, Vector amplitudes) : space_(std::move(space)), amp_(std::move(amplitudes)) {
  if (amp_.size() != space_.dim()) throw DimensionError("PureState: amplitude count does not match space");
}

PureState PureState::normalized() const {
  const double n = amp_.norm();
  if (n == 0.0) throw StateError("PureState: cannot normalize the zero vector");
  return PureState(space_, amp_ / n);
}

bool PureState::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

PureState PureState::basis(Space space, int flat_index) {
  Vector v = Vector::Zero(space.dim());
  v(flat_index) = 1.0;
  return PureState(std::move(space), std::move(v));
}

// ---- DensityOperator ------------------------------------------------------

DensityOperator::DensityOperator(Space space, Matrix matrix) : space_(std::move(space)), rho_(std::move(matrix)) {
  if (rho_.rows() != space_.dim() || rho_.cols() != space_.dim())
    throw DimensionError("DensityOperator: matrix size does not match space");
}

DensityOperator::DensityOperator(const PureState& psi)
    : space_(psi.space()), rho_(psi.amplitudes() * psi.amplitudes().adjoint()) {}

double DensityOperator::purity() const { return (rho_ * rho_).trace().real(); }

DensityOperator DensityOperator::normalized() const {
  const double tr = trace();
  if (tr <= 0.0) throw StateError("DensityOperator: non-positive trace");
  return DensityOperator(space_, rho_ / tr);
}

void DensityOperator::validate() const {
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw StateError("DensityOperator: not Hermitian");
  if (std::abs(trace() - 1.0) > 1e-8) throw StateError("DensityOperator: trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) throw StateError("DensityOperator: negative eigenvalue");
}

// ---- LinearOperator -------------------------------------------------------

LinearOperator::LinearOperator(Space space, Matrix matrix) : space_(std::move(space)), m_(std::move(matrix)) {
  if (m_.rows() != space_.dim() || m_.cols() != space_.dim())
    throw DimensionError("LinearOperator: matrix size does not match space");
}

PureState LinearOperator::apply(const PureState& psi) const {
  require_same_space(space_, psi.space(), "LinearOperator::apply");
  return PureState(space_, m_ * psi.amplitudes());
}

DensityOperator LinearOperator::conjugate(const DensityOperator& rho) const {
  require_same_space(space_, rho.space(), "LinearOperator::conjugate");
  return DensityOperator(space_, m_ * rho.matrix() * m_.adjoint());
}

LinearOperator LinearOperator::adjoint() const { return LinearOperator(space_, m_.adjoint()); }

LinearOperator LinearOperator::operator*(const LinearOperator& rhs) const {
  require_same_space(space_, rhs.space_, "LinearOperator::operator*");
  return LinearOperator(space_, m_ * rhs.m_);
}

LinearOperator LinearOperator::operator+(const LinearOperator& rhs) const {
  require_same_space(space_, rhs.space_, "LinearOperator::operator+");
  return LinearOperator(space_, m_ + rhs.m_);
}

LinearOperator LinearOperator::operator-(const LinearOperator& rhs) const {
  require_same_space(space_, rhs.space_, "LinearOperator::operator-");
  return LinearOperator(space_, m_ - rhs.m_);
}

// ---- constructors ---------------------------------------------------------

PureState fock_state(int n, FockTruncation trunc) {
  if (n < 0 || n > trunc.n_max()) throw TruncationError("fock_state: n outside truncation");
  return PureState::basis(Space::field(trunc), n);
}

PureState coherent_state(cplx alpha, FockTruncation trunc) {
  const double tail = coherent_tail(alpha, trunc.n_max());
  if (tail >= 1e-8)
    throw TruncationError("coherent_state: discarded probability " + format_number(tail) + " exceeds 1e-8");
  Vector c(trunc.dim());
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n <= trunc.n_max(); ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return PureState(Space::field(trunc), c / c.norm());
}

PureState atom_field_state(int level, const PureState& field) {
  if (field.space().has_atom()) throw DimensionError("atom_field_state: field already carries an atom");
  const Space atom = Space::atom_only(AtomLevelSet::lambda());
  return tensor(PureState::basis(atom, level), field);
}

LinearOperator identity(const Space& space) { return LinearOperator(space, Matrix::Identity(space.dim(), space.dim())); }

LinearOperator annihilation(FockTruncation trunc) {
  Matrix a = Matrix::Zero(trunc.dim(), trunc.dim());
  for (int n = 1; n <= trunc.n_max(); ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return LinearOperator(Space::field(trunc), std::move(a));
}

LinearOperator creation(FockTruncation trunc) { return annihilation(trunc).adjoint(); }

LinearOperator number_operator(FockTruncation trunc) {
  Matrix n = Matrix::Zero(trunc.dim(), trunc.dim());
  for (int k = 0; k <= trunc.n_max(); ++k) n(k, k) = static_cast<double>(k);
  return LinearOperator(Space::field(trunc), std::move(n));
}

LinearOperator bare_raise(FockTruncation trunc) {
  Matrix e = Matrix::Zero(trunc.dim(), trunc.dim());
  for (int n = 0; n < trunc.n_max(); ++n) e(n + 1, n) = 1.0;
  return LinearOperator(Space::field(trunc), std::move(e));
}

LinearOperator bare_lower(FockTruncation trunc) { return bare_raise(trunc).adjoint(); }

std::pair<LinearOperator, LinearOperator> vacuum_projectors(FockTruncation trunc) {
  Matrix p0 = Matrix::Zero(trunc.dim(), trunc.dim());
  p0(0, 0) = 1.0;
  Matrix rest = Matrix::Identity(trunc.dim(), trunc.dim()) - p0;
  const Space space = Space::field(trunc);
  return {LinearOperator(space, std::move(p0)), LinearOperator(space, std::move(rest))};
}

LinearOperator atom_transition(const AtomLevelSet& atom, int to, int from) {
  Matrix m = Matrix::Zero(atom.size(), atom.size());
  m(to, from) = 1.0;
  return LinearOperator(Space::atom_only(atom), std::move(m));
}

// ---- tensor structure -----------------------------------------------------

LinearOperator embed(const LinearOperator& op, Subsystem where, const Space& space) {
  const Space factor = where.is_atom() ? Space::atom_only(space.atom()) : Space::field(space.mode(where.index));
  if (!(op.space() == factor)) throw DimensionError("embed: operator does not act on the requested factor");
  int left = 1;
  int right = space.field_dim();
  if (!where.is_atom()) {
    left = space.atom_dim();
    for (int k = 0; k < where.index; ++k) left *= space.mode(k).dim();
    right = 1;
    for (int k = where.index + 1; k < space.mode_count(); ++k) right *= space.mode(k).dim();
  }
  Matrix out = kron(kron(Matrix::Identity(left, left), op.matrix()), Matrix::Identity(right, right));
  return LinearOperator(space, std::move(out));
}

namespace {

Space tensor_space(const Space& lhs, const Space& rhs) {
  if (rhs.has_atom()) throw DimensionError("tensor: right factor may not carry an atom");
  std::vector<FockTruncation> modes = lhs.modes();
  modes.insert(modes.end(), rhs.modes().begin(), rhs.modes().end());
  return Space(lhs.has_atom() ? std::optional<AtomLevelSet>(lhs.atom()) : std::nullopt, std::move(modes));
}

}  // namespace

PureState tensor(const PureState& lhs, const PureState& rhs) {
  Space space = tensor_space(lhs.space(), rhs.space());
  Vector v(space.dim());
  const auto nr = rhs.amplitudes().size();
  for (Eigen::Index i = 0; i < lhs.amplitudes().size(); ++i) v.segment(i * nr, nr) = lhs[i] * rhs.amplitudes();
  return PureState(std::move(space), std::move(v));
}

DensityOperator tensor(const DensityOperator& lhs, const DensityOperator& rhs) {
  Space space = tensor_space(lhs.space(), rhs.space());
  return DensityOperator(std::move(space), kron(lhs.matrix(), rhs.matrix()));
}

Matrix atom_block(const DensityOperator& rho, int i, int j) {
  const int f = rho.space().field_dim();
  return rho.matrix().block(i * f, j * f, f, f);
}

DensityOperator trace_out_atom(const DensityOperator& rho) {
  const Space field = rho.space().field_part();
  Matrix out = Matrix::Zero(field.dim(), field.dim());
  for (int a = 0; a < rho.space().atom_dim(); ++a) out += atom_block(rho, a, a);
  return DensityOperator(field, std::move(out));
}

DensityOperator reduce_to_mode(const DensityOperator& rho, int j) {
  const Space& space = rho.space();
  if (j < 0 || j >= space.mode_count()) throw DimensionError("reduce_to_mode: no such mode");
  const FockTruncation trunc = space.mode(j);
  if (!space.has_atom() && space.mode_count() == 1) return rho;
  // Strides: index = outer * (d_j * inner) + n_j * inner + rest.
  int inner = 1;
  for (int k = j + 1; k < space.mode_count(); ++k) inner *= space.mode(k).dim();
  const int outer = space.dim() / (inner * trunc.dim());
  Matrix out = Matrix::Zero(trunc.dim(), trunc.dim());
  for (int o = 0; o < outer; ++o)
    for (int r = 0; r < inner; ++r)
      for (int n = 0; n < trunc.dim(); ++n)
        for (int m = 0; m < trunc.dim(); ++m) {
          const int row = (o * trunc.dim() + n) * inner + r;
          const int col = (o * trunc.dim() + m) * inner + r;
          out(n, m) += rho(row, col);
        }
  return DensityOperator(Space::field(trunc), std::move(out));
}

std::vector<double> atom_populations(const DensityOperator& rho) {
  std::vector<double> pops;
  for (int a = 0; a < rho.space().atom_dim(); ++a) pops.push_back(atom_block(rho, a, a).trace().real());
  return pops;
}

// ---- diagnostics ----------------------------------------------------------

namespace {

PhotonStatistics moments(std::vector<double> dist) {
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-8) throw StateError("photon_statistics: input is not normalized");
  PhotonStatistics s;
  double m2 = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    s.mean += static_cast<double>(k) * dist[k];
    m2 += static_cast<double>(k * k) * dist[k];
  }
  s.variance = m2 - s.mean * s.mean;
  s.mandel_q = s.mean > 0.0 ? s.variance / s.mean - 1.0 : std::numeric_limits<double>::quiet_NaN();
  s.distribution = std::move(dist);
  return s;
}

}  // namespace

PhotonStatistics photon_statistics(const PureState& psi, int mode) {
  const Space& space = psi.space();
  if (mode < 0 || mode >= space.mode_count()) throw DimensionError("photon_statistics: no such mode");
  std::vector<double> dist(static_cast<std::size_t>(space.mode(mode).dim()), 0.0);
  for (int i = 0; i < space.dim(); ++i) dist[static_cast<std::size_t>(space.decompose(i).second[mode])] += std::norm(psi[i]);
  return moments(std::move(dist));
}

PhotonStatistics photon_statistics(const DensityOperator& rho, int mode) {
  const DensityOperator reduced = reduce_to_mode(rho, mode);
  std::vector<double> dist(static_cast<std::size_t>(reduced.dim()));
  for (int k = 0; k < reduced.dim(); ++k) {
    const double p = reduced(k, k).real();
    if (p < -1e-8) throw StateError("photon_statistics: negative population");
    dist[static_cast<std::size_t>(k)] = std::max(p, 0.0);
  }
  return moments(std::move(dist));
}

double fidelity(const PureState& a, const PureState& b) {
  require_same_space(a.space(), b.space(), "fidelity");
  return std::clamp(std::norm(a.amplitudes().dot(b.amplitudes())), 0.0, 1.0);
}

double fidelity(const DensityOperator& rho, const PureState& psi) {
  require_same_space(rho.space(), psi.space(), "fidelity");
  const cplx f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

// rho = F F^+ with eigenvalues under the round-off floor dropped.
Matrix psd_factor(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd root = es.eigenvalues();
  for (Eigen::Index i = 0; i < root.size(); ++i) root(i) = root(i) > floor ? std::sqrt(root(i)) : 0.0;
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_space(rho.space(), sigma.space(), "fidelity");
  // Nuclear norm of sqrt(sigma) sqrt(rho), via factors so tiny eigenvalues do not get square-rooted twice.
  const Matrix overlap = psd_factor(sigma.matrix()).adjoint() * psd_factor(rho.matrix());
  Eigen::JacobiSVD<Matrix> svd(overlap);
  const double f = svd.singularValues().sum();
  return std::clamp(f * f, 0.0, 1.0);
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_space(rho.space(), sigma.space(), "trace_distance");
  const Matrix diff = rho.matrix() - sigma.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace vacprobe
