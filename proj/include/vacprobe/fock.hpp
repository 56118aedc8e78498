#pragma once

#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vacprobe {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Raised when two objects live on incompatible spaces.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a Fock cutoff cannot hold a requested state.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input violates a physical-state invariant.
class StateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fock states |0>..|n_max> of one mode.
class FockTruncation {
 public:
  explicit FockTruncation(int n_max);

  int n_max() const { return n_max_; }
  int dim() const { return n_max_ + 1; }

  bool operator==(const FockTruncation&) const = default;

 private:
  int n_max_;
};

/// Smallest cutoff whose coherent-state tail beyond n_max is below `tail_tol`.
FockTruncation truncation_for_coherent(cplx alpha, double tail_tol = 1e-8);

/// Probability a coherent state puts above n_max.
double coherent_tail(cplx alpha, int n_max);

/// Ordered, unique atomic level labels. The decay sink is always last and named "s".
class AtomLevelSet {
 public:
  explicit AtomLevelSet(std::vector<std::string> labels);

  /// {g, g', e, s}
  static AtomLevelSet lambda();
  /// {g_0, g_1, ..., g_modes, e, s}
  static AtomLevelSet pod(int modes);

  int size() const { return static_cast<int>(labels_.size()); }
  int index(std::string_view label) const;
  const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const AtomLevelSet&) const = default;

 private:
  std::vector<std::string> labels_;
};

namespace level {
// Indices inside AtomLevelSet::lambda().
inline constexpr int g = 0;
inline constexpr int gp = 1;
inline constexpr int e = 2;
inline constexpr int s = 3;
}  // namespace level

/// Identifies one tensor factor of a Space.
struct Subsystem {
  static Subsystem atom() { return Subsystem{-1}; }
  static Subsystem mode(int j) { return Subsystem{j}; }
  bool is_atom() const { return index < 0; }
  int index;
};

/// Composite basis: optional atom factor followed by field modes.
///
/// Flat index = atom * (d_0 * d_1 * ...) + n_0 * (d_1 * ...) + ... + n_last,
/// i.e. atom index slowest, then modes in id order, last mode fastest.
class Space {
 public:
  Space(std::optional<AtomLevelSet> atom, std::vector<FockTruncation> modes);

  static Space field(FockTruncation trunc);
  static Space atom_only(AtomLevelSet atom);
  static Space single_mode(FockTruncation trunc);

  bool has_atom() const { return atom_.has_value(); }
  const AtomLevelSet& atom() const;
  int atom_dim() const { return has_atom() ? atom_->size() : 1; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  const FockTruncation& mode(int j) const { return modes_.at(static_cast<std::size_t>(j)); }
  const std::vector<FockTruncation>& modes() const { return modes_; }
  int field_dim() const { return field_dim_; }
  int dim() const { return atom_dim() * field_dim_; }

  /// The space with the atom factor removed.
  Space field_part() const;
  /// Size of a single factor.
  int factor_dim(Subsystem which) const;

  int index(int atom_level, std::span<const int> photons) const;
  int index(int atom_level, int photons) const;
  /// Inverse of index(): (atom level, photon numbers).
  std::pair<int, std::vector<int>> decompose(int flat) const;
  std::string label(int flat) const;
  std::vector<std::string> labels() const;

  bool operator==(const Space&) const = default;

 private:
  std::optional<AtomLevelSet> atom_;
  std::vector<FockTruncation> modes_;
  int field_dim_;
};

/// Normalized (or explicitly unnormalized) amplitude vector over a Space.
class PureState {
 public:
  PureState(Space space, Vector amplitudes);

  const Space& space() const { return space_; }
  const Vector& amplitudes() const { return amp_; }
  int dim() const { return space_.dim(); }
  cplx operator[](int i) const { return amp_(i); }

  double norm_squared() const { return amp_.squaredNorm(); }
  PureState normalized() const;
  bool is_normalized(double tol = 1e-10) const;

  static PureState basis(Space space, int flat_index);

 private:
  Space space_;
  Vector amp_;
};

/// Density matrix over a Space.
class DensityOperator {
 public:
  DensityOperator(Space space, Matrix matrix);
  explicit DensityOperator(const PureState& psi);

  const Space& space() const { return space_; }
  const Matrix& matrix() const { return rho_; }
  int dim() const { return space_.dim(); }
  cplx operator()(int i, int j) const { return rho_(i, j); }

  double trace() const { return rho_.trace().real(); }
  double purity() const;
  DensityOperator normalized() const;

  /// Throws StateError unless Hermitian (1e-10), unit trace (1e-8) and PSD (-1e-8).
  void validate() const;

 private:
  Space space_;
  Matrix rho_;
};

/// Dense operator over a Space.
class LinearOperator {
 public:
  LinearOperator(Space space, Matrix matrix);

  const Space& space() const { return space_; }
  const Matrix& matrix() const { return m_; }
  int dim() const { return space_.dim(); }

  PureState apply(const PureState& psi) const;
  DensityOperator conjugate(const DensityOperator& rho) const;  // M rho M^dag
  LinearOperator adjoint() const;
  LinearOperator operator*(const LinearOperator& rhs) const;
  LinearOperator operator+(const LinearOperator& rhs) const;
  LinearOperator operator-(const LinearOperator& rhs) const;

 private:
  Space space_;
  Matrix m_;
};

// ---- constructors ---------------------------------------------------------

PureState fock_state(int n, FockTruncation trunc);
PureState coherent_state(cplx alpha, FockTruncation trunc);
/// Atom level `level` of the lambda atom times a field state on one mode.
PureState atom_field_state(int level, const PureState& field);

LinearOperator identity(const Space& space);
/// Truncated a. The top row stays empty, so a^dag a is exact but [a, a^dag] fails on |n_max>.
LinearOperator annihilation(FockTruncation trunc);
LinearOperator creation(FockTruncation trunc);
LinearOperator number_operator(FockTruncation trunc);
/// E+ = sum |n+1><n|; annihilates |n_max> on the truncated space.
LinearOperator bare_raise(FockTruncation trunc);
/// E- = sum |n-1><n|.
LinearOperator bare_lower(FockTruncation trunc);
/// (|0><0|, I - |0><0|)
std::pair<LinearOperator, LinearOperator> vacuum_projectors(FockTruncation trunc);
/// |i><j| on the atom factor alone.
LinearOperator atom_transition(const AtomLevelSet& atom, int to, int from);

// ---- tensor structure -----------------------------------------------------

/// Lifts an operator acting on one factor to the full space.
LinearOperator embed(const LinearOperator& op, Subsystem where, const Space& space);
/// Kronecker product; the left factor may carry the atom, the right must not.
PureState tensor(const PureState& lhs, const PureState& rhs);
DensityOperator tensor(const DensityOperator& lhs, const DensityOperator& rhs);

/// <i|rho|j> on the atom factor, i.e. the field-space block for levels (i, j).
Matrix atom_block(const DensityOperator& rho, int i, int j);
DensityOperator trace_out_atom(const DensityOperator& rho);
/// Reduced state of field mode j (atom and all other modes traced out).
DensityOperator reduce_to_mode(const DensityOperator& rho, int j);
/// Population of each atomic level.
std::vector<double> atom_populations(const DensityOperator& rho);

// ---- diagnostics ----------------------------------------------------------

struct PhotonStatistics {
  double mean = 0.0;
  double variance = 0.0;
  double mandel_q = 0.0;
  std::vector<double> distribution;
};

PhotonStatistics photon_statistics(const PureState& psi, int mode = 0);
PhotonStatistics photon_statistics(const DensityOperator& rho, int mode = 0);

/// Squared Uhlmann fidelity, so pure inputs give |<a|b>|^2.
double fidelity(const PureState& a, const PureState& b);
double fidelity(const DensityOperator& rho, const PureState& psi);
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);

/// (1/2) || rho - sigma ||_1
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

/// Principal square root of a Hermitian PSD matrix (negative eigenvalues clipped).
Matrix psd_sqrt(const Matrix& m);

}  // namespace vacprobe
