#include "vacprobe/wigner.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "vacprobe/format.hpp"
#include "vacprobe/integrator.hpp"

namespace vacprobe {

namespace {

std::vector<double> axis(double lo, double hi, int points) {
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return v;
}

const Matrix& field_matrix(const DensityOperator& field) {
  const Space& s = field.space();
  if (s.has_atom() || s.mode_count() != 1) throw DimensionError("wigner: expected a single-mode field");
  return field.matrix();
}

// Trapezoid weights on a uniform axis.
double trapezoid_weight(std::size_t i, std::size_t n, double h) { return (i == 0 || i + 1 == n) ? 0.5 * h : h; }

}  // namespace

void GridSpec::validate() const {
  if (x_points < 2 || p_points < 2) throw std::invalid_argument("wigner grid: at least two points per axis");
  if (!(x_max > x_min) || !(p_max > p_min)) throw std::invalid_argument("wigner grid: empty range");
}

WignerGrid wigner(const DensityOperator& field, const GridSpec& spec) {
  spec.validate();
  const Matrix& rho = field_matrix(field);
  const int dim = static_cast<int>(rho.rows());

  WignerGrid out;
  out.x = axis(spec.x_min, spec.x_max, spec.x_points);
  out.p = axis(spec.p_min, spec.p_max, spec.p_points);
  out.convention = kWignerConvention;
  out.W.resize(spec.x_points, spec.p_points);

  std::vector<cplx> w(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    for (std::size_t j = 0; j < out.p.size(); ++j) {
      const cplx a = cplx(out.x[i], out.p[j]) / std::numbers::sqrt2;
      w[0] = std::exp(-2.0 * std::norm(a)) / std::numbers::pi;
      double acc = rho(0, 0).real() * w[0].real();
      for (int n = 1; n < dim; ++n) {
        w[n] = 2.0 * a * w[n - 1] / std::sqrt(double(n));
        acc += 2.0 * (rho(0, n) * w[n]).real();
      }
      for (int m = 1; m < dim; ++m) {
        cplx prev = w[m];
        const double sm = std::sqrt(double(m));
        w[m] = (2.0 * std::conj(a) * prev - sm * w[m - 1]) / sm;
        acc += (rho(m, m) * w[m]).real();
        for (int n = m + 1; n < dim; ++n) {
          const cplx next = (2.0 * a * w[n - 1] - sm * prev) / std::sqrt(double(n));
          prev = w[n];
          w[n] = next;
          acc += 2.0 * (rho(m, n) * w[n]).real();
        }
      }
      out.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return out;
}

WignerGrid wigner(const PureState& field, const GridSpec& spec) { return wigner(DensityOperator(field), spec); }

double wigner_parity(const DensityOperator& field, double x, double p) {
  const Matrix& rho = field_matrix(field);
  const int dim = static_cast<int>(rho.rows());
  const cplx a = cplx(x, p) / std::numbers::sqrt2;
  // D(alpha) on an enlarged space so the cutoff does not distort the block rho lives in.
  const int big = dim + 60;
  Matrix gen = Matrix::Zero(big, big);
  for (int n = 1; n < big; ++n) {
    gen(n, n - 1) = a * std::sqrt(double(n));
    gen(n - 1, n) = -std::conj(a) * std::sqrt(double(n));
  }
  const Matrix d = gen.exp();
  Matrix parity = Matrix::Zero(big, big);
  for (int n = 0; n < big; ++n) parity(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  const Matrix kernel = (d * parity * d.adjoint()).topLeftCorner(dim, dim);
  return (rho * kernel).trace().real() / std::numbers::pi;
}

double integrate(const WignerGrid& grid) {
  const std::size_t nx = grid.x.size(), np = grid.p.size();
  const double hx = grid.x[1] - grid.x[0], hp = grid.p[1] - grid.p[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < np; ++j)
      sum += trapezoid_weight(i, nx, hx) * trapezoid_weight(j, np, hp) *
             grid.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return sum;
}

void check_normalization(const WignerGrid& grid, double tol) {
  const double total = integrate(grid);
  if (!(std::abs(total - 1.0) <= tol))
    throw NumericalError("wigner: grid integral " + format_number(total) + " differs from 1 by more than " +
                         format_number(tol) + "; widen or refine the grid");
}

double negativity_volume(const WignerGrid& grid) {
  WignerGrid negative = grid;
  negative.W = (-grid.W).cwiseMax(0.0);
  return integrate(negative);
}

std::vector<double> x_marginal(const WignerGrid& grid) {
  const double hp = grid.p[1] - grid.p[0];
  std::vector<double> out(grid.x.size(), 0.0);
  for (std::size_t i = 0; i < grid.x.size(); ++i)
    for (std::size_t j = 0; j < grid.p.size(); ++j)
      out[i] += trapezoid_weight(j, grid.p.size(), hp) * grid.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

void write_wigner_csv(std::ostream& out, const WignerGrid& grid) {
  out << "x,p,W\n";
  for (std::size_t i = 0; i < grid.x.size(); ++i)
    for (std::size_t j = 0; j < grid.p.size(); ++j)
      out << format_number(grid.x[i]) << ',' << format_number(grid.p[j]) << ','
          << format_number(grid.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
}

}  // namespace vacprobe
