#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vacprobe/fock.hpp"

namespace vacprobe {

/// Wigner function sampled on a rectangular grid; W(i, j) belongs to (x[i], p[j]).
struct WignerGrid {
  std::vector<double> x;
  std::vector<double> p;
  Eigen::MatrixXd W;
  std::string convention;
};

/// Quadrature convention: alpha = (x + i p) / sqrt(2), so the vacuum is exp(-x^2 - p^2) / pi
/// and the integral over dx dp is one.
inline constexpr const char* kWignerConvention = "alpha=(x+ip)/sqrt(2); integral dx dp = 1";

struct GridSpec {
  double x_min = -4.0;
  double x_max = 4.0;
  int x_points = 161;
  double p_min = -4.0;
  double p_max = 4.0;
  int p_points = 161;

  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Iterative Laguerre evaluation over the single-mode field.
WignerGrid wigner(const DensityOperator& field, const GridSpec& grid = {});
WignerGrid wigner(const PureState& field, const GridSpec& grid = {});

/// Single point from the displaced-parity definition (1/pi) Tr[rho D(alpha) P D(alpha)^dag].
double wigner_parity(const DensityOperator& field, double x, double p);

/// Trapezoidal integral of W over the grid.
double integrate(const WignerGrid& grid);

/// Throws NumericalError unless the grid integral lies within `tol` of one.
void check_normalization(const WignerGrid& grid, double tol = 1e-3);

/// Integral of max(-W, 0); half of (integral |W|) - 1.
double negativity_volume(const WignerGrid& grid);

/// Marginal over p at each x.
std::vector<double> x_marginal(const WignerGrid& grid);

/// `x,p,W` rows, x-major.
void write_wigner_csv(std::ostream& out, const WignerGrid& grid);

}  // namespace vacprobe
