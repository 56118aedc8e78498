#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace vacprobe::numerics {

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for a minimum of a unimodal function on [lo, hi].
/// Stops once the bracket is narrower than `xtol`. One evaluation per iteration.
template <class F>
ScalarOptimum golden_section_minimize(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
  if (!(hi > lo)) throw std::invalid_argument("golden_section_minimize: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  for (int it = 0; it < max_iter && (hi - lo) > xtol; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
    ++evals;
  }
  return fc < fd ? ScalarOptimum{c, fc, evals} : ScalarOptimum{d, fd, evals};
}

template <class F>
ScalarOptimum golden_section_maximize(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
  auto r = golden_section_minimize([&](double x) { return -f(x); }, lo, hi, xtol, max_iter);
  r.value = -r.value;
  return r;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  if (lo <= 0.0 || hi <= 0.0) throw std::invalid_argument("logspace: bounds must be positive");
  std::vector<double> out;
  for (double x : linspace(std::log(lo), std::log(hi), n)) out.push_back(std::exp(x));
  if (n > 1) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

}  // namespace vacprobe::numerics
