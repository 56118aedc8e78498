#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "vacprobe/integrator.hpp"

using namespace vacprobe;

TEST_CASE("exponential decay to tolerance") {
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    Eigen::VectorXd y(1);
    y(0) = 1.0;
    StepControl ctl;
    ctl.rtol = tol;
    ctl.atol = tol;
    integrate_dopri5([](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = -x; }, y, 0.0, 5.0, ctl);
    CHECK(std::abs(y(0) - std::exp(-5.0)) < 50 * tol);
  }
}

TEST_CASE("harmonic oscillator conserves energy") {
  Eigen::Vector2d y(1.0, 0.0);
  StepControl ctl;
  ctl.rtol = 1e-11;
  ctl.atol = 1e-11;
  int observed = 0;
  double last_t = -1.0;
  const auto stats = integrate_dopri5(
      [](double, const Eigen::Vector2d& x, Eigen::Vector2d& dx) { dx << x(1), -x(0); }, y, 0.0, 20.0, ctl,
      [&](double t, const Eigen::Vector2d&) {
        CHECK(t > last_t);
        last_t = t;
        ++observed;
      });
  CHECK(std::abs(y(0) - std::cos(20.0)) < 1e-9);
  CHECK(std::abs(y(1) + std::sin(20.0)) < 1e-9);
  CHECK(last_t == 20.0);
  CHECK(observed == stats.accepted + 1);
  CHECK(stats.next_step > 0.0);
}

TEST_CASE("time-dependent complex right-hand side") {
  // y' = i t y  =>  y = exp(i t^2 / 2)
  Eigen::VectorXcd y(1);
  y(0) = 1.0;
  StepControl ctl;
  ctl.rtol = 1e-10;
  ctl.atol = 1e-10;
  integrate_dopri5(
      [](double t, const Eigen::VectorXcd& x, Eigen::VectorXcd& dx) { dx = std::complex<double>(0.0, t) * x; }, y, 0.0,
      4.0, ctl);
  CHECK(std::abs(y(0) - std::polar(1.0, 8.0)) < 1e-8);
}

TEST_CASE("zero-length interval and budget exhaustion") {
  Eigen::VectorXd y(1);
  y(0) = 2.0;
  StepControl ctl;
  const auto stats =
      integrate_dopri5([](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = x; }, y, 1.0, 1.0, ctl);
  CHECK(y(0) == 2.0);
  CHECK(stats.accepted == 0);

  ctl.max_steps = 5;
  ctl.rtol = 1e-12;
  ctl.atol = 1e-12;
  CHECK_THROWS_AS(
      integrate_dopri5([](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = -50.0 * x; }, y, 0.0, 100.0, ctl),
      ToleranceError);
}
