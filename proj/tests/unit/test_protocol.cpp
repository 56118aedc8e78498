#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "vacprobe/protocol.hpp"

using namespace vacprobe;

namespace {

const FockTruncation k12(12);

DensityOperator rho(const PureState& psi) { return DensityOperator(psi); }

SystemConfig ideal_config(FockTruncation t = k12) {
  SystemConfig c;
  c.trunc = t;
  return c;
}

SystemConfig simulated_config(int n_max, double T, double kappa = 0.0, double gamma = 0.0) {
  SystemConfig c;
  c.trunc = FockTruncation(n_max);
  c.schedule = c.schedule.with_duration(T);
  c.kappa = kappa;
  c.gamma_e = gamma;
  return c;
}

PureState random_field(std::mt19937& rng, FockTruncation t, int support) {
  std::normal_distribution<double> gauss;
  Vector v = Vector::Zero(t.dim());
  for (int i = 0; i <= support; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  return PureState(Space::field(t), v.normalized());
}

std::vector<double> diag(const DensityOperator& r) {
  std::vector<double> d;
  for (int i = 0; i < r.dim(); ++i) d.push_back(r(i, i).real());
  return d;
}

double poisson(int k) { return std::exp(-1.0) / std::tgamma(k + 1.0); }

void check_record(const MeasurementRecord& r, double tol = 1e-8) {
  CHECK(r.p_vacuum + r.p_not_vacuum + r.p_sink == doctest::Approx(1.0).epsilon(tol));
  if (r.conditional_field_vacuum) CHECK_NOTHROW(r.conditional_field_vacuum->validate());
  if (r.conditional_field_not_vacuum) CHECK_NOTHROW(r.conditional_field_not_vacuum->validate());
}

}  // namespace

TEST_CASE("ideal vacuum measurement") {
  const SystemConfig c = ideal_config();
  SUBCASE("vacuum") {
    const auto r = measure_vacuum(rho(fock_state(0, k12)), c, Mode::ideal);
    check_record(r);
    CHECK(r.p_vacuum == 1.0);
    CHECK(!r.conditional_field_not_vacuum);
    CHECK(fidelity(*r.conditional_field_vacuum, fock_state(0, k12)) == doctest::Approx(1.0));
  }
  SUBCASE("one photon") {
    const auto r = measure_vacuum(rho(fock_state(1, k12)), c, Mode::ideal);
    check_record(r);
    CHECK(r.p_not_vacuum == doctest::Approx(1.0));
    CHECK(!r.conditional_field_vacuum);
    CHECK(fidelity(*r.conditional_field_not_vacuum, fock_state(0, k12)) == doctest::Approx(1.0));
  }
  SUBCASE("coherent state") {
    const PureState a = coherent_state(1.0, k12);
    const auto r = measure_vacuum(rho(a), c, Mode::ideal);
    check_record(r);
    CHECK(r.p_vacuum == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    const auto d = diag(*r.conditional_field_not_vacuum);
    for (int k = 0; k < 10; ++k) CHECK(d[static_cast<std::size_t>(k)] == doctest::Approx(poisson(k + 1) / (1.0 - std::exp(-1.0))).epsilon(1e-10));
  }
  SUBCASE("branch probability is the vacuum population") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const PureState psi = random_field(rng, k12, 8);
      const auto r = measure_vacuum(rho(psi), c, Mode::ideal);
      CHECK(std::abs(r.p_vacuum - std::norm(psi[0])) < 1e-14);
      check_record(r, 1e-12);
    }
  }
}

TEST_CASE("amplitude ratios survive the probe") {
  std::mt19937 rng(17);
  SUBCASE("ideal") {
    for (int trial = 0; trial < 20; ++trial) {
      const PureState psi = random_field(rng, k12, 9);
      const DensityOperator out = *measure_vacuum(rho(psi), ideal_config(), Mode::ideal).conditional_field_not_vacuum;
      for (int n = 1; n <= 9; ++n)
        for (int m = 1; m <= 9; ++m) {
          const cplx expected = psi[n] / psi[m];
          CHECK(std::abs(out(n - 1, m - 1) / out(m - 1, m - 1) - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
        }
    }
  }
  SUBCASE("simulated without loss") {
    const SystemConfig c = simulated_config(5, 100.0);
    const PureState psi = random_field(rng, c.trunc, 4);
    const auto r = measure_vacuum(rho(psi), c, Mode::simulated);
    check_record(r);
    CHECK(r.p_vacuum == doctest::Approx(std::norm(psi[0])).epsilon(1e-4));
    const DensityOperator& out = *r.conditional_field_not_vacuum;
    for (int n = 2; n <= 4; ++n) CHECK(std::abs(out(n - 1, 0) / out(0, 0) - psi[n] / psi[1]) < 1e-4);
  }
}

TEST_CASE("photon addition") {
  const SystemConfig c = ideal_config();
  const auto added = add_photon(rho(fock_state(0, k12)), c, Mode::ideal);
  CHECK(fidelity(added.field, fock_state(1, k12)) == doctest::Approx(1.0));
  CHECK(measure_vacuum(added.field, c, Mode::ideal).p_vacuum == 0.0);
  const auto shifted = add_photon(rho(coherent_state(1.0, FockTruncation(20))), ideal_config(FockTruncation(20)), Mode::ideal);
  CHECK(photon_statistics(shifted.field).mandel_q == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK_THROWS_AS(add_photon(rho(fock_state(12, k12)), c, Mode::ideal), TruncationError);

  SUBCASE("simulated") {
    const SystemConfig s = simulated_config(4, 100.0);
    const auto r = add_photon(rho(fock_state(2, s.trunc)), s, Mode::simulated);
    CHECK(r.p_transfer > 0.999);
    CHECK(fidelity(r.field, fock_state(3, s.trunc)) > 0.999);
  }
}

TEST_CASE("ideal projection onto the photon-carrying subspace") {
  const SystemConfig c = ideal_config();
  const PureState a = coherent_state(1.0, k12);
  const ProjectionResult p = project_nonvacuum(rho(a), c, Mode::ideal);
  CHECK(p.p_success == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
  Vector target = a.amplitudes();
  target(0) = 0.0;
  const PureState ideal(a.space(), target.normalized());
  CHECK(fidelity(*p.field, ideal) == doctest::Approx(1.0).epsilon(1e-12));

  const ProjectionResult twice = project_nonvacuum(*p.field, c, Mode::ideal);
  CHECK(twice.p_success == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_distance(*twice.field, *p.field) < 1e-12);

  const ProjectionResult one = project_nonvacuum(rho(fock_state(1, k12)), c, Mode::ideal);
  CHECK(one.p_success == doctest::Approx(1.0));
  CHECK(fidelity(*one.field, fock_state(1, k12)) == doctest::Approx(1.0));

  const ProjectionResult none = project_nonvacuum(rho(fock_state(0, k12)), c, Mode::ideal);
  CHECK(none.p_success == 0.0);
  CHECK(!none.field);
}

TEST_CASE("lossy projection") {
  const SystemConfig c = simulated_config(12, 40.0, 0.005, 0.01);
  const PureState a = coherent_state(1.0, c.trunc);
  const ProjectionResult p = project_nonvacuum(rho(a), c, Mode::simulated);
  check_record(p.measurement, 1e-7);
  CHECK(p.p_success < 1.0 - std::exp(-1.0));
  CHECK(p.p_success > 0.55);
  CHECK(p.measurement.p_sink > 0.0);
  REQUIRE(p.field);
  CHECK_NOTHROW(p.field->validate());
  // Idle decay only costs fidelity.
  SystemConfig idle = c;
  idle.idle = 20.0;
  Vector target = a.amplitudes();
  target(0) = 0.0;
  const PureState ideal(a.space(), target.normalized());
  CHECK(fidelity(*project_nonvacuum(rho(a), idle, Mode::simulated).field, ideal) < fidelity(*p.field, ideal));
}

TEST_CASE("bare lowering") {
  const SystemConfig c = ideal_config();
  const ConditionalField two = bare_lower_protocol(rho(fock_state(2, k12)), c, Mode::ideal);
  CHECK(two.p_success == doctest::Approx(1.0));
  CHECK(fidelity(*two.field, fock_state(1, k12)) == doctest::Approx(1.0));
  const ConditionalField vac = bare_lower_protocol(rho(fock_state(0, k12)), c, Mode::ideal);
  CHECK(vac.p_success == 0.0);
  CHECK(!vac.field);
  const ConditionalField a = bare_lower_protocol(rho(coherent_state(1.0, k12)), c, Mode::ideal);
  const auto d = photon_statistics(*a.field).distribution;
  const double norm = 1.0 - std::exp(-1.0);
  for (int k = 0; k < 10; ++k) CHECK(d[static_cast<std::size_t>(k)] == doctest::Approx(poisson(k + 1) / norm).epsilon(1e-10));
}

TEST_CASE("scissors") {
  const SystemConfig c = ideal_config(FockTruncation(16));
  const PureState a = coherent_state(1.0, c.trunc);
  double cumulative = 0.0;
  for (int n = 1; n <= 3; ++n) {
    cumulative += poisson(n - 1);
    const ScissorsRecord r = scissors_truncate(rho(a), n, c, Mode::ideal);
    CHECK(r.rounds.size() == static_cast<std::size_t>(n));
    CHECK(std::abs(r.p_success - (1.0 - cumulative)) < 1e-10);
    const auto d = photon_statistics(*r.output_field).distribution;
    for (int k = 0; k < n; ++k) CHECK(d[static_cast<std::size_t>(k)] < 1e-15);
    for (int k = n; k < 12; ++k) CHECK(d[static_cast<std::size_t>(k)] == doctest::Approx(poisson(k) / (1.0 - cumulative)).epsilon(1e-9));
  }
  const ScissorsRecord one = scissors_truncate(rho(fock_state(1, c.trunc)), 2, c, Mode::ideal);
  CHECK(one.p_success == 0.0);
  CHECK(!one.output_field);
  CHECK_THROWS_AS(scissors_truncate(rho(a), 0, c, Mode::ideal), std::invalid_argument);
}

TEST_CASE("photon counting") {
  const SystemConfig c = ideal_config();
  const CountDistribution three = number_resolving_measure(rho(fock_state(3, k12)), c, Mode::ideal);
  CHECK(three.probabilities[3] == doctest::Approx(1.0));
  CHECK(three.rounds == 4);
  const CountDistribution vac = number_resolving_measure(rho(fock_state(0, k12)), c, Mode::ideal);
  CHECK(vac.probabilities[0] == 1.0);
  CHECK(vac.rounds == 1);

  std::mt19937 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const PureState psi = random_field(rng, k12, 12);
    const auto counts = number_resolving_measure(rho(psi), c, Mode::ideal);
    const auto expected = photon_statistics(psi).distribution;
    REQUIRE(counts.probabilities.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(std::abs(counts.probabilities[k] - expected[k]) < 1e-12);
    CHECK(counts.p_lost == 0.0);
  }
}

TEST_CASE("ground-state rotation") {
  const PureState out = ideal_measurement_output(coherent_state(1.0, k12));
  CHECK(out.norm_squared() == doctest::Approx(1.0));
  CHECK((rotate_ground(out, 0.0, 0.3).amplitudes() - out.amplitudes()).norm() < 1e-15);

  const Space s = out.space();
  const PureState g = PureState::basis(s, s.index(level::g, 2));
  const PureState swapped = rotate_ground(g, std::numbers::pi, 0.4);
  CHECK(std::abs(swapped[s.index(level::gp, 2)]) == doctest::Approx(1.0));
  const PureState e = PureState::basis(s, s.index(level::e, 2));
  CHECK((rotate_ground(e, 1.1, 0.2).amplitudes() - e.amplitudes()).norm() < 1e-15);

  // Half rotation then reading g': amplitudes (a_0|0> - sum a_n|n-1>)/sqrt 2.
  const PureState a = coherent_state(1.0, k12);
  const PureState r = rotate_ground(out, std::numbers::pi / 2, 0.0);
  double p_gp = 0.0, p_g = 0.0;
  for (int n = 0; n <= 12; ++n) {
    p_gp += std::norm(r[s.index(level::gp, n)]);
    p_g += std::norm(r[s.index(level::g, n)]);
  }
  CHECK(p_gp + p_g == doctest::Approx(1.0).epsilon(1e-12));
  const cplx expect0 = (a[0] - a[1]) / std::sqrt(2.0);
  CHECK(std::abs(r[s.index(level::gp, 0)] - expect0) < 1e-12);
  for (int n = 2; n <= 12; ++n) CHECK(std::abs(r[s.index(level::gp, n - 1)] + a[n] / std::sqrt(2.0)) < 1e-12);

  const DensityOperator rr = rotate_ground(DensityOperator(out), std::numbers::pi / 2, 0.0);
  CHECK(fidelity(rr, r) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cavity decay and input checks") {
  const FockTruncation t(3);
  const DensityOperator one = rho(fock_state(1, t));
  const DensityOperator decayed = cavity_decay(one, 0.2, 5.0, {1e-10, 1e-12});
  CHECK(decayed(1, 1).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(decayed(0, 0).real() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
  CHECK_THROWS_AS(cavity_decay(one, -1.0, 1.0, {1e-8, 1e-8}), std::invalid_argument);

  const SystemConfig c = simulated_config(4, 10.0);
  CHECK_THROWS_AS(measure_vacuum(rho(fock_state(1, FockTruncation(5))), c, Mode::simulated), DimensionError);
  CHECK_THROWS_AS(measure_vacuum(DensityOperator(Space::field(t), 2.0 * one.matrix()), c, Mode::ideal), StateError);
}

TEST_CASE("serialization") {
  const SystemConfig c = ideal_config();
  const ScissorsRecord r = scissors_truncate(rho(coherent_state(1.0, k12)), 1, c, Mode::ideal);
  const nlohmann::json j = to_json(r);
  CHECK(j.at("n_cut") == 1);
  CHECK(j.at("rounds").size() == 1);
  CHECK(j.at("rounds")[0].at("p_vacuum").get<double>() == doctest::Approx(std::exp(-1.0)));
  CHECK(!j.at("output_field").is_null());
  const nlohmann::json pj = to_json(project_nonvacuum(rho(fock_state(0, k12)), c, Mode::ideal));
  CHECK(pj.at("field").is_null());
  CHECK(to_json(number_resolving_measure(rho(fock_state(2, k12)), c, Mode::ideal)).at("rounds") == 3);
}
