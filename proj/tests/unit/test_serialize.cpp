#include <doctest.h>

#include "vacprobe/serialize.hpp"

using namespace vacprobe;

TEST_CASE("state and operator JSON round trip") {
  const FockTruncation t{3};
  const Space s = Space::single_mode(t);
  Vector v = Vector::Zero(s.dim());
  v(s.index(level::gp, 1)) = cplx(0.6, 0.0);
  v(s.index(level::g, 0)) = cplx(0.0, -0.8);
  const PureState psi(s, v);

  const PureState psi2 = pure_state_from_json(nlohmann::json::parse(to_json(psi).dump()));
  CHECK(psi2.space() == s);
  CHECK(psi2.amplitudes() == psi.amplitudes());

  const DensityOperator rho(psi);
  const DensityOperator rho2 = density_from_json(to_json(rho));
  CHECK(rho2.matrix() == rho.matrix());

  const LinearOperator a = embed(annihilation(t), Subsystem::mode(0), s);
  CHECK(operator_from_json(to_json(a)).matrix() == a.matrix());

  const nlohmann::json j = to_json(psi);
  CHECK(j["basis"][s.index(level::gp, 1)] == "g',1");
  CHECK(j["amplitudes"].size() == 2 * static_cast<std::size_t>(s.dim()));

  const Space pod(AtomLevelSet::pod(2), {FockTruncation(1), FockTruncation(2)});
  CHECK(space_from_json(to_json(pod)) == pod);
  const Space field = Space::field(t);
  CHECK(space_from_json(to_json(field)) == field);
}

TEST_CASE("malformed JSON payloads are rejected") {
  nlohmann::json j = to_json(fock_state(1, FockTruncation(2)));
  j["amplitudes"].erase(0);
  CHECK_THROWS(pure_state_from_json(j));
  nlohmann::json k = to_json(DensityOperator(fock_state(1, FockTruncation(2))));
  k["kind"] = "pure";
  CHECK_THROWS(density_from_json(k));
}
