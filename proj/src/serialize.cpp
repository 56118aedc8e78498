#include "vacprobe/serialize.hpp"

namespace vacprobe {

using nlohmann::json;

namespace {

json interleave(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      out.push_back(m(i, k).real());
      out.push_back(m(i, k).imag());
    }
  return out;
}

Matrix deinterleave(const json& values, Eigen::Index rows, Eigen::Index cols) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != 2 * rows * cols)
    throw DimensionError("deserialize: wrong number of entries");
  Matrix m(rows, cols);
  std::size_t p = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k, p += 2)
      m(i, k) = cplx(values[p].get<double>(), values[p + 1].get<double>());
  return m;
}

json with_space(const Space& space, const char* kind) {
  return json{{"kind", kind}, {"space", to_json(space)}, {"basis", space.labels()}};
}

void check_kind(const json& j, const char* kind) {
  if (j.at("kind").get<std::string>() != kind) throw std::invalid_argument(std::string("expected a ") + kind);
}

}  // namespace

json to_json(const Space& space) {
  json modes = json::array();
  for (const auto& m : space.modes()) modes.push_back(m.n_max());
  json atom = space.has_atom() ? json(space.atom().labels()) : json(nullptr);
  return json{{"atom", atom}, {"modes", modes}};
}

Space space_from_json(const json& j) {
  std::optional<AtomLevelSet> atom;
  if (!j.at("atom").is_null()) atom = AtomLevelSet(j.at("atom").get<std::vector<std::string>>());
  std::vector<FockTruncation> modes;
  for (const auto& m : j.at("modes")) modes.emplace_back(m.get<int>());
  return Space(std::move(atom), std::move(modes));
}

json to_json(const PureState& psi) {
  json j = with_space(psi.space(), "pure_state");
  j["amplitudes"] = interleave(psi.amplitudes());
  return j;
}

json to_json(const DensityOperator& rho) {
  json j = with_space(rho.space(), "density_operator");
  j["matrix"] = interleave(rho.matrix());
  return j;
}

json to_json(const LinearOperator& op) {
  json j = with_space(op.space(), "linear_operator");
  j["matrix"] = interleave(op.matrix());
  return j;
}

PureState pure_state_from_json(const json& j) {
  check_kind(j, "pure_state");
  Space space = space_from_json(j.at("space"));
  const auto d = space.dim();
  Vector v = deinterleave(j.at("amplitudes"), d, 1).col(0);
  return PureState(std::move(space), std::move(v));
}

DensityOperator density_from_json(const json& j) {
  check_kind(j, "density_operator");
  Space space = space_from_json(j.at("space"));
  const auto d = space.dim();
  return DensityOperator(std::move(space), deinterleave(j.at("matrix"), d, d));
}

LinearOperator operator_from_json(const json& j) {
  check_kind(j, "linear_operator");
  Space space = space_from_json(j.at("space"));
  const auto d = space.dim();
  return LinearOperator(std::move(space), deinterleave(j.at("matrix"), d, d));
}

}  // namespace vacprobe
