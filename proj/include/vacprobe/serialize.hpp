#pragma once

#include <json.hpp>

#include "vacprobe/fock.hpp"

namespace vacprobe {

// JSON layout: {"space": {...}, "basis": [labels], "amplitudes" | "matrix": [re, im, re, im, ...]}.
// Matrices are flattened row-major before interleaving.

nlohmann::json to_json(const Space& space);
Space space_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PureState& psi);
nlohmann::json to_json(const DensityOperator& rho);
nlohmann::json to_json(const LinearOperator& op);

PureState pure_state_from_json(const nlohmann::json& j);
DensityOperator density_from_json(const nlohmann::json& j);
LinearOperator operator_from_json(const nlohmann::json& j);

}  // namespace vacprobe
