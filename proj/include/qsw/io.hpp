#pragma once

#include <string>
#include <variant>

#include "qsw/states.hpp"

namespace qsw {

// State file format (JSON, UTF-8):
//   { "registers": [{"name": str, "dim": int}, ...],
//     "kind": "pure" | "mixed",
//     "data": [[re, im], ...] }
// with dense vectors / row-major matrices and full-precision doubles.

using StateVariant = std::variant<Ket, DensityOperator>;

std::string to_json_string(const Ket& k);
std::string to_json_string(const DensityOperator& rho);

StateVariant state_from_json_string(const std::string& text);
StateVariant load_state(const std::string& path);
void save_state(const StateVariant& state, const std::string& path);

// Any state as a density operator.
DensityOperator as_density(const StateVariant& s);

}  // namespace qsw
