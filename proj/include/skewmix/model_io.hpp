#pragma once

#include <json.hpp>

#include "skewmix/mixture.hpp"

namespace skewmix {

/// Σ is stored twice: its lower Cholesky factor and the full matrix. Reading
/// uses the full matrix, so a round trip is exact.
nlohmann::json model_to_json(const MixtureModel& model);
MixtureModel model_from_json(const nlohmann::json& j);

/// Throws InvalidArgument naming the first missing or mistyped field.
void validate_report(const nlohmann::json& report);

}  // namespace skewmix
