#pragma once

#include <json.hpp>

#include "hinf/types.hpp"

namespace hinf {

/// Complex vectors travel as arrays of [re, im] pairs.
nlohmann::json to_json_pairs(const CVec& v);
CVec from_json_pairs(const nlohmann::json& j);

/// Accepts either [[re, im], ...] or a plain array of real numbers.
CVec from_json_taps(const nlohmann::json& j);

}  // namespace hinf
