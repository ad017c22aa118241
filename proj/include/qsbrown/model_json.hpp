#pragma once

#include <string>

#include <json.hpp>

#include "qsbrown/model.hpp"

namespace qsb {

/// Builds a Potential from its JSON descriptor
/// ({"kind":"beta_tasep"|"oy"|"custom", ...}).
Potential potential_from_json(const nlohmann::json& j);

/// Canonical JSON form. Function-backed covariance/interaction tables are
/// materialized as "dense"/"banded" over the window the model can query.
nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

ModelSpec load_model_file(const std::string& path);

}  // namespace qsb
