#pragma once

// Versioned JSON (de)serialization for fitted models.  Numbers are written
// in shortest round-trip form, so a deserialized model reproduces the
// original's predictions bit for bit.

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "hetreg/model.hpp"

namespace hetreg {

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

}  // namespace hetreg
