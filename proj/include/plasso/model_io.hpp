#pragma once

#include "plasso/path_cv.hpp"

#include <json.hpp>

#include <string>

namespace plasso {

inline constexpr const char* kModelSchema = "plasso.model/1";
inline constexpr const char* kPathSchema = "plasso.path/1";

nlohmann::ordered_json setup_to_json(const FitSetup& setup);
FitSetup setup_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json model_to_json(const FitSetup& setup, const PliableModel& model);

struct LoadedModel {
  FitSetup setup;
  PliableModel model;
};

/// Throws SchemaMismatch for unknown schema ids and ParseError for malformed documents.
LoadedModel model_from_json(const nlohmann::ordered_json& j);
LoadedModel model_from_string(const std::string& text);

nlohmann::ordered_json path_to_json(const FitSetup& setup, const PathResult& path, const PathConfig& config);

/// Shortest round-trip decimal text; NaN and infinities become null.
nlohmann::ordered_json number(double v);

}  // namespace plasso
