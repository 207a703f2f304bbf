#pragma once

#include <nlohmann/json.hpp>

#include "toporel/geometry.hpp"

namespace toporel::detail {

/// Converts a parsed GeoJSON geometry object. Throws ParseError.
Geometry geometry_from_geojson(const nlohmann::json& obj);

}  // namespace toporel::detail
