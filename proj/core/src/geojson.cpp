#include <string>

#include "geojson_internal.hpp"
#include "toporel/error.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace detail {

namespace {

using nlohmann::json;

Coordinate position(const json& v) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParseError("GeoJSON position must be [x, y]", 0);
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

CoordinateSeq positions(const json& v) {
  if (!v.is_array()) throw ParseError("GeoJSON coordinates must be an array", 0);
  CoordinateSeq out;
  for (const auto& p : v) out.push_back(position(p));
  return out;
}

LineString line(const json& v) {
  LineString l{positions(v)};
  if (l.coords.size() < 2) throw ParseError("LineString needs at least 2 positions", 0);
  return l;
}

CoordinateSeq ring(const json& v) {
  CoordinateSeq r = positions(v);
  if (r.size() < 4) throw ParseError("ring needs at least 4 positions", 0);
  if (!(r.front() == r.back())) throw ParseError("ring is not closed", 0);
  return r;
}

Polygon polygon(const json& v) {
  if (!v.is_array() || v.empty()) throw ParseError("Polygon needs at least one ring", 0);
  Polygon p;
  p.shell = ring(v[0]);
  for (std::size_t i = 1; i < v.size(); ++i) p.holes.push_back(ring(v[i]));
  return p;
}

}  // namespace

Geometry geometry_from_geojson(const json& obj) {
  if (!obj.is_object() || !obj.contains("type") || !obj["type"].is_string()) {
    throw ParseError("GeoJSON geometry needs a string 'type'", 0);
  }
  const std::string type = obj["type"].get<std::string>();
  if (!obj.contains("coordinates")) throw ParseError("GeoJSON geometry lacks 'coordinates'", 0);
  const json& c = obj["coordinates"];
  if (type == "Point") {
    if (c.is_array() && c.empty()) return Point{};
    return Point{position(c)};
  }
  if (type == "LineString") return line(c);
  if (type == "Polygon") return polygon(c);
  if (type == "MultiPoint") return MultiPoint{positions(c)};
  if (type == "MultiLineString") {
    MultiLineString m;
    for (const auto& l : c) m.lines.push_back(line(l));
    return m;
  }
  if (type == "MultiPolygon") {
    MultiPolygon m;
    for (const auto& p : c) m.polygons.push_back(polygon(p));
    return m;
  }
  throw ParseError("unsupported GeoJSON geometry type '" + type + "'", 0);
}

}  // namespace detail

Geometry parse_geojson_geometry(std::string_view json_text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
  }
  return detail::geometry_from_geojson(obj);
}

}  // namespace toporel
