#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "toporel/geometry.hpp"

namespace toporel {

/// Decimal places used for prompt-facing WKT.
inline constexpr int kDefaultWktPrecision = 6;
/// Precision value selecting the shortest representation that round-trips exactly.
inline constexpr int kRoundTripPrecision = -1;

/// Parses 2D WKT. Keywords are case-insensitive; "POINT(1 2)" and "POINT (1 2)"
/// are both accepted. Throws ParseError carrying the byte offset of the problem.
Geometry parse_wkt(std::string_view text);

/// Canonical WKT: uppercase keywords, single spaces, fixed precision with
/// trailing zeros trimmed (or shortest round-trip when precision < 0).
std::string to_wkt(const Geometry& g, int precision = kDefaultWktPrecision);

/// Formats one coordinate value the way to_wkt does.
std::string format_number(double v, int precision = kDefaultWktPrecision);

/// Reads a GeoJSON geometry object (Point, LineString, Polygon and Multi*).
Geometry parse_geojson_geometry(std::string_view json_text);

/// Rounds every coordinate to `precision` decimal places (what a WKT round
/// trip at that precision produces).
Geometry round_coordinates(const Geometry& g, int precision);

/// Byte range of a WKT-looking substring: a geometry keyword at a word start
/// followed by EMPTY or a balanced parenthesized body.
struct WktSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Candidate WKT substrings of free text, in order of appearance. Candidates
/// need not parse.
std::vector<WktSpan> find_wkt_spans(std::string_view text);

/// Geometries of the candidates that parse, in order of appearance.
std::vector<Geometry> find_wkt_geometries(std::string_view text);

}  // namespace toporel
