#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "toporel/error.hpp"
#include "toporel/wkt.hpp"

using namespace toporel;

namespace {

const char* kSquare = "POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0))";

bool has_rule(const Geometry& g, ViolationRule r) {
  const auto v = validate(g);
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == r; });
}

}  // namespace

TEST_CASE("parse_wkt reads points with decimal coordinates") {
  const Geometry g = parse_wkt("POINT (-89.3551 43.123)");
  REQUIRE(g.type() == GeometryType::Point);
  CHECK(*g.get_if<Point>()->coord == Coordinate{-89.3551, 43.123});
  CHECK(parse_wkt("point(1 2)") == parse_wkt("POINT (1 2)"));
}

TEST_CASE("parse_wkt keeps the closing coordinate of rings") {
  const Geometry g = parse_wkt(kSquare);
  REQUIRE(g.type() == GeometryType::Polygon);
  CHECK(g.get_if<Polygon>()->shell.size() == 5);
  CHECK(g.get_if<Polygon>()->holes.empty());
}

TEST_CASE("parse_wkt rejects malformed input with an offset") {
  CHECK_THROWS_AS(parse_wkt("LINESTRING (0 0)"), ParseError);
  CHECK_THROWS_AS(parse_wkt("POINT (1)"), ParseError);
  CHECK_THROWS_AS(parse_wkt("POINT (1 2) trailing"), ParseError);
  CHECK_THROWS_AS(parse_wkt("CIRCLE (0 0, 1)"), ParseError);
  CHECK_THROWS_AS(parse_wkt(""), ParseError);
  CHECK_THROWS_AS(parse_wkt("LINESTRING (1 1, 1 1)"), ParseError);
}

TEST_CASE("parse_wkt accepts empty geometries and multi types") {
  CHECK(parse_wkt("POINT EMPTY").is_empty());
  CHECK(dimension(parse_wkt("POLYGON EMPTY")) == Dimension::Empty);
  const Geometry mp = parse_wkt("MULTIPOLYGON (((0 0, 1 0, 1 1, 0 0)), ((2 2, 3 2, 3 3, 2 2)))");
  CHECK(geometry_type(mp) == "MultiPolygon");
  CHECK(mp.get_if<MultiPolygon>()->polygons.size() == 2);
  CHECK(parse_wkt("MULTIPOINT ((0 0), (1 1))") == parse_wkt("MULTIPOINT (0 0, 1 1)"));
}

TEST_CASE("to_wkt trims zeros and rounds to the requested precision") {
  CHECK(to_wkt(Geometry::point(1.0, 2.0)) == "POINT (1 2)");
  CHECK(to_wkt(Geometry::point(1.23456789, 0), 4) == "POINT (1.2346 0)");
  CHECK(to_wkt(parse_wkt(kSquare)) == kSquare);
  CHECK(format_number(-0.0) == "0");
}

TEST_CASE("WKT round trip reproduces the coordinates of a decimal polygon") {
  const char* wkt = "POLYGON ((-89.3552 43.124, -89.355 43.124, -89.355 43.122, -89.3552 43.122, -89.3552 43.124))";
  CHECK(to_wkt(parse_wkt(wkt)) == wkt);
}

TEST_CASE("round trip at precision p equals rounding to p places") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto c = [&] { return Coordinate{rng.uniform01() * 200 - 100, rng.uniform01() * 200 - 100}; };
    const Geometry g = LineString{{c(), c(), c()}};
    for (int p : {0, 3, 6}) {
      CHECK(parse_wkt(to_wkt(g, p)) == round_coordinates(g, p));
    }
    CHECK(parse_wkt(to_wkt(g, kRoundTripPrecision)) == g);
  }
}

TEST_CASE("dimension follows the geometry kind") {
  CHECK(dimension(Geometry::point(0, 0)) == Dimension::Zero);
  CHECK(dimension(parse_wkt("LINESTRING (0 0, 1 1)")) == Dimension::One);
  CHECK(dimension(parse_wkt(kSquare)) == Dimension::Two);
  CHECK(dimension_value(Dimension::Empty) == -1);
  CHECK(type_name(GeometryType::LineString) == "LineString");
  CHECK(parse_type_name("polygon") == GeometryType::Polygon);
}

TEST_CASE("validate reports structural and simplicity violations") {
  CHECK(validate(parse_wkt("POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))")).empty());
  CHECK(has_rule(parse_wkt("POLYGON ((0 0, 2 2, 2 0, 0 2, 0 0))"), ViolationRule::RingSelfIntersection));
  CHECK(has_rule(parse_wkt("POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (5 5, 6 5, 6 6, 5 5))"),
                 ViolationRule::HoleOutsideShell));
  CHECK(has_rule(LineString{{{1, 1}, {1, 1}}}, ViolationRule::ZeroLength));
  CHECK(has_rule(Polygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}}, ViolationRule::RingNotClosed));
  CHECK(has_rule(Geometry::point(std::nan(""), 0), ViolationRule::NonFiniteCoordinate));
  CHECK(is_valid(parse_wkt("POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 2, 1 1))")));
}

TEST_CASE("envelope and signed area") {
  const Geometry g = parse_wkt(kSquare);
  const Envelope e = g.envelope();
  CHECK(e.min_x == 0);
  CHECK(e.max_y == 4);
  CHECK(signed_area(g.get_if<Polygon>()->shell) == 16);
  CHECK(e.intersects(Envelope{4, 4, 5, 5}));
  CHECK_FALSE(e.intersects(Envelope{4.5, 0, 5, 1}));
}

TEST_CASE("find_wkt_geometries extracts embedded geometries from prose") {
  const auto found = find_wkt_geometries("Sure: POLYGON ((0 0, 1 0, 1 1, 0 0)) and also POINT (2 3).");
  REQUIRE(found.size() == 2);
  CHECK(found[0].type() == GeometryType::Polygon);
  CHECK(found[1] == Geometry::point(2, 3));
  CHECK(find_wkt_geometries("I cannot do that").empty());
}

TEST_CASE("GeoJSON geometries parse to the same values as WKT") {
  CHECK(parse_geojson_geometry(R"({"type":"Point","coordinates":[1,2]})") == Geometry::point(1, 2));
  CHECK(parse_geojson_geometry(R"({"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]]]})") ==
        parse_wkt(kSquare));
  CHECK_THROWS_AS(parse_geojson_geometry(R"({"type":"Point"})"), Error);
}
