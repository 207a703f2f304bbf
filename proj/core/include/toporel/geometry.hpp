#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace toporel {

/// Planar position. x is longitude, y latitude (decimal degrees).
struct Coordinate {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

using CoordinateSeq = std::vector<Coordinate>;

struct Point {
  std::optional<Coordinate> coord;  // nullopt == POINT EMPTY
  friend bool operator==(const Point&, const Point&) = default;
};

struct LineString {
  CoordinateSeq coords;
  friend bool operator==(const LineString&, const LineString&) = default;
};

/// Closed ring; the first coordinate is repeated at the end.
struct Polygon {
  CoordinateSeq shell;
  std::vector<CoordinateSeq> holes;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct MultiPoint {
  CoordinateSeq points;
  friend bool operator==(const MultiPoint&, const MultiPoint&) = default;
};

struct MultiLineString {
  std::vector<LineString> lines;
  friend bool operator==(const MultiLineString&, const MultiLineString&) = default;
};

struct MultiPolygon {
  std::vector<Polygon> polygons;
  friend bool operator==(const MultiPolygon&, const MultiPolygon&) = default;
};

enum class GeometryType : std::uint8_t {
  Point,
  LineString,
  Polygon,
  MultiPoint,
  MultiLineString,
  MultiPolygon,
};

/// Topological dimension. Empty is the dimension of the empty set.
enum class Dimension : std::int8_t { Empty = -1, Zero = 0, One = 1, Two = 2 };

struct Envelope {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  bool intersects(const Envelope& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  Envelope expanded(double d) const { return {min_x - d, min_y - d, max_x + d, max_y + d}; }
};

/// Immutable simple-features geometry value.
class Geometry {
 public:
  using Variant =
      std::variant<Point, LineString, Polygon, MultiPoint, MultiLineString, MultiPolygon>;

  Geometry() : value_(Point{}) {}
  Geometry(Point v) : value_(std::move(v)) {}
  Geometry(LineString v) : value_(std::move(v)) {}
  Geometry(Polygon v) : value_(std::move(v)) {}
  Geometry(MultiPoint v) : value_(std::move(v)) {}
  Geometry(MultiLineString v) : value_(std::move(v)) {}
  Geometry(MultiPolygon v) : value_(std::move(v)) {}

  static Geometry point(double x, double y) { return Point{Coordinate{x, y}}; }

  GeometryType type() const { return static_cast<GeometryType>(value_.index()); }
  const Variant& value() const { return value_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&value_);
  }

  bool is_empty() const;
  /// Every coordinate of the geometry in storage order.
  CoordinateSeq coordinates() const;
  /// Bounding box; undefined for empty geometries.
  Envelope envelope() const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

 private:
  Variant value_;
};

/// "Point", "LineString", ... as used in relation tuples.
std::string_view type_name(GeometryType t);
std::optional<GeometryType> parse_type_name(std::string_view name);

std::string_view geometry_type(const Geometry& g);
Dimension dimension(const Geometry& g);
int dimension_value(Dimension d);

enum class ViolationRule : std::uint8_t {
  NonFiniteCoordinate,
  TooFewPoints,
  ZeroLength,
  RingNotClosed,
  RingSelfIntersection,
  RingsCross,
  HoleOutsideShell,
};

std::string_view rule_name(ViolationRule r);

struct Violation {
  ViolationRule rule;
  /// Component (polygon / line) index within a multi geometry, else 0.
  int component = 0;
  /// Ring index (0 = shell) or -1 when not applicable.
  int ring = -1;
  /// Segment or coordinate index, -1 when not applicable.
  int index = -1;

  std::string describe() const;
};

/// Structural and simplicity checks. Empty result iff the geometry is valid.
std::vector<Violation> validate(const Geometry& g);
inline bool is_valid(const Geometry& g) { return validate(g).empty(); }

/// Signed area of a closed ring (positive for counter-clockwise).
double signed_area(const CoordinateSeq& ring);

}  // namespace toporel
