#include "toporel/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "exact.hpp"

namespace toporel {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void append(CoordinateSeq& out, const CoordinateSeq& in) { out.insert(out.end(), in.begin(), in.end()); }

void append_polygon(CoordinateSeq& out, const Polygon& p) {
  append(out, p.shell);
  for (const auto& h : p.holes) append(out, h);
}

}  // namespace

bool Geometry::is_empty() const {
  return std::visit(
      Overloaded{
          [](const Point& p) { return !p.coord.has_value(); },
          [](const LineString& l) { return l.coords.empty(); },
          [](const Polygon& p) { return p.shell.empty(); },
          [](const MultiPoint& m) { return m.points.empty(); },
          [](const MultiLineString& m) {
            return std::all_of(m.lines.begin(), m.lines.end(),
                               [](const LineString& l) { return l.coords.empty(); });
          },
          [](const MultiPolygon& m) {
            return std::all_of(m.polygons.begin(), m.polygons.end(),
                               [](const Polygon& p) { return p.shell.empty(); });
          },
      },
      value_);
}

CoordinateSeq Geometry::coordinates() const {
  CoordinateSeq out;
  std::visit(Overloaded{
                 [&](const Point& p) {
                   if (p.coord) out.push_back(*p.coord);
                 },
                 [&](const LineString& l) { append(out, l.coords); },
                 [&](const Polygon& p) { append_polygon(out, p); },
                 [&](const MultiPoint& m) { append(out, m.points); },
                 [&](const MultiLineString& m) {
                   for (const auto& l : m.lines) append(out, l.coords);
                 },
                 [&](const MultiPolygon& m) {
                   for (const auto& p : m.polygons) append_polygon(out, p);
                 },
             },
             value_);
  return out;
}

Envelope Geometry::envelope() const {
  Envelope e{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Coordinate& c : coordinates()) {
    e.min_x = std::min(e.min_x, c.x);
    e.min_y = std::min(e.min_y, c.y);
    e.max_x = std::max(e.max_x, c.x);
    e.max_y = std::max(e.max_y, c.y);
  }
  return e;
}

std::string_view type_name(GeometryType t) {
  switch (t) {
    case GeometryType::Point: return "Point";
    case GeometryType::LineString: return "LineString";
    case GeometryType::Polygon: return "Polygon";
    case GeometryType::MultiPoint: return "MultiPoint";
    case GeometryType::MultiLineString: return "MultiLineString";
    case GeometryType::MultiPolygon: return "MultiPolygon";
  }
  return "Unknown";
}

std::optional<GeometryType> parse_type_name(std::string_view name) {
  std::string key;
  for (char ch : name) {
    if (ch == ' ' || ch == '_' || ch == '-') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  static constexpr std::array<std::pair<std::string_view, GeometryType>, 6> kNames{{
      {"point", GeometryType::Point},
      {"linestring", GeometryType::LineString},
      {"polygon", GeometryType::Polygon},
      {"multipoint", GeometryType::MultiPoint},
      {"multilinestring", GeometryType::MultiLineString},
      {"multipolygon", GeometryType::MultiPolygon},
  }};
  for (const auto& [n, t] : kNames) {
    if (key == n) return t;
  }
  return std::nullopt;
}

std::string_view geometry_type(const Geometry& g) { return type_name(g.type()); }

Dimension dimension(const Geometry& g) {
  if (g.is_empty()) return Dimension::Empty;
  switch (g.type()) {
    case GeometryType::Point:
    case GeometryType::MultiPoint: return Dimension::Zero;
    case GeometryType::LineString:
    case GeometryType::MultiLineString: return Dimension::One;
    case GeometryType::Polygon:
    case GeometryType::MultiPolygon: return Dimension::Two;
  }
  return Dimension::Empty;
}

int dimension_value(Dimension d) { return static_cast<int>(d); }

std::string_view rule_name(ViolationRule r) {
  switch (r) {
    case ViolationRule::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ViolationRule::TooFewPoints: return "TooFewPoints";
    case ViolationRule::ZeroLength: return "ZeroLength";
    case ViolationRule::RingNotClosed: return "RingNotClosed";
    case ViolationRule::RingSelfIntersection: return "RingSelfIntersection";
    case ViolationRule::RingsCross: return "RingsCross";
    case ViolationRule::HoleOutsideShell: return "HoleOutsideShell";
  }
  return "Unknown";
}

std::string Violation::describe() const {
  std::string s(rule_name(rule));
  s += " (component " + std::to_string(component);
  if (ring >= 0) s += ", ring " + std::to_string(ring);
  if (index >= 0) s += ", index " + std::to_string(index);
  s += ")";
  return s;
}

double signed_area(const CoordinateSeq& ring) {
  if (ring.size() < 3) return 0.0;
  // Shoelace about the first vertex to limit cancellation.
  const Coordinate& o = ring.front();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
    const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
    sum += ax * by - bx * ay;
  }
  return sum / 2.0;
}

namespace {

using detail::orient;

bool finite(const Coordinate& c) { return std::isfinite(c.x) && std::isfinite(c.y); }

/// Ring with consecutive duplicates removed (still closed).
CoordinateSeq dedup(const CoordinateSeq& ring) {
  CoordinateSeq out;
  for (const auto& c : ring) {
    if (out.empty() || !(out.back() == c)) out.push_back(c);
  }
  return out;
}

// Collinear overlap of two segments that share the endpoint `shared`, where
// `a` and `b` are the other endpoints.
bool folds_back(const Coordinate& shared, const Coordinate& a, const Coordinate& b) {
  if (orient(shared, a, b) != 0) return false;
  const double dot = (a.x - shared.x) * (b.x - shared.x) + (a.y - shared.y) * (b.y - shared.y);
  if (dot > 0) return true;
  if (dot < 0) return false;
  // Dot product underflow/cancellation: decide exactly.
  detail::XPoint s(shared), xa(a), xb(b);
  mpq_class d = (xa.x - s.x) * (xb.x - s.x) + (xa.y - s.y) * (xb.y - s.y);
  return sgn(d) > 0;
}

bool ring_simple(const CoordinateSeq& raw, int* bad_segment) {
  const CoordinateSeq ring = dedup(raw);
  const std::size_t n = ring.size() - 1;  // number of segments
  if (n < 3) {
    *bad_segment = 0;
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Coordinate& a = ring[i];
    const Coordinate& b = ring[i + 1];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Coordinate& c = ring[j];
      const Coordinate& d = ring[j + 1];
      const bool adjacent_next = (j == i + 1);
      const bool adjacent_wrap = (i == 0 && j == n - 1);
      if (adjacent_next) {
        if (folds_back(b, a, d)) {
          *bad_segment = static_cast<int>(j);
          return false;
        }
        continue;
      }
      if (adjacent_wrap) {
        if (folds_back(a, b, c)) {
          *bad_segment = static_cast<int>(j);
          return false;
        }
        continue;
      }
      if (detail::segments_intersect(a, b, c, d)) {
        *bad_segment = static_cast<int>(j);
        return false;
      }
    }
  }
  return true;
}

// Rings of one polygon may touch at isolated points but must not cross or
// share an edge.
bool rings_cross(const CoordinateSeq& r1, const CoordinateSeq& r2, int* bad_segment) {
  for (std::size_t i = 0; i + 1 < r1.size(); ++i) {
    const Coordinate& a = r1[i];
    const Coordinate& b = r1[i + 1];
    if (a == b) continue;
    for (std::size_t j = 0; j + 1 < r2.size(); ++j) {
      const Coordinate& c = r2[j];
      const Coordinate& d = r2[j + 1];
      if (c == d) continue;
      if (!detail::segments_intersect(a, b, c, d)) continue;
      const int o1 = orient(a, b, c), o2 = orient(a, b, d);
      const int o3 = orient(c, d, a), o4 = orient(c, d, b);
      if (o1 == 0 && o2 == 0) {
        // Collinear: crossing only if they share more than a single point.
        detail::XPoint xa(a), xb(b), xc(c), xd(d);
        if (detail::intersect(xa, xb, xc, xd).relation == detail::SegmentRelation::Overlap) {
          *bad_segment = static_cast<int>(j);
          return true;
        }
        continue;
      }
      if (o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
        *bad_segment = static_cast<int>(j);
        return true;
      }
    }
  }
  return false;
}

void validate_line(const LineString& l, int component, std::vector<Violation>& out) {
  for (std::size_t i = 0; i < l.coords.size(); ++i) {
    if (!finite(l.coords[i])) {
      out.push_back({ViolationRule::NonFiniteCoordinate, component, -1, static_cast<int>(i)});
      return;
    }
  }
  if (l.coords.size() < 2) {
    out.push_back({ViolationRule::TooFewPoints, component, -1, static_cast<int>(l.coords.size())});
    return;
  }
  const bool all_same = std::all_of(l.coords.begin(), l.coords.end(),
                                    [&](const Coordinate& c) { return c == l.coords.front(); });
  if (all_same) out.push_back({ViolationRule::ZeroLength, component, -1, 0});
}

void validate_polygon(const Polygon& p, int component, std::vector<Violation>& out) {
  std::vector<const CoordinateSeq*> rings{&p.shell};
  for (const auto& h : p.holes) rings.push_back(&h);

  bool structural_ok = true;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const CoordinateSeq& ring = *rings[r];
    const int ri = static_cast<int>(r);
    bool ok = true;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (!finite(ring[i])) {
        out.push_back({ViolationRule::NonFiniteCoordinate, component, ri, static_cast<int>(i)});
        ok = false;
        break;
      }
    }
    if (!ok) {
      structural_ok = false;
      continue;
    }
    if (ring.size() < 4) {
      out.push_back({ViolationRule::TooFewPoints, component, ri, static_cast<int>(ring.size())});
      structural_ok = false;
      continue;
    }
    if (!(ring.front() == ring.back())) {
      out.push_back({ViolationRule::RingNotClosed, component, ri, static_cast<int>(ring.size() - 1)});
      structural_ok = false;
      continue;
    }
    int bad = -1;
    if (!ring_simple(ring, &bad)) {
      out.push_back({ViolationRule::RingSelfIntersection, component, ri, bad});
      structural_ok = false;
    }
  }
  if (!structural_ok) return;

  for (std::size_t r = 1; r < rings.size(); ++r) {
    for (std::size_t s = 0; s < r; ++s) {
      int bad = -1;
      if (rings_cross(*rings[s], *rings[r], &bad)) {
        out.push_back({ViolationRule::RingsCross, component, static_cast<int>(r), bad});
      }
    }
  }
  for (std::size_t h = 0; h < p.holes.size(); ++h) {
    const CoordinateSeq& hole = p.holes[h];
    for (std::size_t i = 0; i + 1 < hole.size(); ++i) {
      if (detail::locate_in_ring(p.shell, hole[i]) < 0) {
        out.push_back({ViolationRule::HoleOutsideShell, component, static_cast<int>(h + 1),
                       static_cast<int>(i)});
        break;
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate(const Geometry& g) {
  std::vector<Violation> out;
  std::visit(Overloaded{
                 [&](const Point& p) {
                   if (p.coord && !finite(*p.coord)) {
                     out.push_back({ViolationRule::NonFiniteCoordinate, 0, -1, 0});
                   }
                 },
                 [&](const LineString& l) {
                   if (!l.coords.empty()) validate_line(l, 0, out);
                 },
                 [&](const Polygon& p) {
                   if (!p.shell.empty()) validate_polygon(p, 0, out);
                 },
                 [&](const MultiPoint& m) {
                   for (std::size_t i = 0; i < m.points.size(); ++i) {
                     if (!finite(m.points[i])) {
                       out.push_back({ViolationRule::NonFiniteCoordinate, static_cast<int>(i), -1, 0});
                     }
                   }
                 },
                 [&](const MultiLineString& m) {
                   for (std::size_t i = 0; i < m.lines.size(); ++i) {
                     validate_line(m.lines[i], static_cast<int>(i), out);
                   }
                 },
                 [&](const MultiPolygon& m) {
                   for (std::size_t i = 0; i < m.polygons.size(); ++i) {
                     validate_polygon(m.polygons[i], static_cast<int>(i), out);
                   }
                 },
             },
             g.value());
  return out;
}

}  // namespace toporel
