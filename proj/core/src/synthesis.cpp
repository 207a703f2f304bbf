#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "exact.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace {

double round_value(double v, int precision) {
  if (precision < 0) return v;
  const std::string s = format_number(v, precision);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

Coordinate round_coord(const Coordinate& c, int precision) {
  return {round_value(c.x, precision), round_value(c.y, precision)};
}

bool strictly_inside(const Coordinate& a, const Coordinate& b, const Coordinate& p) {
  return !(p == a) && !(p == b) && detail::orient(a, b, p) == 0 && detail::on_segment(a, b, p);
}

// A vertex strictly inside segment [a, b] that stays exactly collinear after
// rounding to `precision` (when precision >= 0).
std::optional<Coordinate> collinear_vertex(const Coordinate& a, const Coordinate& b, int precision, Rng& rng) {
  static constexpr double kFractions[] = {0.5, 0.25, 0.75, 0.375, 0.625, 0.125, 0.875};
  const Coordinate ra = round_coord(a, precision);
  const Coordinate rb = round_coord(b, precision);
  auto try_t = [&](double t) -> std::optional<Coordinate> {
    const Coordinate p = round_coord({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}, precision);
    if (!strictly_inside(a, b, p)) return std::nullopt;
    if (precision >= 0 && !strictly_inside(ra, rb, p)) return std::nullopt;
    return p;
  };
  for (int i = 0; i < 3; ++i) {
    if (auto p = try_t(rng.uniform01())) return p;
  }
  for (double t : kFractions) {
    if (auto p = try_t(t)) return p;
  }
  return std::nullopt;
}

// Inserts one collinear vertex into a random segment of seq, falling back to
// the other segments in a seeded order.
bool insert_vertex(CoordinateSeq& seq, int precision, Rng& rng) {
  const std::size_t nseg = seq.size() - 1;
  const std::size_t start = rng.uniform_int(nseg);
  for (std::size_t j = 0; j < nseg; ++j) {
    const std::size_t i = (start + j) % nseg;
    if (seq[i] == seq[i + 1]) continue;
    if (auto p = collinear_vertex(seq[i], seq[i + 1], precision, rng)) {
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(i) + 1, *p);
      return true;
    }
  }
  return false;
}

void densify(CoordinateSeq& seq, std::size_t count, int precision, Rng& rng) {
  for (std::size_t k = 0; k < count; ++k) {
    if (!insert_vertex(seq, precision, rng) && !insert_vertex(seq, kRoundTripPrecision, rng)) {
      throw SynthesisError("no segment admits an exactly collinear vertex");
    }
  }
}

std::size_t ten_percent(std::size_t n) { return (n + 9) / 10; }

CoordinateSeq rotate_ring(const CoordinateSeq& ring, std::size_t offset) {
  const std::size_t m = ring.size() - 1;
  CoordinateSeq out;
  out.reserve(ring.size());
  for (std::size_t i = 0; i < m; ++i) out.push_back(ring[(i + offset) % m]);
  out.push_back(out.front());
  return out;
}

}  // namespace

Geometry synthesize_equal(const Geometry& g, std::uint64_t seed, int precision) {
  if (g.type() != GeometryType::Point && g.type() != GeometryType::LineString &&
      g.type() != GeometryType::Polygon) {
    throw UnsupportedType("equals synthesis supports Point, LineString and Polygon, not " +
                          std::string(geometry_type(g)));
  }
  if (g.is_empty() || !is_valid(g)) throw InvalidGeometry("equals synthesis needs a valid non-empty geometry");
  if (g.type() == GeometryType::Point) return g;

  Rng rng(seed);
  Geometry result;
  if (const auto* l = g.get_if<LineString>()) {
    LineString out = *l;
    densify(out.coords, ten_percent(l->coords.size()), precision, rng);
    result = out;
  } else {
    const auto& p = *g.get_if<Polygon>();
    Polygon out;
    const std::size_t m = p.shell.size() - 1;
    out.shell = rotate_ring(p.shell, static_cast<std::size_t>(rng.uniform_range(1, static_cast<std::int64_t>(m) - 1)));
    densify(out.shell, ten_percent(m), precision, rng);
    for (const auto& h : p.holes) {
      CoordinateSeq hole = h;
      densify(hole, ten_percent(h.size() - 1), precision, rng);
      out.holes.push_back(std::move(hole));
    }
    result = out;
  }
  if (classify(g, result).predicate != Predicate::Equals) {
    throw SynthesisError("synthesized geometry is not equal to its source");
  }
  if (precision >= 0 &&
      classify(round_coordinates(g, precision), round_coordinates(result, precision)).predicate != Predicate::Equals) {
    throw SynthesisError("equality does not survive rounding to " + std::to_string(precision) + " decimals");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic scene corpus. Scenes are built in integer lattice units (1e-5
// degrees) relative to their tile, then mapped to exact 6-decimal values.

namespace {

constexpr std::int64_t kTile = 400;
constexpr std::int64_t kTilesPerRow = 100;
constexpr std::int64_t kMicroPerUnit = 10;

struct U {
  std::int64_t x;
  std::int64_t y;
};
using Path = std::vector<U>;

double lattice_value(std::int64_t micro) {
  char buf[48];
  const std::int64_t mag = micro < 0 ? -micro : micro;
  std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", micro < 0 ? "-" : "", static_cast<long long>(mag / 1000000),
                static_cast<long long>(mag % 1000000));
  double v = 0.0;
  std::from_chars(buf, buf + std::char_traits<char>::length(buf), v);
  return v;
}

struct Shape {
  GeometryType type;
  Path coords;  // Point: one; LineString: path; Polygon: closed CCW ring
};

Shape point_shape(U p) { return {GeometryType::Point, {p}}; }
Shape line_shape(Path p) { return {GeometryType::LineString, std::move(p)}; }
Shape ring_shape(Path p) {
  p.push_back(p.front());
  return {GeometryType::Polygon, std::move(p)};
}

// Polygon inside [x0,x0+w]x[y0,y0+h] whose lower-left quarter is guaranteed
// inside ("core").
struct Areal {
  Shape shape;
  std::int64_t x0, y0, w, h;
};

class SceneBuilder {
 public:
  explicit SceneBuilder(Rng& rng) : rng_(rng) {}

  std::int64_t r(std::int64_t lo, std::int64_t hi) { return rng_.uniform_range(lo, hi); }
  bool coin() { return rng_.uniform_int(2) == 0; }

  Areal polygon(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h) {
    const std::int64_t x1 = x0 + w, y1 = y0 + h;
    switch (rng_.uniform_int(3)) {
      case 0: return {ring_shape({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}), x0, y0, w, h};
      case 1: {
        const std::int64_t xm = x0 + w / 2 + r(0, w / 4);
        const std::int64_t ym = y0 + h / 2 + r(0, h / 4);
        return {ring_shape({{x0, y0}, {x1, y0}, {x1, ym}, {xm, ym}, {xm, y1}, {x0, y1}}), x0, y0, w, h};
      }
      default: {
        const std::int64_t c = r(1, std::min(w, h) / 2);
        return {ring_shape({{x0, y0}, {x1 - c, y0}, {x1, y0 + c}, {x1, y1}, {x0, y1}}), x0, y0, w, h};
      }
    }
  }

  Areal random_polygon() {
    const std::int64_t w = r(12, 50), h = r(12, 50);
    return polygon(r(20, 30), r(20, 30), w, h);
  }

  /// Monotone axis-aligned staircase, optionally ending in a diagonal step.
  Path staircase(U start, std::int64_t max_extent, std::size_t segments) {
    Path p{start};
    const std::int64_t dy = coin() ? 1 : -1;
    bool horizontal = coin();
    for (std::size_t i = 0; i < segments; ++i) {
      const std::int64_t len = r(3, std::max<std::int64_t>(4, max_extent / static_cast<std::int64_t>(segments)));
      U next = p.back();
      if (horizontal) {
        next.x += len;
      } else {
        next.y += dy * len;
      }
      p.push_back(next);
      horizontal = !horizontal;
    }
    if (coin()) p.push_back({p.back().x + r(2, 6), p.back().y + dy * r(2, 6)});
    return p;
  }

  Path random_line() { return staircase({r(10, 30), r(40, 60)}, 60, static_cast<std::size_t>(r(2, 4))); }

  /// Lattice point strictly inside an axis-aligned segment of the path.
  std::optional<std::pair<U, std::size_t>> point_on_axis_segment(const Path& p) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const bool axis = p[i].x == p[i + 1].x || p[i].y == p[i + 1].y;
      const std::int64_t len = std::abs(p[i + 1].x - p[i].x) + std::abs(p[i + 1].y - p[i].y);
      if (axis && len >= 2) candidates.push_back(i);
    }
    if (candidates.empty()) return std::nullopt;
    const std::size_t i = candidates[rng_.uniform_int(candidates.size())];
    const std::int64_t len = std::abs(p[i + 1].x - p[i].x) + std::abs(p[i + 1].y - p[i].y);
    const std::int64_t t = r(1, len - 1);
    const std::int64_t sx = p[i + 1].x > p[i].x ? 1 : (p[i + 1].x < p[i].x ? -1 : 0);
    const std::int64_t sy = p[i + 1].y > p[i].y ? 1 : (p[i + 1].y < p[i].y ? -1 : 0);
    return std::make_pair(U{p[i].x + sx * t, p[i].y + sy * t}, i);
  }

 private:
  Rng& rng_;
};

struct Scene {
  Shape subject;
  Shape object;
};

using SceneFn = std::function<std::optional<Scene>(SceneBuilder&)>;

struct SceneKind {
  const char* name;
  Predicate predicate;
  SceneFn build;
};

std::vector<U> ring_vertices(const Shape& s) { return Path(s.coords.begin(), s.coords.end() - 1); }

std::vector<SceneKind> scene_kinds() {
  using P = Predicate;
  std::vector<SceneKind> kinds;

  kinds.push_back({"point-within-line", P::Within, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    if (line.size() > 2 && b.coin()) {
      return Scene{point_shape(line[static_cast<std::size_t>(b.r(1, static_cast<std::int64_t>(line.size()) - 2))]),
                   line_shape(line)};
    }
    auto on = b.point_on_axis_segment(line);
    if (!on) return std::nullopt;
    return Scene{point_shape(on->first), line_shape(line)};
  }});
  kinds.push_back({"point-within-polygon", P::Within, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    return Scene{point_shape({a.x0 + b.r(1, a.w / 2 - 1), a.y0 + b.r(1, a.h / 2 - 1)}), a.shape};
  }});
  kinds.push_back({"line-within-line", P::Within, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    if (line.size() > 2 && b.coin()) {
      const std::size_t i = static_cast<std::size_t>(b.r(0, static_cast<std::int64_t>(line.size()) - 2));
      const std::size_t j = static_cast<std::size_t>(b.r(static_cast<std::int64_t>(i) + 1,
                                                         static_cast<std::int64_t>(line.size()) - 1));
      if (i == 0 && j == line.size() - 1) return std::nullopt;
      return Scene{line_shape(Path(line.begin() + static_cast<std::ptrdiff_t>(i),
                                   line.begin() + static_cast<std::ptrdiff_t>(j) + 1)),
                   line_shape(line)};
    }
    auto on = b.point_on_axis_segment(line);
    if (!on) return std::nullopt;
    return Scene{line_shape({line[on->second], on->first}), line_shape(line)};
  }});
  kinds.push_back({"line-within-polygon", P::Within, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const std::int64_t cw = a.w / 2, ch = a.h / 2;
    Path line{{a.x0 + b.r(1, cw / 3), a.y0 + b.r(1, ch - 1)}};
    line.push_back({a.x0 + b.r(cw / 3 + 1, cw - 1), line.back().y});
    if (b.coin()) line.push_back({line.back().x, a.y0 + b.r(1, ch - 1)});
    if (line.back().x == line[line.size() - 2].x && line.back().y == line[line.size() - 2].y) line.pop_back();
    return Scene{line_shape(line), a.shape};
  }});
  kinds.push_back({"polygon-within-polygon", P::Within, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const std::int64_t cw = a.w / 2, ch = a.h / 2;
    const bool shared = b.coin();
    const std::int64_t x0 = shared ? a.x0 : a.x0 + b.r(1, cw / 3);
    const std::int64_t y0 = a.y0 + b.r(1, ch / 3);
    const std::int64_t x1 = x0 + b.r(2, cw - (x0 - a.x0) - 1);
    const std::int64_t y1 = y0 + b.r(2, ch - (y0 - a.y0) - 1);
    return Scene{ring_shape({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}), a.shape};
  }});
  kinds.push_back({"line-overlaps-line", P::Overlaps, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    std::vector<std::size_t> long_axis;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const bool axis = line[i].x == line[i + 1].x || line[i].y == line[i + 1].y;
      if (axis && std::abs(line[i + 1].x - line[i].x) + std::abs(line[i + 1].y - line[i].y) >= 4) long_axis.push_back(i);
    }
    if (long_axis.empty()) return std::nullopt;
    const std::size_t i = long_axis[static_cast<std::size_t>(b.r(0, static_cast<std::int64_t>(long_axis.size()) - 1))];
    const U a = line[i], c = line[i + 1];
    const std::int64_t len = std::abs(c.x - a.x) + std::abs(c.y - a.y);
    const std::int64_t t0 = b.r(1, len / 2), t1 = b.r(len / 2 + 1, len - 1);
    const std::int64_t sx = c.x > a.x ? 1 : (c.x < a.x ? -1 : 0);
    const std::int64_t sy = c.y > a.y ? 1 : (c.y < a.y ? -1 : 0);
    const U p{a.x + sx * t0, a.y + sy * t0}, q{a.x + sx * t1, a.y + sy * t1};
    const std::int64_t side = b.coin() ? 1 : -1;
    const U off{-sy * side, sx * side};  // perpendicular
    const std::int64_t d1 = b.r(3, 15), d2 = b.r(3, 15);
    return Scene{line_shape({{p.x + off.x * d1, p.y + off.y * d1}, p, q, {q.x + off.x * d2, q.y + off.y * d2}}),
                 line_shape(line)};
  }});
  kinds.push_back({"polygon-overlaps-polygon", P::Overlaps, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const std::int64_t x0 = a.x0 + b.r(1, a.w / 2 - 1), y0 = a.y0 + b.r(1, a.h / 2 - 1);
    const std::int64_t x1 = a.x0 + a.w + b.r(1, 20), y1 = a.y0 + a.h + b.r(1, 20);
    return Scene{ring_shape({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}), a.shape};
  }});
  kinds.push_back({"point-touches-line", P::Touches, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    return Scene{point_shape(b.coin() ? line.front() : line.back()), line_shape(line)};
  }});
  kinds.push_back({"point-touches-polygon", P::Touches, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    if (b.coin()) {
      auto v = ring_vertices(a.shape);
      return Scene{point_shape(v[static_cast<std::size_t>(b.r(0, static_cast<std::int64_t>(v.size()) - 1))]), a.shape};
    }
    return Scene{point_shape({a.x0, a.y0 + b.r(1, a.h - 1)}), a.shape};
  }});
  kinds.push_back({"line-touches-line", P::Touches, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    if (b.coin()) {
      const U e = line.front();
      const std::int64_t len = b.r(3, 20);
      return Scene{line_shape({e, {e.x - len, e.y + (b.coin() ? 0 : b.r(1, 10))}}), line_shape(line)};
    }
    auto on = b.point_on_axis_segment(line);
    if (!on) return std::nullopt;
    const U a = line[on->second], c = line[on->second + 1];
    const std::int64_t side = b.coin() ? 1 : -1;
    const std::int64_t len = b.r(3, 20);
    const U end = a.y == c.y ? U{on->first.x, on->first.y + side * len} : U{on->first.x + side * len, on->first.y};
    return Scene{line_shape({on->first, end}), line_shape(line)};
  }});
  kinds.push_back({"line-touches-polygon", P::Touches, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const U start = b.coin() ? U{a.x0, a.y0 + b.r(0, a.h)} : U{a.x0 + b.r(0, a.w / 2), a.y0};
    const bool left = start.x == a.x0 && start.y != a.y0;
    const std::int64_t len = b.r(3, 15);
    const U mid = left ? U{start.x - len, start.y} : U{start.x, start.y - len};
    Path line{start, mid};
    if (b.coin()) line.push_back({mid.x - b.r(2, 8), mid.y - b.r(2, 8)});
    return Scene{line_shape(line), a.shape};
  }});
  kinds.push_back({"polygon-touches-polygon", P::Touches, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const std::int64_t w = b.r(3, 20);
    if (b.coin()) {
      const std::int64_t y0 = a.y0 + b.r(-10, a.h / 2), y1 = std::max(y0 + 2, a.y0 + b.r(1, a.h));
      return Scene{ring_shape({{a.x0 - w, y0}, {a.x0, y0}, {a.x0, y1}, {a.x0 - w, y1}}), a.shape};
    }
    const std::int64_t h = b.r(3, 20);
    return Scene{ring_shape({{a.x0 - w, a.y0 - h}, {a.x0, a.y0 - h}, {a.x0, a.y0}, {a.x0 - w, a.y0}}), a.shape};
  }});
  kinds.push_back({"line-crosses-line", P::Crosses, [](SceneBuilder& b) -> std::optional<Scene> {
    Path line = b.random_line();
    auto on = b.point_on_axis_segment(line);
    if (!on) return std::nullopt;
    const U a = line[on->second], c = line[on->second + 1];
    const std::int64_t d1 = b.r(2, 12), d2 = b.r(2, 12);
    Path cross;
    if (a.y == c.y) {
      cross = {{on->first.x, on->first.y - d1}, {on->first.x, on->first.y + d2}};
    } else {
      cross = {{on->first.x - d1, on->first.y}, {on->first.x + d2, on->first.y}};
    }
    if (b.coin()) cross.push_back({cross.back().x + b.r(1, 5), cross.back().y + b.r(1, 5)});
    return Scene{line_shape(cross), line_shape(line)};
  }});
  kinds.push_back({"line-crosses-polygon", P::Crosses, [](SceneBuilder& b) -> std::optional<Scene> {
    Areal a = b.random_polygon();
    const U in{a.x0 + b.r(1, a.w / 2 - 1), a.y0 + b.r(1, a.h / 2 - 1)};
    const U out{a.x0 - b.r(2, 15), in.y};
    Path line{in, out};
    if (b.coin()) line.push_back({out.x - b.r(1, 6), out.y + b.r(1, 6)});
    return Scene{line_shape(line), a.shape};
  }});

  // Disjoint scenes: the subject lies right of the object's bounding box, at
  // most 60 units (0.0006 degrees) away.
  auto disjoint = [](const char* name, GeometryType ta, GeometryType tb) {
    return SceneKind{name, P::Disjoint, [ta, tb](SceneBuilder& b) -> std::optional<Scene> {
      auto make = [&](GeometryType t, std::int64_t x0, std::int64_t y0) -> Shape {
        switch (t) {
          case GeometryType::Point: return point_shape({x0, y0 + b.r(0, 20)});
          case GeometryType::LineString: return line_shape(b.staircase({x0, y0 + b.r(0, 20)}, 30, 2));
          default: return b.polygon(x0, y0, b.r(8, 30), b.r(8, 30)).shape;
        }
      };
      Shape object = make(tb, 10, 20);
      std::int64_t max_x = 0;
      for (const auto& u : object.coords) max_x = std::max(max_x, u.x);
      Shape subject = make(ta, max_x + b.r(5, 40), 20);
      return Scene{subject, object};
    }};
  };
  kinds.push_back(disjoint("point-disjoint-point", GeometryType::Point, GeometryType::Point));
  kinds.push_back(disjoint("point-disjoint-line", GeometryType::Point, GeometryType::LineString));
  kinds.push_back(disjoint("point-disjoint-polygon", GeometryType::Point, GeometryType::Polygon));
  kinds.push_back(disjoint("line-disjoint-line", GeometryType::LineString, GeometryType::LineString));
  kinds.push_back(disjoint("line-disjoint-polygon", GeometryType::LineString, GeometryType::Polygon));
  kinds.push_back(disjoint("polygon-disjoint-polygon", GeometryType::Polygon, GeometryType::Polygon));
  return kinds;
}

Geometry to_geometry(const Shape& s, std::int64_t tile_x, std::int64_t tile_y, const SyntheticCorpusOptions& o) {
  CoordinateSeq coords;
  for (const auto& u : s.coords) {
    coords.push_back({lattice_value(o.origin_x_micro + (tile_x + u.x) * kMicroPerUnit),
                      lattice_value(o.origin_y_micro + (tile_y + u.y) * kMicroPerUnit)});
  }
  switch (s.type) {
    case GeometryType::Point: return Point{coords.front()};
    case GeometryType::LineString: return LineString{coords};
    default: return Polygon{coords, {}};
  }
}

std::string_view place_type_for(GeometryType t) {
  switch (t) {
    case GeometryType::Point: return "poi";
    case GeometryType::LineString: return "road";
    default: return "parcel";
  }
}

}  // namespace

Corpus synthesize_corpus(const SyntheticCorpusOptions& options) {
  Corpus corpus;
  const auto kinds = scene_kinds();
  std::int64_t tile = 0;
  for (const auto& kind : kinds) {
    Rng rng(derive_seed(options.seed, kind.name));
    SceneBuilder builder(rng);
    for (std::size_t k = 0; k < options.scenes_per_kind; ++k, ++tile) {
      const std::int64_t tx = (tile % kTilesPerRow) * kTile;
      const std::int64_t ty = (tile / kTilesPerRow) * kTile;
      std::optional<std::pair<Geometry, Geometry>> made;
      for (int attempt = 0; attempt < 100 && !made; ++attempt) {
        auto scene = kind.build(builder);
        if (!scene) continue;
        Geometry a = to_geometry(scene->subject, tx, ty, options);
        Geometry b = to_geometry(scene->object, tx, ty, options);
        if (!is_valid(a) || !is_valid(b)) continue;
        if (classify(a, b).predicate == kind.predicate) made.emplace(std::move(a), std::move(b));
      }
      if (!made) throw SynthesisError(std::string("could not build a ") + kind.name + " scene");
      char id[32];
      std::snprintf(id, sizeof(id), "syn%06lld", static_cast<long long>(tile));
      for (int role = 0; role < 2; ++role) {
        SpatialEntity e;
        e.id = std::string(id) + (role == 0 ? "a" : "b");
        e.geometry = role == 0 ? made->first : made->second;
        e.name = std::string(kind.name) + " " + std::to_string(k) + (role == 0 ? " subject" : " object");
        e.place_type = std::string(place_type_for(e.geometry.type()));
        e.source = "synthetic";
        corpus.add(std::move(e));
      }
    }
  }
  return corpus;
}

}  // namespace toporel
