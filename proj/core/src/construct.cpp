#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "toporel/topology.hpp"
#include "topology_impl.hpp"

namespace toporel {

namespace {

using Seg = std::pair<Coordinate, Coordinate>;

constexpr std::array<Coordinate, 8> kDirections{{
    {1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

Coordinate offset(const Coordinate& p, const Coordinate& dir, double s) {
  return {p.x + dir.x * s, p.y + dir.y * s};
}

void ring_segments(const CoordinateSeq& ring, std::vector<Seg>& out) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    if (!(ring[i] == ring[i + 1])) out.emplace_back(ring[i], ring[i + 1]);
  }
}

std::vector<Seg> segments_of(const Geometry& g) {
  std::vector<Seg> out;
  if (const auto* l = g.get_if<LineString>()) ring_segments(l->coords, out);
  if (const auto* m = g.get_if<MultiLineString>()) {
    for (const auto& l : m->lines) ring_segments(l.coords, out);
  }
  auto polygon = [&](const Polygon& p) {
    ring_segments(p.shell, out);
    for (const auto& h : p.holes) ring_segments(h, out);
  };
  if (const auto* p = g.get_if<Polygon>()) polygon(*p);
  if (const auto* m = g.get_if<MultiPolygon>()) {
    for (const auto& p : m->polygons) polygon(p);
  }
  return out;
}

// Points strictly inside [a, b] that are exactly collinear with it in doubles.
std::vector<Coordinate> exact_points_along(const Coordinate& a, const Coordinate& b) {
  static constexpr std::array<double, 7> kFractions{0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875};
  std::vector<Coordinate> out;
  for (double t : kFractions) {
    const Coordinate p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    if (p == a || p == b) continue;
    if (detail::orient(a, b, p) == 0 && detail::on_segment(a, b, p)) {
      out.push_back(p);
      if (out.size() == 2) break;
    }
  }
  return out;
}

std::optional<Coordinate> interior_point_of(const Polygon& poly) {
  std::vector<double> ys;
  for (const auto& c : poly.shell) ys.push_back(c.y);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (ys.size() < 2) return std::nullopt;
  std::vector<Seg> segs;
  ring_segments(poly.shell, segs);
  for (const auto& h : poly.holes) ring_segments(h, segs);

  // Scanlines between consecutive vertex heights, starting from the middle.
  std::vector<std::size_t> order;
  const std::size_t mid = (ys.size() - 1) / 2;
  for (std::size_t k = 0; k < ys.size() - 1; ++k) {
    if (mid + k < ys.size() - 1) order.push_back(mid + k);
    if (k > 0 && k <= mid) order.push_back(mid - k);
  }
  const PreparedGeometry prepared{Geometry(poly)};
  for (std::size_t i : order) {
    const double y = ys[i] + (ys[i + 1] - ys[i]) / 2;
    if (!(y > ys[i] && y < ys[i + 1])) continue;
    std::vector<double> xs;
    for (const auto& [a, b] : segs) {
      if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    double best = -1;
    std::optional<Coordinate> candidate;
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double w = xs[k + 1] - xs[k];
      if (w > best) {
        best = w;
        candidate = Coordinate{xs[k] + w / 2, y};
      }
    }
    if (candidate && prepared.impl().locate(detail::XPoint(*candidate)) == Location::Interior) return candidate;
  }
  return std::nullopt;
}

Polygon box(double x0, double y0, double x1, double y1) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}};
}

class Search {
 public:
  Search(const Geometry& ref, GeometryType type, Predicate pred)
      : ref_(ref), type_(type), pred_(pred) {}

  /// Records g if it has the wanted type and relation; true once a result exists.
  bool offer(const Geometry& g) {
    if (result_) return true;
    if (g.type() != type_ || !is_valid(g)) return false;
    const auto c = classify(PreparedGeometry(g), ref_);
    if (c.predicate == pred_) result_ = g;
    return result_.has_value();
  }

  std::optional<Geometry> result() const { return result_; }

 private:
  PreparedGeometry ref_;
  GeometryType type_;
  Predicate pred_;
  std::optional<Geometry> result_;
};

struct Anchors {
  std::vector<Coordinate> vertices;  // every reference coordinate
  std::vector<Coordinate> along;     // exact points inside reference segments
  std::vector<Coordinate> inside;    // interior points of areal references
  std::vector<Seg> segments;
  Envelope env;
  std::vector<double> scales;        // decreasing candidate sizes
};

Anchors anchors_of(const Geometry& ref) {
  Anchors a;
  a.vertices = ref.coordinates();
  std::sort(a.vertices.begin(), a.vertices.end(),
            [](const Coordinate& p, const Coordinate& q) { return p.x != q.x ? p.x < q.x : p.y < q.y; });
  a.vertices.erase(std::unique(a.vertices.begin(), a.vertices.end()), a.vertices.end());
  a.segments = segments_of(ref);
  for (const auto& [p, q] : a.segments) {
    for (const auto& c : exact_points_along(p, q)) a.along.push_back(c);
  }
  if (const auto* p = ref.get_if<Polygon>()) {
    if (auto c = interior_point_of(*p)) a.inside.push_back(*c);
  }
  if (const auto* m = ref.get_if<MultiPolygon>()) {
    for (const auto& p : m->polygons) {
      if (auto c = interior_point_of(p)) a.inside.push_back(*c);
    }
  }
  a.env = ref.envelope();
  double scale = std::max(a.env.max_x - a.env.min_x, a.env.max_y - a.env.min_y);
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& [p, q] : a.segments) shortest = std::min(shortest, std::hypot(q.x - p.x, q.y - p.y));
  if (!(scale > 0)) scale = 1e-3;
  double s = std::min(scale, shortest) * 0.25;
  for (int k = 0; k < 14; ++k, s /= 2) a.scales.push_back(s);
  return a;
}

bool construct_point(Search& search, const Anchors& a) {
  for (const auto& list : {a.vertices, a.along, a.inside}) {
    for (const auto& c : list) {
      if (search.offer(Point{c})) return true;
    }
  }
  for (double s : a.scales) {
    if (search.offer(Geometry::point(a.env.max_x + s, a.env.max_y + s))) return true;
  }
  return false;
}

bool construct_line(Search& search, const Geometry& ref, const Anchors& a) {
  if (search.offer(ref)) return true;
  const double s0 = a.scales.front();
  const double far = a.env.max_x + s0;
  if (const auto* l = ref.get_if<LineString>()) {
    const auto& c = l->coords;
    // Sub-lines and collinear-prefix lines that diverge or extend.
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      if (c.size() > 2 && search.offer(LineString{{c[i], c[i + 1]}})) return true;
      for (const auto& m : exact_points_along(c[i], c[i + 1])) {
        if (search.offer(LineString{{c[i], m}})) return true;
        for (const auto& d : kDirections) {
          if (search.offer(LineString{{m, c[i + 1], offset(c[i + 1], d, s0)}})) return true;
        }
      }
      for (const auto& d : kDirections) {
        if (i + 2 < c.size() && search.offer(LineString{{c[i], c[i + 1], offset(c[i + 1], d, s0)}})) return true;
      }
    }
    for (const auto& d1 : kDirections) {
      for (const auto& d2 : kDirections) {
        CoordinateSeq ext;
        ext.push_back(offset(c.front(), d1, s0));
        ext.insert(ext.end(), c.begin(), c.end());
        ext.push_back(offset(c.back(), d2, s0));
        if (search.offer(LineString{ext})) return true;
      }
    }
  }
  for (const auto& p : a.inside) {
    if (search.offer(LineString{{p, {far + s0, p.y}}})) return true;
  }
  for (double s : a.scales) {
    for (const auto& list : {a.vertices, a.along, a.inside}) {
      for (const auto& p : list) {
        if (search.offer(LineString{{{p.x - s, p.y}, {p.x + s, p.y}}})) return true;
        for (const auto& d : kDirections) {
          if (search.offer(LineString{{p, offset(p, d, s)}})) return true;
        }
        for (std::size_t i = 0; i < kDirections.size(); ++i) {
          for (std::size_t j = i + 1; j < kDirections.size(); ++j) {
            if (search.offer(LineString{{offset(p, kDirections[i], s), p, offset(p, kDirections[j], s)}})) {
              return true;
            }
          }
        }
      }
    }
  }
  for (double s : a.scales) {
    if (search.offer(LineString{{{far + s, a.env.max_y + s}, {far + 2 * s, a.env.max_y + s}}})) return true;
  }
  return false;
}

bool construct_polygon(Search& search, const Geometry& ref, const Anchors& a) {
  if (ref.type() == GeometryType::Polygon && search.offer(ref)) return true;
  const double s0 = a.scales.front();
  if (search.offer(box(a.env.min_x - s0, a.env.min_y - s0, a.env.max_x + s0, a.env.max_y + s0))) return true;
  for (double s : a.scales) {
    for (const auto& list : {a.inside, a.vertices, a.along}) {
      for (const auto& p : list) {
        if (search.offer(box(p.x - s, p.y - s, p.x + s, p.y + s))) return true;
        for (int qx : {1, -1}) {
          for (int qy : {1, -1}) {
            if (search.offer(box(p.x, p.y, p.x + qx * s, p.y + qy * s))) return true;
          }
        }
      }
    }
  }
  for (double s : a.scales) {
    const double x = a.env.max_x + s;
    const double y = a.env.max_y + s;
    if (search.offer(box(x, y, x + s, y + s))) return true;
  }
  return false;
}

double point_segment_distance(const Coordinate& p, const Coordinate& a, const Coordinate& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

}  // namespace

std::optional<Coordinate> interior_point(const Geometry& g) {
  if (const auto* p = g.get_if<Polygon>()) {
    if (p->shell.empty()) return std::nullopt;
    return interior_point_of(*p);
  }
  if (const auto* m = g.get_if<MultiPolygon>()) {
    for (const auto& p : m->polygons) {
      if (auto c = interior_point_of(p)) return c;
    }
  }
  return std::nullopt;
}

std::optional<Geometry> construct_related(const Geometry& reference, GeometryType subject_type,
                                          Predicate predicate) {
  if (reference.is_empty() || !is_valid(reference)) return std::nullopt;
  Search search(reference, subject_type, predicate);
  const Anchors a = anchors_of(reference);
  switch (subject_type) {
    case GeometryType::Point: construct_point(search, a); break;
    case GeometryType::LineString: construct_line(search, reference, a); break;
    case GeometryType::Polygon: construct_polygon(search, reference, a); break;
    default: return std::nullopt;
  }
  return search.result();
}

double distance(const Geometry& a, const Geometry& b) {
  const auto c = classify(a, b);
  if (c.predicate != Predicate::Disjoint) return 0.0;
  const auto pa = a.coordinates();
  const auto pb = b.coordinates();
  const auto sa = segments_of(a);
  const auto sb = segments_of(b);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pa) {
    for (const auto& q : pb) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
    for (const auto& [s, t] : sb) best = std::min(best, point_segment_distance(p, s, t));
  }
  for (const auto& q : pb) {
    for (const auto& [s, t] : sa) best = std::min(best, point_segment_distance(q, s, t));
  }
  return best;
}

}  // namespace toporel
