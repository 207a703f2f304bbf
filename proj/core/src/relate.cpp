#include <algorithm>
#include <cmath>
#include <map>

#include "toporel/error.hpp"
#include "toporel/wkt.hpp"
#include "topology_impl.hpp"

namespace toporel {

using detail::XPoint;

namespace {

constexpr Location kI = Location::Interior;
constexpr Location kB = Location::Boundary;
constexpr Location kE = Location::Exterior;

Envelope segment_env(const Coordinate& a, const Coordinate& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
}

// Slightly widened envelope of an exact point, used only as a conservative filter.
Envelope approx_env(const XPoint& p) {
  const double x = p.approx_x();
  const double y = p.approx_y();
  const double tx = 1e-12 * (1.0 + std::fabs(x));
  const double ty = 1e-12 * (1.0 + std::fabs(y));
  return {x - tx, y - ty, x + tx, y + ty};
}

void sort_unique(std::vector<XPoint>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool contains_sorted(const std::vector<XPoint>& v, const XPoint& p) {
  return std::binary_search(v.begin(), v.end(), p);
}

mpq_class exact_signed_area2(const CoordinateSeq& ring) {
  mpq_class sum = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const mpq_class ax(ring[i].x), ay(ring[i].y), bx(ring[i + 1].x), by(ring[i + 1].y);
    sum += ax * by - bx * ay;
  }
  return sum;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

PreparedGeometry::Impl::Impl(const Geometry& g) : geometry(g) {
  if (g.is_empty()) throw InvalidGeometry("empty geometries have no topological relation");
  if (auto v = validate(g); !v.empty()) {
    throw InvalidGeometry("invalid geometry: " + v.front().describe());
  }
  env = g.envelope();
  dim = dimension_value(dimension(g));

  auto add_line = [&](const CoordinateSeq& coords, std::map<XPoint, int>& endpoint_count) {
    for (std::size_t i = 0; i + 1 < coords.size(); ++i) {
      if (coords[i] == coords[i + 1]) continue;
      segments.push_back({XPoint(coords[i]), XPoint(coords[i + 1]), segment_env(coords[i], coords[i + 1])});
    }
    if (!(coords.front() == coords.back())) {
      ++endpoint_count[XPoint(coords.front())];
      ++endpoint_count[XPoint(coords.back())];
    }
  };

  auto add_ring = [&](const CoordinateSeq& ring, bool shell) -> RingRange {
    RingRange r;
    r.begin = segments.size();
    const bool ccw = sgn(exact_signed_area2(ring)) > 0;
    const bool keep = shell ? ccw : !ccw;
    std::vector<Segment> edges;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      if (ring[i] == ring[i + 1]) continue;
      if (keep) {
        edges.push_back({XPoint(ring[i]), XPoint(ring[i + 1]), segment_env(ring[i], ring[i + 1])});
      } else {
        edges.push_back({XPoint(ring[i + 1]), XPoint(ring[i]), segment_env(ring[i], ring[i + 1])});
      }
    }
    segments.insert(segments.end(), edges.begin(), edges.end());
    r.end = segments.size();
    return r;
  };

  auto add_polygon = [&](const Polygon& p) {
    Area area;
    area.shell = add_ring(p.shell, true);
    for (const auto& h : p.holes) area.holes.push_back(add_ring(h, false));
    area.env = Geometry(p).envelope();
    areas.push_back(std::move(area));
  };

  std::map<XPoint, int> endpoint_count;
  std::visit(Overloaded{
                 [&](const Point& p) { points.emplace_back(*p.coord); },
                 [&](const MultiPoint& m) {
                   for (const auto& c : m.points) points.emplace_back(c);
                 },
                 [&](const LineString& l) { add_line(l.coords, endpoint_count); },
                 [&](const MultiLineString& m) {
                   for (const auto& l : m.lines) add_line(l.coords, endpoint_count);
                 },
                 [&](const Polygon& p) { add_polygon(p); },
                 [&](const MultiPolygon& m) {
                   for (const auto& p : m.polygons) add_polygon(p);
                 },
             },
             g.value());
  sort_unique(points);
  for (const auto& [pt, count] : endpoint_count) {
    if (count % 2 == 1) boundary.push_back(pt);
  }
  for (const auto& s : segments) {
    vertices.push_back(s.a);
    vertices.push_back(s.b);
  }
  sort_unique(vertices);
}

int PreparedGeometry::Impl::boundary_dim() const {
  if (dim == 2) return 1;
  if (dim == 1) return boundary.empty() ? -1 : 0;
  return -1;
}

Location PreparedGeometry::Impl::locate(const XPoint& p) const {
  if (dim == 0) return contains_sorted(points, p) ? kI : kE;
  const Envelope pe = approx_env(p);
  if (!env.intersects(pe)) return kE;

  if (dim == 1) {
    if (contains_sorted(boundary, p)) return kB;
    for (const auto& s : segments) {
      if (s.env.intersects(pe) && detail::on_segment(s.a, s.b, p)) return kI;
    }
    return kE;
  }

  for (const auto& s : segments) {
    if (s.env.intersects(pe) && detail::on_segment(s.a, s.b, p)) return kB;
  }
  auto inside_ring = [&](const RingRange& r) {
    bool inside = false;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      const Segment& s = segments[i];
      if (s.env.max_x < pe.min_x) continue;  // entirely left of p
      if ((s.a.y > p.y) != (s.b.y > p.y)) {
        const int o = detail::orient(s.a, s.b, p);
        if (s.b.y > s.a.y ? o > 0 : o < 0) inside = !inside;
      }
    }
    return inside;
  };
  for (const Area& area : areas) {
    if (!area.env.intersects(pe)) continue;
    if (!inside_ring(area.shell)) continue;
    bool in_hole = false;
    for (const auto& h : area.holes) {
      if (inside_ring(h)) {
        in_hole = true;
        break;
      }
    }
    if (!in_hole) return kI;
  }
  return kE;
}

PreparedGeometry::PreparedGeometry(const Geometry& g) : impl_(std::make_unique<Impl>(g)) {}
PreparedGeometry::~PreparedGeometry() = default;
PreparedGeometry::PreparedGeometry(PreparedGeometry&&) noexcept = default;
PreparedGeometry& PreparedGeometry::operator=(PreparedGeometry&&) noexcept = default;
const Geometry& PreparedGeometry::geometry() const { return impl_->geometry; }
const Envelope& PreparedGeometry::envelope() const { return impl_->env; }

namespace {

using Impl = PreparedGeometry::Impl;

// Matrix for geometries whose envelopes do not meet.
IntersectionMatrix disjoint_matrix(const Impl& a, const Impl& b) {
  IntersectionMatrix m;
  m.set(kI, kE, a.dim);
  m.set(kB, kE, a.boundary_dim());
  m.set(kE, kI, b.dim);
  m.set(kE, kB, b.boundary_dim());
  m.set(kE, kE, 2);
  return m;
}

struct Overlap {
  std::size_t other;  // segment index in the other geometry
  bool same_direction;
};

struct SegmentNodes {
  std::vector<XPoint> cuts;
  std::vector<Overlap> overlaps;
};

// Positions along a segment, ordered from s.a to s.b.
void order_along(std::vector<XPoint>& pts, const XPoint& a, const XPoint& b) {
  const bool by_x = a.x != b.x;
  const bool ascending = by_x ? a.x < b.x : a.y < b.y;
  std::sort(pts.begin(), pts.end(), [&](const XPoint& p, const XPoint& q) {
    const bool less = by_x ? p.x < q.x : p.y < q.y;
    const bool greater = by_x ? q.x < p.x : q.y < p.y;
    return ascending ? less : greater;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

// Contributions of the sub-edges of `self`'s segments; `self_is_a` selects
// whether rows or columns of the matrix belong to `self`.
void edge_contributions(const Impl& self, const Impl& other, std::vector<SegmentNodes>& nodes,
                        bool self_is_a, IntersectionMatrix& m) {
  auto raise = [&](Location ls, Location lo, int d) {
    if (self_is_a) {
      m.raise(ls, lo, d);
    } else {
      m.raise(lo, ls, d);
    }
  };
  const Location own = self.dim == 2 ? kB : kI;
  for (std::size_t i = 0; i < self.segments.size(); ++i) {
    const auto& seg = self.segments[i];
    SegmentNodes& sn = nodes[i];
    sn.cuts.push_back(seg.a);
    sn.cuts.push_back(seg.b);
    order_along(sn.cuts, seg.a, seg.b);
    for (std::size_t k = 0; k + 1 < sn.cuts.size(); ++k) {
      const XPoint mid((sn.cuts[k].x + sn.cuts[k + 1].x) / 2, (sn.cuts[k].y + sn.cuts[k + 1].y) / 2);
      const Location lo = other.locate(mid);
      raise(own, lo, 1);
      if (self.dim != 2) continue;
      // Left of the edge is self's interior, right is its exterior.
      if (other.dim != 2) {
        raise(kI, kE, 2);
        raise(kE, kE, 2);
        continue;
      }
      if (lo == kI) {
        raise(kI, kI, 2);
        raise(kE, kI, 2);
      } else if (lo == kE) {
        raise(kI, kE, 2);
        raise(kE, kE, 2);
      } else {
        bool same = true;
        for (const Overlap& ov : sn.overlaps) {
          const auto& os = other.segments[ov.other];
          if (detail::on_segment(os.a, os.b, mid)) {
            same = ov.same_direction;
            break;
          }
        }
        if (same) {
          raise(kI, kI, 2);
          raise(kE, kE, 2);
        } else {
          raise(kI, kE, 2);
          raise(kE, kI, 2);
        }
      }
    }
  }
}

IntersectionMatrix relate_impl(const Impl& a, const Impl& b) {
  if (!a.env.intersects(b.env)) return disjoint_matrix(a, b);

  IntersectionMatrix m;
  std::vector<XPoint> node_pts;
  node_pts.insert(node_pts.end(), a.vertices.begin(), a.vertices.end());
  node_pts.insert(node_pts.end(), b.vertices.begin(), b.vertices.end());
  node_pts.insert(node_pts.end(), a.points.begin(), a.points.end());
  node_pts.insert(node_pts.end(), b.points.begin(), b.points.end());

  std::vector<SegmentNodes> a_nodes(a.segments.size());
  std::vector<SegmentNodes> b_nodes(b.segments.size());

  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    const auto& sa = a.segments[i];
    if (!sa.env.intersects(b.env)) continue;
    for (std::size_t j = 0; j < b.segments.size(); ++j) {
      const auto& sb = b.segments[j];
      if (!sa.env.intersects(sb.env)) continue;
      const auto x = detail::intersect(sa.a, sa.b, sb.a, sb.b);
      if (x.relation == detail::SegmentRelation::Disjoint) continue;
      node_pts.push_back(x.p);
      a_nodes[i].cuts.push_back(x.p);
      b_nodes[j].cuts.push_back(x.p);
      if (x.relation == detail::SegmentRelation::Overlap) {
        node_pts.push_back(x.q);
        a_nodes[i].cuts.push_back(x.q);
        b_nodes[j].cuts.push_back(x.q);
        const mpq_class dot = (sa.b.x - sa.a.x) * (sb.b.x - sb.a.x) + (sa.b.y - sa.a.y) * (sb.b.y - sb.a.y);
        const bool same = sgn(dot) > 0;
        a_nodes[i].overlaps.push_back({j, same});
        b_nodes[j].overlaps.push_back({i, same});
      }
    }
  }
  // Isolated points of one operand lying on the other's segments.
  auto cut_by_points = [](const Impl& lines, const Impl& pts, std::vector<SegmentNodes>& nodes) {
    for (const XPoint& p : pts.points) {
      const Envelope pe = approx_env(p);
      for (std::size_t i = 0; i < lines.segments.size(); ++i) {
        const auto& s = lines.segments[i];
        if (s.env.intersects(pe) && detail::in_segment_interior(s.a, s.b, p)) nodes[i].cuts.push_back(p);
      }
    }
  };
  cut_by_points(a, b, a_nodes);
  cut_by_points(b, a, b_nodes);

  sort_unique(node_pts);
  for (const XPoint& p : node_pts) {
    const Location la = a.locate(p);
    const Location lb = b.locate(p);
    if (la == kE && lb == kE) continue;
    m.raise(la, lb, 0);
  }

  edge_contributions(a, b, a_nodes, true, m);
  edge_contributions(b, a, b_nodes, false, m);

  // A polygon always reaches beyond any lower-dimensional operand.
  if (a.dim == 2 && b.dim < 2) m.raise(kI, kE, 2);
  if (b.dim == 2 && a.dim < 2) m.raise(kE, kI, 2);
  m.set(kE, kE, 2);
  return m;
}

}  // namespace

IntersectionMatrix relate(const PreparedGeometry& a, const PreparedGeometry& b) {
  return relate_impl(a.impl(), b.impl());
}

IntersectionMatrix relate(const Geometry& a, const Geometry& b) {
  return relate(PreparedGeometry(a), PreparedGeometry(b));
}

}  // namespace toporel
