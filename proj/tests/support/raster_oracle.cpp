#include "raster_oracle.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <map>
#include <utility>
#include <vector>

namespace toporel::testing {

namespace {

struct Q {
  mpq_class x, y;
};

bool operator==(const Q& a, const Q& b) { return a.x == b.x && a.y == b.y; }
bool operator<(const Q& a, const Q& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

Q to_q(const Coordinate& c) { return {mpq_class(c.x), mpq_class(c.y)}; }

using Seg = std::pair<Q, Q>;

int sign(const mpq_class& v) { return sgn(v); }

mpq_class cross(const Q& o, const Q& a, const Q& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(const Q& p, const Seg& s) {
  if (sign(cross(s.first, s.second, p)) != 0) return false;
  return std::min(s.first.x, s.second.x) <= p.x && p.x <= std::max(s.first.x, s.second.x) &&
         std::min(s.first.y, s.second.y) <= p.y && p.y <= std::max(s.first.y, s.second.y);
}

enum Loc { kInterior = 0, kBoundary = 1, kExterior = 2 };

// Point-set model of a geometry: isolated points, linework with its mod-2
// boundary, or polygon rings under the even-odd rule.
struct Shape {
  int dim = 0;
  std::vector<Q> points;
  std::vector<Seg> segments;
  std::vector<Q> line_boundary;

  explicit Shape(const Geometry& g) {
    std::map<Q, int> ends;
    auto add_line = [&](const CoordinateSeq& cs) {
      for (std::size_t i = 0; i + 1 < cs.size(); ++i) segments.push_back({to_q(cs[i]), to_q(cs[i + 1])});
      if (!(cs.front() == cs.back())) {
        ++ends[to_q(cs.front())];
        ++ends[to_q(cs.back())];
      }
    };
    auto add_polygon = [&](const Polygon& p) {
      for (std::size_t i = 0; i + 1 < p.shell.size(); ++i) segments.push_back({to_q(p.shell[i]), to_q(p.shell[i + 1])});
      for (const auto& h : p.holes) {
        for (std::size_t i = 0; i + 1 < h.size(); ++i) segments.push_back({to_q(h[i]), to_q(h[i + 1])});
      }
    };
    if (const auto* p = g.get_if<Point>()) {
      points.push_back(to_q(*p->coord));
    } else if (const auto* mp = g.get_if<MultiPoint>()) {
      for (const auto& c : mp->points) points.push_back(to_q(c));
    } else if (const auto* l = g.get_if<LineString>()) {
      dim = 1;
      add_line(l->coords);
    } else if (const auto* ml = g.get_if<MultiLineString>()) {
      dim = 1;
      for (const auto& l2 : ml->lines) add_line(l2.coords);
    } else if (const auto* pg = g.get_if<Polygon>()) {
      dim = 2;
      add_polygon(*pg);
    } else if (const auto* mpg = g.get_if<MultiPolygon>()) {
      dim = 2;
      for (const auto& p2 : mpg->polygons) add_polygon(p2);
    }
    for (const auto& [q, n] : ends) {
      if (n % 2 == 1) line_boundary.push_back(q);
    }
  }

  Loc locate(const Q& p) const {
    if (dim == 0) {
      return std::find(points.begin(), points.end(), p) != points.end() ? kInterior : kExterior;
    }
    if (dim == 1) {
      if (std::find(line_boundary.begin(), line_boundary.end(), p) != line_boundary.end()) return kBoundary;
      for (const auto& s : segments) {
        if (on_segment(p, s)) return kInterior;
      }
      return kExterior;
    }
    bool inside = false;
    for (const auto& s : segments) {
      if (on_segment(p, s)) return kBoundary;
      const Q& a = s.first;
      const Q& b = s.second;
      if ((a.y > p.y) != (b.y > p.y)) {
        const mpq_class xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < xi) inside = !inside;
      }
    }
    return inside ? kInterior : kExterior;
  }
};

// Points where s meets t (one point, or the shared endpoints of a collinear overlap).
void intersections(const Seg& s, const Seg& t, std::vector<Q>& out) {
  const Q r{s.second.x - s.first.x, s.second.y - s.first.y};
  const Q u{t.second.x - t.first.x, t.second.y - t.first.y};
  const mpq_class denom = r.x * u.y - r.y * u.x;
  if (sign(denom) == 0) {
    for (const Q& p : {t.first, t.second}) {
      if (on_segment(p, s)) out.push_back(p);
    }
    for (const Q& p : {s.first, s.second}) {
      if (on_segment(p, t)) out.push_back(p);
    }
    return;
  }
  const Q w{t.first.x - s.first.x, t.first.y - s.first.y};
  const mpq_class a = (w.x * u.y - w.y * u.x) / denom;
  const mpq_class b = (w.x * r.y - w.y * r.x) / denom;
  if (a >= 0 && a <= 1 && b >= 0 && b <= 1) out.push_back({s.first.x + a * r.x, s.first.y + a * r.y});
}

mpq_class dist2_to_segment(const Q& p, const Seg& s) {
  const mpq_class dx = s.second.x - s.first.x, dy = s.second.y - s.first.y;
  const mpq_class len2 = dx * dx + dy * dy;
  mpq_class t = len2 == 0 ? mpq_class(0) : ((p.x - s.first.x) * dx + (p.y - s.first.y) * dy) / len2;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  const mpq_class ex = s.first.x + t * dx - p.x, ey = s.first.y + t * dy - p.y;
  return ex * ex + ey * ey;
}

// Counter-clockwise angular order starting at the positive x axis.
bool angle_less(const Q& a, const Q& b) {
  auto half = [](const Q& d) { return sgn(d.y) > 0 || (sgn(d.y) == 0 && sgn(d.x) > 0) ? 0 : 1; };
  if (half(a) != half(b)) return half(a) < half(b);
  return sgn(a.x * b.y - a.y * b.x) > 0;
}

// Direction scaled to unit max-norm, exact.
Q unit_inf(const Q& d) {
  const mpq_class m = std::max(abs(d.x), abs(d.y));
  return {d.x / m, d.y / m};
}

}  // namespace

std::string oracle_matrix(const Geometry& ga, const Geometry& gb, int grid) {
  const Shape a(ga), b(gb);
  std::array<int, 9> cell;
  cell.fill(-1);
  auto witness = [&](const Q& p, int d) {
    const int i = a.locate(p) * 3 + b.locate(p);
    cell[i] = std::max(cell[i], d);
  };

  std::vector<Seg> all = a.segments;
  all.insert(all.end(), b.segments.begin(), b.segments.end());
  std::vector<Q> nodes = a.points;
  nodes.insert(nodes.end(), b.points.begin(), b.points.end());
  for (const auto& s : all) {
    nodes.push_back(s.first);
    nodes.push_back(s.second);
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) intersections(all[i], all[j], nodes);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (const auto& p : nodes) witness(p, 0);

  // Cut every segment at the nodes on it; each open piece has constant location.
  for (const auto& s : all) {
    std::vector<std::pair<mpq_class, Q>> cuts;
    const mpq_class len2 = (s.second.x - s.first.x) * (s.second.x - s.first.x) +
                           (s.second.y - s.first.y) * (s.second.y - s.first.y);
    for (const auto& p : nodes) {
      if (!on_segment(p, s)) continue;
      const mpq_class t =
          ((p.x - s.first.x) * (s.second.x - s.first.x) + (p.y - s.first.y) * (s.second.y - s.first.y)) / len2;
      cuts.emplace_back(t, p);
    }
    std::sort(cuts.begin(), cuts.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i].first == cuts[i + 1].first) continue;
      witness({(cuts[i].second.x + cuts[i + 1].second.x) / 2, (cuts[i].second.y + cuts[i + 1].second.y) / 2}, 1);
    }
  }


  // Sector probes: around every node, a point on a direction strictly inside
  // each angular gap between incident linework, closer than any other feature.
  // Every face of the arrangement touches some node, so no sliver is missed.
  for (const auto& v : nodes) {
    std::vector<Q> dirs;
    bool found = false;
    mpq_class reach2;
    auto consider = [&](const mpq_class& d2) {
      if (!found || d2 < reach2) reach2 = d2;
      found = true;
    };
    for (const auto& s : all) {
      if (on_segment(v, s)) {
        for (const Q& e : {s.first, s.second}) {
          if (!(e == v)) dirs.push_back(unit_inf({e.x - v.x, e.y - v.y}));
        }
      } else {
        consider(dist2_to_segment(v, s));
      }
    }
    for (const auto& w : nodes) {
      if (!(w == v)) consider((w.x - v.x) * (w.x - v.x) + (w.y - v.y) * (w.y - v.y));
    }
    if (!found) continue;
    std::sort(dirs.begin(), dirs.end(), angle_less);
    dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
    std::vector<Q> probes;
    if (dirs.empty()) probes.push_back({1, 0});
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Q& d1 = dirs[i];
      const Q& d2 = dirs[(i + 1) % dirs.size()];
      const mpq_class turn = d1.x * d2.y - d1.y * d2.x;
      if (dirs.size() > 1 && sgn(turn) > 0) {
        probes.push_back(unit_inf({d1.x + d2.x, d1.y + d2.y}));
      } else {
        probes.push_back({-d1.y, d1.x});
      }
    }
    // |t * d| <= t * sqrt(2) for max-norm 1 directions; keep 8 t^2 < reach^2.
    mpq_class t(1);
    while (8 * t * t >= reach2) t /= 2;
    for (const auto& d : probes) witness({v.x + t * d.x, v.y + t * d.y}, 2);
  }

  // Area probes on a grid with an irregular offset, skipping points on linework.
  Envelope env = ga.envelope();
  const Envelope eb = gb.envelope();
  env = {std::min(env.min_x, eb.min_x), std::min(env.min_y, eb.min_y), std::max(env.max_x, eb.max_x),
         std::max(env.max_y, eb.max_y)};
  const double span = std::max({env.max_x - env.min_x, env.max_y - env.min_y, 1e-9});
  env = env.expanded(span * 0.1);
  const double step = (span * 1.2) / grid;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      const Q p{mpq_class(env.min_x + (i + 0.5137) * step), mpq_class(env.min_y + (j + 0.4711) * step)};
      if (std::any_of(all.begin(), all.end(), [&](const Seg& s) { return on_segment(p, s); })) continue;
      if (std::find(nodes.begin(), nodes.end(), p) != nodes.end()) continue;
      witness(p, 2);
    }
  }

  std::string out;
  for (int c : cell) out += c < 0 ? 'F' : static_cast<char>('0' + c);
  return out;
}

}  // namespace toporel::testing
