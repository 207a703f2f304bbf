#include "exact.hpp"

#include <algorithm>
#include <cmath>

namespace toporel::detail {

namespace {

// Error bound of the naive double orientation determinant (Shewchuk's
// ccwerrboundA): (3 + 16 eps) * eps with eps = 2^-53.
constexpr double kOrientErrBound = 3.3306690738754716e-16;

int sign(const mpq_class& v) { return sgn(v); }

bool between(const mpq_class& lo, const mpq_class& hi, const mpq_class& v) {
  return lo <= hi ? (lo <= v && v <= hi) : (hi <= v && v <= lo);
}

}  // namespace

int orient(const XPoint& a, const XPoint& b, const XPoint& c) {
  mpq_class det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return sign(det);
}

int orient(const Coordinate& a, const Coordinate& b, const Coordinate& c) {
  const double left = (b.x - a.x) * (c.y - a.y);
  const double right = (b.y - a.y) * (c.x - a.x);
  const double det = left - right;
  const double bound = kOrientErrBound * (std::fabs(left) + std::fabs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient(XPoint(a), XPoint(b), XPoint(c));
}

bool on_segment(const XPoint& a, const XPoint& b, const XPoint& c) {
  return between(a.x, b.x, c.x) && between(a.y, b.y, c.y) && orient(a, b, c) == 0;
}

bool on_segment(const Coordinate& a, const Coordinate& b, const Coordinate& c) {
  auto in = [](double lo, double hi, double v) {
    return lo <= hi ? (lo <= v && v <= hi) : (hi <= v && v <= lo);
  };
  return in(a.x, b.x, c.x) && in(a.y, b.y, c.y) && orient(a, b, c) == 0;
}

bool in_segment_interior(const XPoint& a, const XPoint& b, const XPoint& c) {
  return on_segment(a, b, c) && !(c == a) && !(c == b);
}

SegmentIntersection intersect(const XPoint& a, const XPoint& b, const XPoint& c,
                              const XPoint& d) {
  SegmentIntersection out;
  // Envelope rejection.
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.y, b.y) < std::min(c.y, d.y) || std::max(c.y, d.y) < std::min(a.y, b.y)) {
    return out;
  }
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);

  if (o1 == 0 && o2 == 0) {
    std::vector<XPoint> shared;
    for (const XPoint* p : {&a, &b}) {
      if (on_segment(c, d, *p)) shared.push_back(*p);
    }
    for (const XPoint* p : {&c, &d}) {
      if (on_segment(a, b, *p)) shared.push_back(*p);
    }
    if (shared.empty()) return out;
    std::sort(shared.begin(), shared.end());
    shared.erase(std::unique(shared.begin(), shared.end()), shared.end());
    if (shared.size() == 1) {
      out.relation = SegmentRelation::Point;
      out.p = shared.front();
    } else {
      out.relation = SegmentRelation::Overlap;
      out.p = shared.front();
      out.q = shared.back();
    }
    return out;
  }

  if (o1 * o2 > 0 || o3 * o4 > 0) return out;

  out.relation = SegmentRelation::Point;
  if (o1 == 0) {
    out.p = c;
  } else if (o2 == 0) {
    out.p = d;
  } else if (o3 == 0) {
    out.p = a;
  } else if (o4 == 0) {
    out.p = b;
  } else {
    const mpq_class rx = b.x - a.x, ry = b.y - a.y;
    const mpq_class sx = d.x - c.x, sy = d.y - c.y;
    const mpq_class denom = rx * sy - ry * sx;
    const mpq_class t = ((c.x - a.x) * sy - (c.y - a.y) * sx) / denom;
    out.p = XPoint(a.x + t * rx, a.y + t * ry);
  }
  return out;
}

bool segments_intersect(const Coordinate& a, const Coordinate& b, const Coordinate& c,
                        const Coordinate& d) {
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.y, b.y) < std::min(c.y, d.y) || std::max(c.y, d.y) < std::min(a.y, b.y)) {
    return false;
  }
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  if (o1 == 0 && o2 == 0) {
    // Collinear with overlapping envelopes.
    return true;
  }
  return o1 * o2 <= 0 && o3 * o4 <= 0;
}

bool exactly_representable(const mpq_class& v) {
  const double d = v.get_d();
  if (!std::isfinite(d)) return false;
  return mpq_class(d) == v;
}

int locate_in_ring(const CoordinateSeq& ring, const Coordinate& p) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Coordinate& a = ring[i];
    const Coordinate& b = ring[i + 1];
    if (on_segment(a, b, p)) return 0;
    if ((a.y > p.y) != (b.y > p.y)) {
      const int o = orient(a, b, p);
      if (b.y > a.y ? o > 0 : o < 0) inside = !inside;
    }
  }
  return inside ? 1 : -1;
}

}  // namespace toporel::detail
