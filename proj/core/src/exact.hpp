#pragma once

// Exact geometric predicates. Input coordinates are doubles and are converted
// to GMP rationals without rounding; everything derived from them (segment
// intersections, midpoints) stays exact.

#include <gmpxx.h>

#include <optional>
#include <vector>

#include "toporel/geometry.hpp"

namespace toporel::detail {

struct XPoint {
  mpq_class x;
  mpq_class y;

  XPoint() = default;
  XPoint(mpq_class px, mpq_class py) : x(std::move(px)), y(std::move(py)) {}
  explicit XPoint(const Coordinate& c) : x(c.x), y(c.y) {}

  friend bool operator==(const XPoint& a, const XPoint& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator<(const XPoint& a, const XPoint& b) {
    int c = cmp(a.x, b.x);
    return c < 0 || (c == 0 && a.y < b.y);
  }

  double approx_x() const { return x.get_d(); }
  double approx_y() const { return y.get_d(); }
};

/// Sign of the orientation determinant: +1 left turn, -1 right turn, 0 collinear.
int orient(const XPoint& a, const XPoint& b, const XPoint& c);

/// Same predicate on doubles: a floating-point filter with an exact fallback.
int orient(const Coordinate& a, const Coordinate& b, const Coordinate& c);

/// c lies on the closed segment [a, b] (assumes a != b unless c == a).
bool on_segment(const XPoint& a, const XPoint& b, const XPoint& c);
bool on_segment(const Coordinate& a, const Coordinate& b, const Coordinate& c);

/// c lies strictly between a and b on the segment.
bool in_segment_interior(const XPoint& a, const XPoint& b, const XPoint& c);

enum class SegmentRelation { Disjoint, Point, Overlap };

struct SegmentIntersection {
  SegmentRelation relation = SegmentRelation::Disjoint;
  XPoint p;  // intersection point (Point) or overlap start (Overlap)
  XPoint q;  // overlap end (Overlap only)
};

SegmentIntersection intersect(const XPoint& a, const XPoint& b, const XPoint& c,
                              const XPoint& d);

/// Do the closed segments [a,b] and [c,d] share at least one point?
bool segments_intersect(const Coordinate& a, const Coordinate& b, const Coordinate& c,
                        const Coordinate& d);

/// Is the exact rational value representable as a double without rounding?
bool exactly_representable(const mpq_class& v);

/// Crossing-number location of p relative to a closed ring:
/// 1 inside, 0 on the ring, -1 outside.
int locate_in_ring(const CoordinateSeq& ring, const Coordinate& p);

}  // namespace toporel::detail
