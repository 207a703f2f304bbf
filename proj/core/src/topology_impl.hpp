#pragma once

#include <vector>

#include "exact.hpp"
#include "toporel/topology.hpp"

namespace toporel {

struct PreparedGeometry::Impl {
  struct Segment {
    detail::XPoint a;
    detail::XPoint b;
    Envelope env;
  };
  struct RingRange {
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  struct Area {
    RingRange shell;
    std::vector<RingRange> holes;
    Envelope env;
  };

  Geometry geometry;
  Envelope env;
  int dim = 0;

  std::vector<detail::XPoint> points;    // dim 0 members, sorted and unique
  std::vector<Segment> segments;         // line pieces, or ring edges with the interior on the left
  std::vector<detail::XPoint> vertices;  // segment endpoints, sorted and unique
  std::vector<detail::XPoint> boundary;  // dim 1 only: mod-2 endpoints, sorted
  std::vector<Area> areas;               // dim 2 only

  explicit Impl(const Geometry& g);

  /// Exact location of p relative to this geometry.
  Location locate(const detail::XPoint& p) const;

  /// Dimension of the boundary point set (-1 when empty).
  int boundary_dim() const;
};

}  // namespace toporel
