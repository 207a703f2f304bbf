#include <doctest.h>

#include "toporel/error.hpp"
#include "toporel/neighborhood.hpp"

using namespace toporel;

namespace {

using T = GeometryType;
using P = Predicate;
const TypeCombo kPP{T::Polygon, T::Polygon};

}  // namespace

TEST_CASE("polygon deformation chain distances") {
  CHECK(topological_distance(kPP, P::Disjoint, P::Touches) == 1);
  CHECK(topological_distance(kPP, P::Disjoint, P::Overlaps) == 2);
  CHECK(topological_distance(kPP, P::Touches, P::Touches) == 0);
  CHECK(default_graphs().graph(kPP).adjacent(P::Disjoint, P::Touches));
  CHECK_FALSE(default_graphs().graph(kPP).adjacent(P::Disjoint, P::Overlaps));
}

TEST_CASE("graph nodes are exactly the applicable predicates") {
  for (T a : kSimpleTypes) {
    for (T b : kSimpleTypes) {
      const TypeCombo c{a, b};
      CHECK(default_graphs().graph(c).nodes() == applicable_predicates(c));
    }
  }
  const auto& pp = default_graphs().graph({T::Point, T::Point});
  CHECK(pp.nodes() == std::vector<P>{P::Equals, P::Disjoint});
  CHECK(pp.edges().size() == 1);
  CHECK(default_graphs().graph({T::LineString, T::Polygon}).nodes() ==
        std::vector<P>{P::Within, P::Touches, P::Crosses, P::Disjoint});
}

TEST_CASE("distance is a metric on every shipped graph") {
  for (const auto& [combo, g] : default_graphs().graphs()) {
    CAPTURE(combo.name());
    CHECK(g.connected());
    for (P a : g.nodes()) {
      for (P b : g.nodes()) {
        const int d = g.distance(a, b);
        CHECK(d == g.distance(b, a));
        CHECK((d == 0) == (a == b));
        CHECK(d == default_graphs().distance(combo.swapped(), inverse(a), inverse(b)));
        for (P c : g.nodes()) CHECK(d <= g.distance(a, c) + g.distance(c, b));
      }
    }
  }
}

TEST_CASE("foreign predicates are rejected") {
  CHECK_THROWS_AS(topological_distance({T::Point, T::Point}, P::Touches, P::Disjoint), NotApplicable);
}

TEST_CASE("mean incorrect distance") {
  CHECK(mean_incorrect_distance({}).empty);
  const auto all_correct = mean_incorrect_distance({{P::Touches, P::Touches, kPP}});
  CHECK(all_correct.empty);
  CHECK(all_correct.value == 0.0);
  const auto one = mean_incorrect_distance({{P::Touches, P::Disjoint, kPP}});
  CHECK_FALSE(one.empty);
  CHECK(one.value == 1.0);
  const auto two = mean_incorrect_distance({{P::Touches, P::Disjoint, kPP}, {P::Overlaps, P::Disjoint, kPP}});
  CHECK(two.value == 1.5);
  CHECK(two.incorrect == 2);
}

TEST_CASE("graph files are validated") {
  CHECK_THROWS_AS(NeighborhoodTable::from_json("{}"), FormatError);
  CHECK_THROWS_AS(NeighborhoodTable::from_json("not json"), FormatError);
}
