#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toporel/geometry.hpp"

namespace toporel {

/// Row/column index of the DE-9IM matrix.
enum class Location : std::uint8_t { Interior = 0, Boundary = 1, Exterior = 2 };

/// 3x3 dimension-valued intersection matrix. Rows are interior/boundary/exterior
/// of A, columns the same for B. Entries are -1 (F), 0, 1 or 2.
class IntersectionMatrix {
 public:
  static constexpr int kEmpty = -1;

  IntersectionMatrix() { cells_.fill(kEmpty); }

  /// Parses the 9-character row-major form, e.g. "0FFFFF212".
  static IntersectionMatrix from_string(std::string_view s);

  int at(Location a, Location b) const { return cells_[index(a, b)]; }
  int at(int row, int col) const { return cells_[row * 3 + col]; }
  void set(Location a, Location b, int dim) { cells_[index(a, b)] = static_cast<std::int8_t>(dim); }
  /// Raises the entry to at least `dim`.
  void raise(Location a, Location b, int dim) {
    auto& c = cells_[index(a, b)];
    if (c < dim) c = static_cast<std::int8_t>(dim);
  }

  IntersectionMatrix transposed() const;
  std::string to_string() const;

  friend bool operator==(const IntersectionMatrix&, const IntersectionMatrix&) = default;

 private:
  static int index(Location a, Location b) { return static_cast<int>(a) * 3 + static_cast<int>(b); }
  std::array<std::int8_t, 9> cells_{};
};

/// The seven mutually exclusive named predicates, in canonical order.
enum class Predicate : std::uint8_t { Equals, Within, Contains, Overlaps, Touches, Crosses, Disjoint };

inline constexpr std::array<Predicate, 7> kAllPredicates{
    Predicate::Equals,  Predicate::Within,  Predicate::Contains, Predicate::Overlaps,
    Predicate::Touches, Predicate::Crosses, Predicate::Disjoint};

std::string_view predicate_name(Predicate p);
/// Accepts the canonical names (case-insensitive) and their base verb forms
/// ("touch", "contain", ...).
std::optional<Predicate> parse_predicate(std::string_view name);

/// within <-> contains; every other predicate is its own inverse.
Predicate inverse(Predicate p);

/// True iff every position of `m` satisfies `pattern` (9 chars over T F * 0 1 2).
/// Throws PatternError for malformed patterns.
bool matches(const IntersectionMatrix& m, std::string_view pattern);

/// Geometry pair that has been converted to the exact-arithmetic form once, so
/// repeated relate calls on the same geometry stay cheap.
class PreparedGeometry {
 public:
  /// Throws InvalidGeometry for empty or invalid geometries.
  explicit PreparedGeometry(const Geometry& g);
  ~PreparedGeometry();
  PreparedGeometry(PreparedGeometry&&) noexcept;
  PreparedGeometry& operator=(PreparedGeometry&&) noexcept;

  const Geometry& geometry() const;
  const Envelope& envelope() const;

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

/// DE-9IM matrix of (a, b). Deterministic; relate(a,b) == relate(b,a)^T.
IntersectionMatrix relate(const Geometry& a, const Geometry& b);
IntersectionMatrix relate(const PreparedGeometry& a, const PreparedGeometry& b);

/// Result of classification. `predicate` is empty when no rule matched
/// ("Undetermined"); the matrix is always returned for diagnostics.
struct Classification {
  std::optional<Predicate> predicate;
  IntersectionMatrix matrix;
  bool determined() const { return predicate.has_value(); }
};

/// Applies the rules equals, within, contains, crosses, overlaps, touches,
/// disjoint (first match wins) to a matrix and the operand dimensions.
Classification classify_matrix(const IntersectionMatrix& m, int dim_a, int dim_b);

Classification classify(const Geometry& a, const Geometry& b);
Classification classify(const PreparedGeometry& a, const PreparedGeometry& b);

/// Ordered pair of simple geometry types.
struct TypeCombo {
  GeometryType a;
  GeometryType b;
  friend auto operator<=>(const TypeCombo&, const TypeCombo&) = default;
  TypeCombo swapped() const { return {b, a}; }
  /// "Point/Polygon"
  std::string name() const;
  static std::optional<TypeCombo> parse(std::string_view s);
};

/// (type_a, predicate, type_b), the label of a relation triplet.
struct RelationTuple {
  GeometryType type_a;
  Predicate predicate;
  GeometryType type_b;
  friend auto operator<=>(const RelationTuple&, const RelationTuple&) = default;
  TypeCombo combo() const { return {type_a, type_b}; }
  /// "(Point, within, Polygon)"
  std::string to_string() const;
  /// "Point-within-Polygon", safe in file names.
  std::string key() const;
};

/// The three simple types relation tuples range over.
inline constexpr std::array<GeometryType, 3> kSimpleTypes{GeometryType::Point, GeometryType::LineString,
                                                          GeometryType::Polygon};

/// Type pairs for which `p` can hold.
std::set<TypeCombo> valid_combinations(Predicate p);
bool is_valid_combination(const RelationTuple& t);
/// Predicates applicable to a type pair, in canonical order.
std::vector<Predicate> applicable_predicates(TypeCombo combo);
/// All 35 valid tuples in canonical order (by combo, then predicate).
const std::vector<RelationTuple>& all_relation_tuples();

/// Builds a geometry of `subject_type` standing in relation `predicate` to
/// `reference`, searching deterministic construction templates and verifying
/// each candidate with classify. Returns nullopt when no template succeeds.
std::optional<Geometry> construct_related(const Geometry& reference, GeometryType subject_type,
                                          Predicate predicate);

/// Point strictly inside a polygonal geometry (nullopt for non-areal input).
std::optional<Coordinate> interior_point(const Geometry& g);

/// Minimum planar distance between two geometries (0 when they intersect).
double distance(const Geometry& a, const Geometry& b);

}  // namespace toporel
