#include <algorithm>
#include <cctype>
#include <map>

#include "toporel/error.hpp"
#include "toporel/topology.hpp"
#include "topology_impl.hpp"

namespace toporel {

namespace {

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

char cell_char(int v) { return v < 0 ? 'F' : static_cast<char>('0' + v); }

using GT = GeometryType;
using P = Predicate;

const std::map<Predicate, std::set<TypeCombo>>& combination_table() {
  static const std::map<Predicate, std::set<TypeCombo>> table = [] {
    std::map<Predicate, std::set<TypeCombo>> t;
    t[P::Equals] = {{GT::Point, GT::Point}, {GT::LineString, GT::LineString}, {GT::Polygon, GT::Polygon}};
    t[P::Within] = {{GT::Point, GT::LineString},      {GT::Point, GT::Polygon},
                    {GT::LineString, GT::LineString}, {GT::LineString, GT::Polygon},
                    {GT::Polygon, GT::Polygon}};
    for (const auto& c : t[P::Within]) t[P::Contains].insert(c.swapped());
    t[P::Overlaps] = {{GT::LineString, GT::LineString}, {GT::Polygon, GT::Polygon}};
    t[P::Crosses] = {{GT::LineString, GT::LineString}, {GT::LineString, GT::Polygon},
                     {GT::Polygon, GT::LineString}};
    for (GT a : kSimpleTypes) {
      for (GT b : kSimpleTypes) {
        t[P::Disjoint].insert({a, b});
        if (!(a == GT::Point && b == GT::Point)) t[P::Touches].insert({a, b});
      }
    }
    return t;
  }();
  return table;
}

}  // namespace

IntersectionMatrix IntersectionMatrix::from_string(std::string_view s) {
  if (s.size() != 9) throw PatternError("intersection matrix needs 9 characters: '" + std::string(s) + "'");
  IntersectionMatrix m;
  for (int i = 0; i < 9; ++i) {
    const char c = s[i];
    if (c == 'F' || c == 'f') {
      m.cells_[i] = kEmpty;
    } else if (c >= '0' && c <= '2') {
      m.cells_[i] = static_cast<std::int8_t>(c - '0');
    } else {
      throw PatternError(std::string("invalid matrix character '") + c + "'");
    }
  }
  return m;
}

IntersectionMatrix IntersectionMatrix::transposed() const {
  IntersectionMatrix t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.cells_[c * 3 + r] = cells_[r * 3 + c];
  }
  return t;
}

std::string IntersectionMatrix::to_string() const {
  std::string s(9, 'F');
  for (int i = 0; i < 9; ++i) s[i] = cell_char(cells_[i]);
  return s;
}

std::string_view predicate_name(Predicate p) {
  switch (p) {
    case P::Equals: return "equals";
    case P::Within: return "within";
    case P::Contains: return "contains";
    case P::Overlaps: return "overlaps";
    case P::Touches: return "touches";
    case P::Crosses: return "crosses";
    case P::Disjoint: return "disjoint";
  }
  return "undetermined";
}

std::optional<Predicate> parse_predicate(std::string_view name) {
  static const std::map<std::string, Predicate, std::less<>> names = {
      {"equals", P::Equals},     {"equal", P::Equals},     {"within", P::Within},
      {"contains", P::Contains}, {"contain", P::Contains}, {"overlaps", P::Overlaps},
      {"overlap", P::Overlaps},  {"touches", P::Touches},  {"touch", P::Touches},
      {"crosses", P::Crosses},   {"cross", P::Crosses},    {"disjoint", P::Disjoint},
  };
  std::string_view trimmed = name;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front()))) trimmed.remove_prefix(1);
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.remove_suffix(1);
  auto it = names.find(lower(trimmed));
  if (it == names.end()) return std::nullopt;
  return it->second;
}

Predicate inverse(Predicate p) {
  if (p == P::Within) return P::Contains;
  if (p == P::Contains) return P::Within;
  return p;
}

bool matches(const IntersectionMatrix& m, std::string_view pattern) {
  if (pattern.size() != 9) throw PatternError("pattern needs 9 characters: '" + std::string(pattern) + "'");
  bool ok = true;
  for (int i = 0; i < 9; ++i) {
    const int v = m.at(i / 3, i % 3);
    switch (pattern[i]) {
      case '*': break;
      case 'T': case 't': ok = ok && v >= 0; break;
      case 'F': case 'f': ok = ok && v < 0; break;
      case '0': case '1': case '2': ok = ok && v == pattern[i] - '0'; break;
      default: throw PatternError(std::string("invalid pattern character '") + pattern[i] + "'");
    }
  }
  return ok;
}

Classification classify_matrix(const IntersectionMatrix& m, int dim_a, int dim_b) {
  Classification c{std::nullopt, m};
  auto found = [&](Predicate p) {
    c.predicate = p;
    return c;
  };
  if (matches(m, "T*F**FFF*")) return found(P::Equals);
  if (matches(m, "T*F**F***")) return found(P::Within);
  if (matches(m, "T*****FF*")) return found(P::Contains);
  if (dim_a < dim_b && matches(m, "T*T******")) return found(P::Crosses);
  if (dim_a > dim_b && matches(m, "T*****T**")) return found(P::Crosses);
  if (dim_a == 1 && dim_b == 1 && matches(m, "0********")) return found(P::Crosses);
  if (dim_a == dim_b) {
    const char* pattern = dim_a == 1 ? "1*T***T**" : "T*T***T**";
    if (matches(m, pattern)) return found(P::Overlaps);
  }
  if (!(dim_a == 0 && dim_b == 0) &&
      (matches(m, "FT*******") || matches(m, "F**T*****") || matches(m, "F***T****"))) {
    return found(P::Touches);
  }
  if (matches(m, "FF*FF****")) return found(P::Disjoint);
  return c;
}

Classification classify(const PreparedGeometry& a, const PreparedGeometry& b) {
  return classify_matrix(relate(a, b), a.impl().dim, b.impl().dim);
}

Classification classify(const Geometry& a, const Geometry& b) {
  return classify(PreparedGeometry(a), PreparedGeometry(b));
}

std::string TypeCombo::name() const {
  return std::string(type_name(a)) + "/" + std::string(type_name(b));
}

std::optional<TypeCombo> TypeCombo::parse(std::string_view s) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto ta = parse_type_name(s.substr(0, slash));
  auto tb = parse_type_name(s.substr(slash + 1));
  if (!ta || !tb) return std::nullopt;
  return TypeCombo{*ta, *tb};
}

std::string RelationTuple::to_string() const {
  return "(" + std::string(type_name(type_a)) + ", " + std::string(predicate_name(predicate)) + ", " +
         std::string(type_name(type_b)) + ")";
}

std::string RelationTuple::key() const {
  return std::string(type_name(type_a)) + "-" + std::string(predicate_name(predicate)) + "-" +
         std::string(type_name(type_b));
}

std::set<TypeCombo> valid_combinations(Predicate p) { return combination_table().at(p); }

bool is_valid_combination(const RelationTuple& t) {
  return combination_table().at(t.predicate).count(t.combo()) > 0;
}

std::vector<Predicate> applicable_predicates(TypeCombo combo) {
  std::vector<Predicate> out;
  for (Predicate p : kAllPredicates) {
    if (combination_table().at(p).count(combo)) out.push_back(p);
  }
  return out;
}

const std::vector<RelationTuple>& all_relation_tuples() {
  static const std::vector<RelationTuple> tuples = [] {
    std::vector<RelationTuple> out;
    for (GT a : kSimpleTypes) {
      for (GT b : kSimpleTypes) {
        for (Predicate p : applicable_predicates({a, b})) out.push_back({a, p, b});
      }
    }
    return out;
  }();
  return tuples;
}

}  // namespace toporel
