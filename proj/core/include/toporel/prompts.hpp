#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toporel/dataset.hpp"
#include "toporel/geometry.hpp"
#include "toporel/topology.hpp"

namespace toporel {

/// Named plain-text templates with `{placeholder}` slots. The built-in set is
/// compiled into the library; a directory may override any subset of files.
class TemplateSet {
 public:
  static const TemplateSet& builtin();
  /// Built-in set with every regular file of `dir` replacing the template of
  /// the same name. Throws IoError for an unreadable directory.
  static TemplateSet with_overrides(const std::string& dir);

  /// Throws TemplateError when the template is unknown.
  const std::string& get(std::string_view name) const;
  /// Substitutes every `{key}`. Throws TemplateError for a placeholder
  /// without a value.
  std::string render(std::string_view name, const std::map<std::string, std::string>& values) const;
  /// SHA-256 over the sorted (name, content) pairs; pins the wording of a run.
  std::string hash() const;
  const std::map<std::string, std::string, std::less<>>& templates() const { return templates_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

enum class Task1Style { Zero, ZeroDim, Few, ZeroCot, FewCot };
enum class GenerationStyle { Zero, ZeroCheck, Few, FewNegative };

std::string_view style_name(Task1Style s);
std::string_view style_name(GenerationStyle s);
std::optional<Task1Style> parse_task1_style(std::string_view name);
std::optional<GenerationStyle> parse_generation_style(std::string_view name);
inline bool is_fewshot(Task1Style s) { return s == Task1Style::Few || s == Task1Style::FewCot; }
inline bool is_fewshot(GenerationStyle s) { return s == GenerationStyle::Few || s == GenerationStyle::FewNegative; }

struct Task1Example {
  std::string wkt_a;
  std::string wkt_b;
  RelationTuple answer;
};

/// Query geometries always come last, after any demonstrations. Throws
/// ExampleError when few-shot styles get no examples or zero-shot styles get
/// some, ParseError for malformed WKT.
std::string render_task1(const TemplateSet& templates, std::string_view wkt_a, std::string_view wkt_b, Task1Style style,
                         const std::vector<Task1Example>& examples);

/// Step-by-step walk through the classification rules for a pair, ending in
/// the answer tuple. Used as the demonstration text of few_cot prompts.
std::string decision_rationale(const Geometry& a, const Geometry& b);

/// One triplet per predicate applicable to `combo` (canonical order), then
/// round-robin over those predicates until k; k = 0 means one per predicate.
/// Candidates of each tuple are shuffled with a seed derived from `seed`.
/// Throws PoolExhausted when the pool cannot supply k examples.
std::vector<RelationTriplet> select_fewshot_examples(const std::vector<RelationTriplet>& pool, TypeCombo combo,
                                                     std::size_t k, std::uint64_t seed);

struct Task1Answer {
  std::string raw;
  /// Set when a parenthesized triple of (type, predicate, type) words was found.
  std::optional<RelationTuple> tuple;
  bool format_valid() const { return tuple.has_value(); }
};

/// Last parenthesized triple wins, so intermediate tuples of a reasoning
/// trace are skipped. Total: never throws.
Task1Answer parse_task1_answer(std::string_view text);

/// Verb phrase used in retrieval queries: "is within", "crosses", ...
std::string_view relation_phrase(Predicate p);

/// "Retrieve a [TYPE ]geometry that <phrase> the <wkt_b>." followed by one
/// line per expansion geometry (WKT at `precision`).
std::string render_task2_query(Predicate p, std::string_view wkt_b, std::optional<GeometryType> subject_type,
                               const std::vector<Geometry>& expansion = {}, int precision = 6);

/// Object-side query of the original relation: "Retrieve a TYPE geometry which the <wkt_a> <phrase>."
std::string render_task2_object_query(Predicate p, std::string_view wkt_a, GeometryType object_type);

struct GenerationExample {
  Predicate predicate;
  std::string wkt_b;
  GeometryType subject_type;
  std::string good;
  /// Required by few_negative: a geometry of the right type in a different relation.
  std::string bad;
};

/// Asks for one WKT geometry of `subject_type` standing in relation `p` to
/// `wkt_b`. Throws ExampleError when few-shot styles get no examples (or
/// few_negative examples lack a bad response) or zero-shot styles get some.
std::string render_task2_generation(const TemplateSet& templates, Predicate p, std::string_view wkt_b,
                                    GeometryType subject_type, GenerationStyle style,
                                    const std::vector<GenerationExample>& examples);

struct GeneratedGeometry {
  std::string raw;
  std::optional<Geometry> geometry;
  /// Why parsing failed ("no WKT found", a parse or validation message).
  std::string error;
  bool valid() const { return geometry.has_value(); }
};

/// First WKT substring that parses and validates. Total: never throws.
GeneratedGeometry parse_generated_geometry(std::string_view text);

/// Context shown with a Task 3 description. For PlaceName the names replace
/// the A/B placeholders instead of adding a sentence.
struct Task3Context {
  ContextKind kind = ContextKind::None;
  std::string a;
  std::string b;
};

/// The statement line: "A is bordered by B." (or with real place names).
std::string task3_statement(std::string_view description, const Task3Context& context);
/// The context sentence ("A is a city, and B is a university."), empty for None and PlaceName.
std::string task3_context_sentence(const Task3Context& context);
std::string render_task3(const TemplateSet& templates, std::string_view description, const Task3Context& context);

struct Task3Answer {
  std::string raw;
  /// First predicate stated.
  std::optional<Predicate> primary;
  /// Every distinct predicate mentioned, in order of first mention.
  std::vector<Predicate> mentions;
  bool multi_candidate() const { return mentions.size() > 1; }
};

/// Predicate words are matched as whole words, including base verb forms
/// ("touch", "contain"). Total: never throws.
Task3Answer parse_task3_answer(std::string_view text);

}  // namespace toporel
