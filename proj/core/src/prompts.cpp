#include "toporel/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <regex>

#include "assets.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string dimension_text(std::string_view wkt) {
  const int d = dimension_value(dimension(parse_wkt(wkt)));
  return d < 0 ? "-" : std::to_string(d);
}

const char* location_name(int i) {
  static const char* names[] = {"interior", "boundary", "exterior"};
  return names[i];
}

// Sentence for the first position of `m` violating `pattern`, or empty when it matches.
std::string first_mismatch(const IntersectionMatrix& m, std::string_view pattern) {
  for (int i = 0; i < 9; ++i) {
    const char c = pattern[i];
    const int v = m.at(i / 3, i % 3);
    bool ok = true;
    if (c == 'T') ok = v >= 0;
    if (c == 'F') ok = v < 0;
    if (c >= '0' && c <= '2') ok = v == c - '0';
    if (ok) continue;
    std::string s = std::string("the ") + location_name(i / 3) + " of A and the " + location_name(i % 3) + " of B ";
    if (v < 0) return s + "do not intersect";
    return s + "intersect with dimension " + std::to_string(v);
  }
  return "";
}

}  // namespace

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (const auto& [name, content] : detail::template_assets()) s.templates_.emplace(name, content);
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::with_overrides(const std::string& dir) {
  TemplateSet s = builtin();
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot read template directory " + dir + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    s.templates_[entry.path().filename().string()] = read_file(entry.path().string());
  }
  return s;
}

const std::string& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("unknown template '" + std::string(name) + "'");
  return it->second;
}

std::string TemplateSet::render(std::string_view name, const std::map<std::string, std::string>& values) const {
  const std::string& text = get(name);
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t open = text.find('{', i);
    if (open == std::string::npos) break;
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) break;
    out.append(text, i, open - i);
    const std::string key = text.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    if (it == values.end()) {
      throw TemplateError("template '" + std::string(name) + "' has no value for {" + key + "}");
    }
    out += it->second;
    i = close + 1;
  }
  out.append(text, i);
  return out;
}

std::string TemplateSet::hash() const {
  std::string data;
  for (const auto& [name, content] : templates_) {
    data += name;
    data += '\0';
    data += std::to_string(content.size());
    data += '\0';
    data += content;
  }
  return sha256_hex(data);
}

std::string_view style_name(Task1Style s) {
  switch (s) {
    case Task1Style::Zero: return "zero";
    case Task1Style::ZeroDim: return "zero_dim";
    case Task1Style::Few: return "few";
    case Task1Style::ZeroCot: return "zero_cot";
    case Task1Style::FewCot: return "few_cot";
  }
  return "";
}

std::string_view style_name(GenerationStyle s) {
  switch (s) {
    case GenerationStyle::Zero: return "zero";
    case GenerationStyle::ZeroCheck: return "zero_check";
    case GenerationStyle::Few: return "few";
    case GenerationStyle::FewNegative: return "few_negative";
  }
  return "";
}

std::optional<Task1Style> parse_task1_style(std::string_view name) {
  for (Task1Style s : {Task1Style::Zero, Task1Style::ZeroDim, Task1Style::Few, Task1Style::ZeroCot, Task1Style::FewCot}) {
    if (style_name(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<GenerationStyle> parse_generation_style(std::string_view name) {
  for (GenerationStyle s :
       {GenerationStyle::Zero, GenerationStyle::ZeroCheck, GenerationStyle::Few, GenerationStyle::FewNegative}) {
    if (style_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string decision_rationale(const Geometry& a, const Geometry& b) {
  const Classification c = classify(a, b);
  const int da = dimension_value(dimension(a)), db = dimension_value(dimension(b));
  std::string out = "A is a " + std::string(geometry_type(a)) + " with dimension " + std::to_string(da) + " and B is a " +
                    std::string(geometry_type(b)) + " with dimension " + std::to_string(db) + ".\n";
  out += "Their intersection matrix is " + c.matrix.to_string() + ".\n";

  struct Rule {
    Predicate p;
    std::string pattern;
  };
  std::vector<Rule> rules{{Predicate::Equals, "T*F**FFF*"}, {Predicate::Within, "T*F**F***"},
                          {Predicate::Contains, "T*****FF*"}};
  if (da < db) rules.push_back({Predicate::Crosses, "T*T******"});
  if (da > db) rules.push_back({Predicate::Crosses, "T*****T**"});
  if (da == 1 && db == 1) rules.push_back({Predicate::Crosses, "0********"});
  if (da == db) rules.push_back({Predicate::Overlaps, da == 1 ? "1*T***T**" : "T*T***T**"});
  if (!(da == 0 && db == 0)) {
    rules.push_back({Predicate::Touches, "FT*******"});
    rules.push_back({Predicate::Touches, "F**T*****"});
    rules.push_back({Predicate::Touches, "F***T****"});
  }
  rules.push_back({Predicate::Disjoint, "FF*FF****"});

  for (const Rule& r : rules) {
    const std::string why = first_mismatch(c.matrix, r.pattern);
    out += "Check " + std::string(predicate_name(r.p)) + " (" + r.pattern + "): ";
    if (why.empty() && c.predicate == r.p) {
      out += "holds.\n";
      break;
    }
    out += "fails, " + why + ".\n";
  }
  if (c.predicate) {
    out += "So the relation is " + RelationTuple{a.type(), *c.predicate, b.type()}.to_string() + ".";
  } else {
    out += "No predicate applies.";
  }
  return out;
}

std::string render_task1(const TemplateSet& t, std::string_view wkt_a, std::string_view wkt_b, Task1Style style,
                         const std::vector<Task1Example>& examples) {
  if (is_fewshot(style) && examples.empty()) {
    throw ExampleError(std::string(style_name(style)) + " prompts need at least one example");
  }
  if (!is_fewshot(style) && !examples.empty()) {
    throw ExampleError(std::string(style_name(style)) + " prompts take no examples");
  }
  parse_wkt(wkt_a);
  parse_wkt(wkt_b);
  std::string out = t.get("task1_instruction.txt");
  if (style == Task1Style::ZeroDim) {
    out += "\n" + t.render("task1_dimension.txt", {{"dim_a", dimension_text(wkt_a)}, {"dim_b", dimension_text(wkt_b)}});
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    std::map<std::string, std::string> v{{"index", std::to_string(i + 1)},
                                         {"wkt_a", e.wkt_a},
                                         {"wkt_b", e.wkt_b},
                                         {"answer", e.answer.to_string()}};
    if (style == Task1Style::FewCot) {
      v["rationale"] = decision_rationale(parse_wkt(e.wkt_a), parse_wkt(e.wkt_b));
      out += "\n" + t.render("task1_example_cot.txt", v);
    } else {
      out += "\n" + t.render("task1_example.txt", v);
    }
  }
  out += "\n" + t.render("task1_query.txt", {{"wkt_a", std::string(wkt_a)}, {"wkt_b", std::string(wkt_b)}});
  if (style == Task1Style::ZeroCot || style == Task1Style::FewCot) out += t.get("task1_cot.txt");
  return out;
}

std::vector<RelationTriplet> select_fewshot_examples(const std::vector<RelationTriplet>& pool, TypeCombo combo,
                                                     std::size_t k, std::uint64_t seed) {
  const std::vector<Predicate> preds = applicable_predicates(combo);
  if (k == 0) k = preds.size();
  std::vector<std::vector<const RelationTriplet*>> queues;
  std::size_t available = 0;
  for (Predicate p : preds) {
    std::vector<const RelationTriplet*> q;
    for (const auto& t : pool) {
      if (t.type_a == combo.a && t.type_b == combo.b && t.predicate == p) q.push_back(&t);
    }
    Rng rng(derive_seed(seed, "fewshot:" + RelationTuple{combo.a, p, combo.b}.key()));
    rng.shuffle(q);
    available += q.size();
    queues.push_back(std::move(q));
  }
  if (available < k) {
    throw PoolExhausted("few-shot pool for " + combo.name() + " has " + std::to_string(available) + " triplets, " +
                        std::to_string(k) + " requested");
  }
  std::vector<RelationTriplet> out;
  for (std::size_t round = 0; out.size() < k; ++round) {
    for (const auto& q : queues) {
      if (out.size() == k) break;
      if (round < q.size()) out.push_back(*q[round]);
    }
  }
  return out;
}

Task1Answer parse_task1_answer(std::string_view text) {
  Task1Answer ans;
  ans.raw = std::string(text);
  static const std::regex triple(R"(\(\s*([A-Za-z]+)\s*,\s*([A-Za-z]+)\s*,\s*([A-Za-z]+)\s*\))");
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), triple); it != std::sregex_iterator(); ++it) {
    const auto a = parse_type_name((*it)[1].str());
    const auto p = parse_predicate((*it)[2].str());
    const auto b = parse_type_name((*it)[3].str());
    if (a && p && b) ans.tuple = RelationTuple{*a, *p, *b};
  }
  return ans;
}

std::string_view relation_phrase(Predicate p) {
  switch (p) {
    case Predicate::Equals: return "equals";
    case Predicate::Within: return "is within";
    case Predicate::Contains: return "contains";
    case Predicate::Overlaps: return "overlaps";
    case Predicate::Touches: return "touches";
    case Predicate::Crosses: return "crosses";
    case Predicate::Disjoint: return "is disjoint from";
  }
  return "";
}

std::string render_task2_query(Predicate p, std::string_view wkt_b, std::optional<GeometryType> subject_type,
                               const std::vector<Geometry>& expansion, int precision) {
  std::string out = "Retrieve a ";
  if (subject_type) out += upper(type_name(*subject_type)) + " ";
  out += "geometry that " + std::string(relation_phrase(p)) + " the " + std::string(wkt_b) + ".";
  for (const Geometry& g : expansion) out += "\n" + to_wkt(g, precision);
  return out;
}

std::string render_task2_object_query(Predicate p, std::string_view wkt_a, GeometryType object_type) {
  return "Retrieve a " + upper(type_name(object_type)) + " geometry which the " + std::string(wkt_a) + " " +
         std::string(relation_phrase(p)) + ".";
}

std::string render_task2_generation(const TemplateSet& t, Predicate p, std::string_view wkt_b, GeometryType subject_type,
                                    GenerationStyle style, const std::vector<GenerationExample>& examples) {
  if (is_fewshot(style) && examples.empty()) {
    throw ExampleError(std::string(style_name(style)) + " prompts need at least one example");
  }
  if (!is_fewshot(style) && !examples.empty()) {
    throw ExampleError(std::string(style_name(style)) + " prompts take no examples");
  }
  std::string out = t.render("task2_generation.txt", {{"subject_type", std::string(type_name(subject_type))},
                                                       {"predicate", std::string(predicate_name(p))}});
  if (style == GenerationStyle::ZeroCheck) out += t.get("task2_check.txt");
  for (const auto& e : examples) {
    std::map<std::string, std::string> v{{"query", render_task2_query(e.predicate, e.wkt_b, e.subject_type)},
                                         {"good", e.good}};
    if (style == GenerationStyle::FewNegative) {
      if (e.bad.empty()) throw ExampleError("few_negative examples need a bad response");
      v["bad"] = e.bad;
      out += "\n" + t.render("task2_example_negative.txt", v);
    } else {
      out += "\n" + t.render("task2_example.txt", v);
    }
  }
  out += "\n" + t.render("task2_request.txt", {{"query", render_task2_query(p, wkt_b, subject_type)}});
  return out;
}

GeneratedGeometry parse_generated_geometry(std::string_view text) {
  GeneratedGeometry out;
  out.raw = std::string(text);
  const auto spans = find_wkt_spans(text);
  if (spans.empty()) {
    out.error = "no WKT found";
    return out;
  }
  const WktSpan& s = spans.front();
  try {
    Geometry g = parse_wkt(text.substr(s.begin, s.end - s.begin));
    if (auto v = validate(g); !v.empty()) {
      out.error = v.front().describe();
    } else if (g.is_empty()) {
      out.error = "empty geometry";
    } else {
      out.geometry = std::move(g);
    }
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

std::string task3_statement(std::string_view description, const Task3Context& context) {
  if (context.kind == ContextKind::PlaceName) {
    return context.a + " " + std::string(description) + " " + context.b + ".";
  }
  return "A " + std::string(description) + " B.";
}

std::string task3_context_sentence(const Task3Context& context) {
  switch (context.kind) {
    case ContextKind::PlaceType: return "A is a " + context.a + ", and B is a " + context.b + ".";
    case ContextKind::GeometryType: return "A is " + context.a + ", and B is " + context.b + ".";
    case ContextKind::None:
    case ContextKind::PlaceName: break;
  }
  return "";
}

std::string render_task3(const TemplateSet& t, std::string_view description, const Task3Context& context) {
  const std::string sentence = task3_context_sentence(context);
  const bool names = context.kind == ContextKind::PlaceName;
  return t.render("task3.txt", {{"statement", task3_statement(description, context)},
                                {"context", sentence.empty() ? "" : " " + sentence},
                                {"subject", names ? context.a : "A"},
                                {"object", names ? context.b : "B"}});
}

Task3Answer parse_task3_answer(std::string_view text) {
  Task3Answer ans;
  ans.raw = std::string(text);
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    if (auto p = parse_predicate(lower(text.substr(i, j - i)))) {
      if (!ans.primary) ans.primary = p;
      if (std::find(ans.mentions.begin(), ans.mentions.end(), *p) == ans.mentions.end()) ans.mentions.push_back(*p);
    }
    i = j;
  }
  return ans;
}

}  // namespace toporel
