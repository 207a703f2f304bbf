#include <algorithm>
#include <cctype>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "assets.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/llm.hpp"
#include "toporel/prompts.hpp"

namespace toporel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string normalize_phrase(std::string_view phrase) {
  std::string out;
  bool space = false;
  for (char c : phrase) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (std::string_view article : {"a ", "an ", "the "}) {
    if (out.size() > article.size() && out.compare(0, article.size(), article) == 0) {
      out.erase(0, article.size());
      break;
    }
  }
  return out;
}

const std::map<std::string, std::string>& synonym_table() {
  static const std::map<std::string, std::string> table = [] {
    std::map<std::string, std::string> t;
    for_each_line(detail::data_assets().at("description_synonyms.tsv"), [&](std::string_view line, std::size_t) {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) return;
      t[normalize_phrase(line.substr(0, tab))] = normalize_phrase(line.substr(tab + 1));
    });
    return t;
  }();
  return table;
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError("vernacular line " + std::to_string(line) + ": missing string field " + key, line);
  }
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
}

struct Group {
  std::set<Predicate> predicates;
  std::size_t count = 0;
};

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string unify_description(std::string_view phrase) {
  std::string p = normalize_phrase(phrase);
  const auto& table = synonym_table();
  if (auto it = table.find(p); it != table.end()) return it->second;
  return p;
}

std::vector<VernacularRecord> vernacular_from_jsonl(std::string_view text) {
  std::vector<VernacularRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("vernacular line " + std::to_string(n) + ": " + e.what(), n);
    }
    if (!obj.is_object()) throw ParseError("vernacular line " + std::to_string(n) + ": not an object", n);
    VernacularRecord r;
    r.subject = required_string(obj, "subject", n);
    r.description = required_string(obj, "description", n);
    r.object = required_string(obj, "object", n);
    auto p = parse_predicate(required_string(obj, "predicate", n));
    if (!p) throw ParseError("vernacular line " + std::to_string(n) + ": unknown predicate", n);
    if (trim(r.description).empty()) throw ParseError("vernacular line " + std::to_string(n) + ": empty description", n);
    r.predicate = *p;
    r.place_type_a = optional_string(obj, "place_type_a");
    r.place_type_b = optional_string(obj, "place_type_b");
    r.geometry_type_a = optional_string(obj, "geometry_type_a");
    r.geometry_type_b = optional_string(obj, "geometry_type_b");
    out.push_back(std::move(r));
  });
  return out;
}

std::string vernacular_to_jsonl(const std::vector<VernacularRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json obj;
    obj["subject"] = r.subject;
    obj["description"] = r.description;
    obj["object"] = r.object;
    obj["predicate"] = predicate_name(r.predicate);
    obj["place_type_a"] = r.place_type_a;
    obj["place_type_b"] = r.place_type_b;
    obj["geometry_type_a"] = r.geometry_type_a;
    obj["geometry_type_b"] = r.geometry_type_b;
    out += obj.dump() + "\n";
  }
  return out;
}

std::string_view context_kind_name(ContextKind k) {
  switch (k) {
    case ContextKind::None: return "none";
    case ContextKind::PlaceType: return "place_type";
    case ContextKind::GeometryType: return "geometry_type";
    case ContextKind::PlaceName: return "place_name";
  }
  return "";
}

std::optional<ContextKind> parse_context_kind(std::string_view name) {
  for (ContextKind k : {ContextKind::None, ContextKind::PlaceType, ContextKind::GeometryType, ContextKind::PlaceName}) {
    if (context_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<ConversionPair> build_conversion_pairs(const std::vector<VernacularRecord>& records, std::uint64_t seed) {
  std::map<std::string, std::vector<const VernacularRecord*>> by_description;
  for (const auto& r : records) by_description[unify_description(r.description)].push_back(&r);

  std::vector<ConversionPair> out;
  for (const auto& [desc, group] : by_description) {
    std::set<Predicate> preds;
    for (const auto* r : group) preds.insert(r->predicate);
    if (preds.size() == 1) {
      if (group.size() >= kMinPairSupport) out.push_back({desc, *preds.begin(), ContextKind::None, "", "", group.size()});
      continue;
    }

    // Context groups whose records agree on one predicate.
    auto conditioned = [&](ContextKind kind, auto key_of) {
      std::map<std::pair<std::string, std::string>, Group> groups;
      for (const auto* r : group) {
        auto key = key_of(*r);
        if (key.first.empty() || key.second.empty()) continue;
        auto& g = groups[key];
        g.predicates.insert(r->predicate);
        ++g.count;
      }
      for (const auto& [key, g] : groups) {
        if (g.predicates.size() == 1 && g.count >= kMinPairSupport) {
          out.push_back({desc, *g.predicates.begin(), kind, key.first, key.second, g.count});
        }
      }
    };
    conditioned(ContextKind::PlaceType, [](const VernacularRecord& r) { return std::pair(r.place_type_a, r.place_type_b); });
    conditioned(ContextKind::GeometryType,
                [](const VernacularRecord& r) { return std::pair(r.geometry_type_a, r.geometry_type_b); });

    std::map<Predicate, std::vector<const VernacularRecord*>> by_predicate;
    for (const auto* r : group) by_predicate[r->predicate].push_back(r);
    for (const auto& [p, members] : by_predicate) {
      if (members.size() < kMinPairSupport) continue;
      Rng rng(derive_seed(seed, "place_name:" + desc + "|" + std::string(predicate_name(p))));
      for (std::size_t k : rng.sample_indices(members.size(), kPlaceNameSamples)) {
        out.push_back({desc, p, ContextKind::PlaceName, members[k]->subject, members[k]->object, members.size()});
      }
    }
  }
  return out;
}

std::string pairs_to_jsonl(const std::vector<ConversionPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    ordered_json obj;
    obj["description"] = p.description;
    obj["predicate"] = predicate_name(p.predicate);
    obj["context_kind"] = context_kind_name(p.context_kind);
    obj["context_a"] = p.context_a;
    obj["context_b"] = p.context_b;
    obj["support"] = p.support;
    out += obj.dump() + "\n";
  }
  return out;
}

std::vector<ConversionPair> pairs_from_jsonl(std::string_view text) {
  std::vector<ConversionPair> out;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    auto fail = [&](const std::string& why) { throw ParseError("pair line " + std::to_string(n) + ": " + why, n); };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (!obj.is_object()) fail("not an object");
    ConversionPair p;
    p.description = required_string(obj, "description", n);
    auto pred = parse_predicate(required_string(obj, "predicate", n));
    if (!pred) fail("unknown predicate");
    p.predicate = *pred;
    auto kind = parse_context_kind(optional_string(obj, "context_kind").empty() ? "none"
                                                                               : optional_string(obj, "context_kind"));
    if (!kind) fail("unknown context kind");
    p.context_kind = *kind;
    p.context_a = optional_string(obj, "context_a");
    p.context_b = optional_string(obj, "context_b");
    if (obj.contains("support")) {
      if (!obj["support"].is_number_unsigned()) fail("support must be a non-negative integer");
      p.support = obj["support"].get<std::size_t>();
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<std::string> recognize_places(std::string_view text, const std::vector<std::string>& gazetteer) {
  std::vector<std::string> names;
  for (const auto& g : gazetteer) {
    if (!g.empty()) names.push_back(g);
  }
  std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  auto word_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  std::vector<std::pair<std::size_t, std::string>> found;
  std::vector<bool> taken(text.size(), false);
  for (const auto& name : names) {
    for (std::size_t pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
      const std::size_t end = pos + name.size();
      if (pos > 0 && word_char(text[pos - 1]) && word_char(name.front())) continue;
      if (end < text.size() && word_char(text[end]) && word_char(name.back())) continue;
      if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(pos), taken.begin() + static_cast<std::ptrdiff_t>(end),
                      [](bool b) { return b; })) {
        continue;
      }
      std::fill(taken.begin() + static_cast<std::ptrdiff_t>(pos), taken.begin() + static_cast<std::ptrdiff_t>(end), true);
      found.emplace_back(pos, name);
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [pos, name] : found) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
  }
  return out;
}

std::vector<ExtractedRelation> extract_relations_from_text(std::string_view abstract_text,
                                                           const std::vector<std::string>& gazetteer,
                                                           ChatBackend& backend) {
  const std::vector<std::string> places = recognize_places(abstract_text, gazetteer);
  if (places.size() < 2) return {};
  std::string list;
  for (const auto& p : places) list += (list.empty() ? "" : "; ") + p;
  const std::string prompt =
      TemplateSet::builtin().render("extract_relations.txt", {{"places", list}, {"text", std::string(abstract_text)}});
  const std::string response = backend.complete({{"user", prompt}}, 0.0, 0);

  const std::set<std::string> known(places.begin(), places.end());
  std::vector<ExtractedRelation> raw;
  for_each_line(response, [&](std::string_view line, std::size_t) {
    const auto open = line.find('(');
    const auto close = line.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return;
    const std::string_view body = line.substr(open + 1, close - open - 1);
    const auto s1 = body.find(';');
    const auto s2 = s1 == std::string_view::npos ? s1 : body.find(';', s1 + 1);
    if (s2 == std::string_view::npos) return;
    ExtractedRelation r{trim(body.substr(0, s1)), trim(body.substr(s1 + 1, s2 - s1 - 1)), trim(body.substr(s2 + 1))};
    if (r.phrase.empty() || r.subject == r.object || !known.count(r.subject) || !known.count(r.object)) return;
    if (std::find(raw.begin(), raw.end(), r) == raw.end()) raw.push_back(std::move(r));
  });

  auto has = [&](const std::string& s, const std::string& p, const std::string& o) {
    return std::any_of(raw.begin(), raw.end(),
                       [&](const ExtractedRelation& r) { return r.subject == s && r.phrase == p && r.object == o; });
  };
  std::vector<ExtractedRelation> out;
  for (const auto& r : raw) {
    bool implied = false;
    for (const auto& place : places) {
      if (place == r.subject || place == r.object) continue;
      // (X p Z) and (Z p Y) make (X p Y) transitive; (W p X) and (W p Y) make it object-to-object.
      if ((has(r.subject, r.phrase, place) && has(place, r.phrase, r.object)) ||
          (has(place, r.phrase, r.subject) && has(place, r.phrase, r.object))) {
        implied = true;
        break;
      }
    }
    if (!implied) out.push_back(r);
  }
  return out;
}

}  // namespace toporel
