#include <cctype>
#include <nlohmann/json.hpp>

#include "geojson_internal.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<std::string> non_empty(std::string s) {
  if (s.empty()) return std::nullopt;
  return s;
}

// Splits on commas outside double quotes and outside parentheses, so
// unquoted WKT with commas stays in one field.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  int depth = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == '(') {
      ++depth;
      cur.push_back(c);
    } else if (c == ')') {
      --depth;
      cur.push_back(c);
    } else if (c == ',' && depth <= 0) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

class Ingester {
 public:
  explicit Ingester(std::string source) : source_(std::move(source)) {}

  void accept(std::size_t record, SpatialEntity e) {
    e.source = source_;
    if (e.id.empty()) return reject(record, e.id, "missing id");
    if (e.geometry.is_empty()) return reject(record, e.id, "empty geometry");
    if (auto v = validate(e.geometry); !v.empty()) return reject(record, e.id, v.front().describe());
    if (result.corpus.find(e.id)) return reject(record, e.id, "duplicate id");
    result.corpus.add(std::move(e));
  }

  void reject(std::size_t record, const std::string& id, const std::string& reason) {
    result.rejected.push_back({record, id, reason});
  }

  IngestResult result;

 private:
  std::string source_;
};

std::string json_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return "";
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

void ingest_csv(std::string_view text, Ingester& ing) {
  std::map<std::string, std::size_t> columns;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    auto fields = split_csv(line);
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
      if (!columns.count("id") || !columns.count("wkt")) {
        throw FormatError("wkt-csv header must name id and wkt columns");
      }
      return;
    }
    auto field = [&](const char* name) -> std::string {
      auto it = columns.find(name);
      if (it == columns.end() || it->second >= fields.size()) return "";
      return fields[it->second];
    };
    SpatialEntity e;
    e.id = field("id");
    try {
      e.geometry = parse_wkt(field("wkt"));
    } catch (const ParseError& err) {
      return ing.reject(n, e.id, err.what());
    }
    e.name = non_empty(field("name"));
    e.place_type = non_empty(field("place_type"));
    ing.accept(n, std::move(e));
  });
}

SpatialEntity entity_from_json(const json& obj) {
  SpatialEntity e;
  e.id = json_string(obj, "id");
  if (obj.contains("wkt")) {
    e.geometry = parse_wkt(obj.at("wkt").get<std::string>());
  } else if (obj.contains("geometry")) {
    e.geometry = detail::geometry_from_geojson(obj.at("geometry"));
  } else {
    throw ParseError("record has neither wkt nor geometry", 0);
  }
  e.name = non_empty(json_string(obj, "name"));
  e.place_type = non_empty(json_string(obj, "place_type"));
  return e;
}

void ingest_jsonl(std::string_view text, Ingester& ing) {
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    SpatialEntity e;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) return ing.reject(n, "", "record is not a JSON object");
      e = entity_from_json(obj);
    } catch (const json::exception& err) {
      return ing.reject(n, "", err.what());
    } catch (const ParseError& err) {
      return ing.reject(n, "", err.what());
    }
    ing.accept(n, std::move(e));
  });
}

void ingest_geojson(std::string_view text, Ingester& ing) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& err) {
    throw ParseError(std::string("GeoJSON: ") + err.what(), 0);
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw FormatError("GeoJSON input must be a FeatureCollection");
  }
  std::size_t n = 0;
  for (const auto& f : doc.at("features")) {
    ++n;
    SpatialEntity e;
    try {
      const json props = f.contains("properties") && f.at("properties").is_object() ? f.at("properties") : json::object();
      e.id = json_string(f, "id");
      if (e.id.empty()) e.id = json_string(props, "id");
      if (e.id.empty()) e.id = "feature-" + std::to_string(n);
      e.geometry = detail::geometry_from_geojson(f.at("geometry"));
      e.name = non_empty(json_string(props, "name"));
      e.place_type = non_empty(json_string(props, "place_type"));
    } catch (const json::exception& err) {
      ing.reject(n, e.id, err.what());
      continue;
    } catch (const ParseError& err) {
      ing.reject(n, e.id, err.what());
      continue;
    }
    ing.accept(n, std::move(e));
  }
}

}  // namespace

void Corpus::add(SpatialEntity e) {
  if (index_.count(e.id)) throw DataError("duplicate entity id '" + e.id + "'");
  index_.emplace(e.id, entities_.size());
  entities_.push_back(std::move(e));
}

const SpatialEntity* Corpus::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entities_[it->second];
}

const SpatialEntity& Corpus::at(std::string_view id) const {
  const auto* e = find(id);
  if (!e) throw DataError("unknown entity id '" + std::string(id) + "'");
  return *e;
}

std::optional<IngestFormat> parse_ingest_format(std::string_view name) {
  if (name == "wkt-csv" || name == "csv") return IngestFormat::WktCsv;
  if (name == "jsonl") return IngestFormat::Jsonl;
  if (name == "geojson") return IngestFormat::GeoJson;
  return std::nullopt;
}

IngestResult ingest_text(std::string_view text, IngestFormat format, const std::string& source) {
  Ingester ing(source);
  switch (format) {
    case IngestFormat::WktCsv: ingest_csv(text, ing); break;
    case IngestFormat::Jsonl: ingest_jsonl(text, ing); break;
    case IngestFormat::GeoJson: ingest_geojson(text, ing); break;
  }
  return std::move(ing.result);
}

IngestResult ingest(const std::string& path, IngestFormat format) {
  return ingest_text(read_file(path), format, path);
}

std::string entities_to_jsonl(const std::vector<SpatialEntity>& entities) {
  std::string out;
  for (const auto& e : entities) {
    ordered_json obj;
    obj["id"] = e.id;
    obj["wkt"] = to_wkt(e.geometry, kRoundTripPrecision);
    if (e.name) obj["name"] = *e.name;
    if (e.place_type) obj["place_type"] = *e.place_type;
    if (!e.source.empty()) obj["source"] = e.source;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Eval: return "eval";
    case Split::Fewshot: return "fewshot";
  }
  return "";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "eval") return Split::Eval;
  if (name == "fewshot") return Split::Fewshot;
  return std::nullopt;
}

std::string triplets_to_jsonl(const std::vector<RelationTriplet>& triplets) {
  std::string out;
  for (const auto& t : triplets) {
    ordered_json obj;
    obj["subject_id"] = t.subject_id;
    obj["predicate"] = predicate_name(t.predicate);
    obj["object_id"] = t.object_id;
    obj["type_a"] = type_name(t.type_a);
    obj["type_b"] = type_name(t.type_b);
    if (t.split) obj["split"] = split_name(*t.split);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<RelationTriplet> triplets_from_jsonl(std::string_view text) {
  std::vector<RelationTriplet> out;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    auto fail = [&](const std::string& why) { throw ParseError("triplet line " + std::to_string(n) + ": " + why, n); };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (!obj.is_object()) fail("not a JSON object");
    RelationTriplet t;
    t.subject_id = json_string(obj, "subject_id");
    t.object_id = json_string(obj, "object_id");
    auto p = parse_predicate(json_string(obj, "predicate"));
    auto a = parse_type_name(json_string(obj, "type_a"));
    auto b = parse_type_name(json_string(obj, "type_b"));
    if (t.subject_id.empty() || t.object_id.empty()) fail("missing subject_id or object_id");
    if (!p) fail("unknown predicate");
    if (!a || !b) fail("unknown geometry type");
    t.predicate = *p;
    t.type_a = *a;
    t.type_b = *b;
    if (obj.contains("split")) {
      auto s = parse_split(json_string(obj, "split"));
      if (!s) fail("unknown split");
      t.split = s;
    }
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace toporel
