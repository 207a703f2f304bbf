#include <doctest.h>

#include <map>

#include "support.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/llm.hpp"
#include "toporel/wkt.hpp"

using namespace toporel;
using namespace toporel::testing;

namespace {

SpatialEntity entity(std::string id, const char* wkt) { return {std::move(id), parse_wkt(wkt), {}, {}, "test"}; }

class ScriptedChat : public ChatBackend {
 public:
  explicit ScriptedChat(std::string reply) : reply_(std::move(reply)) {}
  std::string model() const override { return "scripted"; }
  std::string complete(const std::vector<ChatMessage>&, double, int) override { return reply_; }

 private:
  std::string reply_;
};

}  // namespace

TEST_CASE("ingest reads csv rows and collects rejections") {
  const auto r = ingest_text(
      "id,wkt,name,place_type\n"
      "a1,POINT (0 0),,poi\n"
      "a2,\"POLYGON ((0 0, 2 2, 2 0, 0 2, 0 0))\",Bow,park\n"
      "a3,\"LINESTRING (0 0, 1 1)\",Main Street,road\n"
      "a4,NOT WKT,,\n",
      IngestFormat::WktCsv, "mem");
  CHECK(r.corpus.size() == 2);
  CHECK(r.corpus.at("a1").place_type == "poi");
  CHECK(r.corpus.at("a3").name == "Main Street");
  REQUIRE(r.rejected.size() == 2);
  CHECK(r.rejected[0].id == "a2");
  CHECK(r.rejected[0].reason.find(rule_name(ViolationRule::RingSelfIntersection)) != std::string::npos);
  CHECK(r.rejected[1].record == 5);
}

TEST_CASE("ingest reads GeoJSON feature collections and JSONL") {
  const auto g = ingest_text(R"({"type":"FeatureCollection","features":[
      {"type":"Feature","id":"f1","geometry":{"type":"Point","coordinates":[1,2]},"properties":{}},
      {"type":"Feature","geometry":{"type":"Point","coordinates":[3,4]},"properties":{"id":"f2"}},
      {"type":"Feature","id":"f3","geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]},"properties":{"name":"x"}}]})",
                             IngestFormat::GeoJson, "mem");
  CHECK(g.corpus.size() == 3);
  CHECK(g.corpus.at("f2").geometry == Geometry::point(3, 4));

  const std::string jsonl = entities_to_jsonl(g.corpus.entities());
  const auto back = ingest_text(jsonl, IngestFormat::Jsonl, "mem");
  CHECK(back.rejected.empty());
  CHECK(entities_to_jsonl(back.corpus.entities()) == jsonl);
}

TEST_CASE("corpus rejects duplicate ids") {
  Corpus c;
  c.add(entity("x", "POINT (0 0)"));
  CHECK_THROWS_AS(c.add(entity("x", "POINT (1 1)")), DataError);
  CHECK_THROWS_AS(c.at("missing"), DataError);
  CHECK(c.find("missing") == nullptr);
}

TEST_CASE("triplet JSONL round trip") {
  const std::vector<RelationTriplet> ts{
      {"s1", Predicate::Within, "o1", GeometryType::Point, GeometryType::Polygon, Split::Eval},
      {"s2", Predicate::Crosses, "o2", GeometryType::LineString, GeometryType::LineString, std::nullopt}};
  CHECK(triplets_from_jsonl(triplets_to_jsonl(ts)) == ts);
  CHECK_THROWS_AS(triplets_from_jsonl("{\"subject_id\": 1}\n"), ParseError);
}

TEST_CASE("equals synthesis on points, lines and polygons") {
  const Geometry p = Geometry::point(1, 2);
  CHECK(synthesize_equal(p, 1) == p);

  CoordinateSeq cs;
  for (int i = 0; i < 10; ++i) cs.push_back({static_cast<double>(i), static_cast<double>(i % 3)});
  const Geometry line = LineString{cs};
  const Geometry dense = synthesize_equal(line, 5);
  CHECK(dense.get_if<LineString>()->coords.size() == 11);
  CHECK(classify(line, dense).predicate == Predicate::Equals);
  CHECK(to_wkt(dense) != to_wkt(line));

  const Geometry square = parse_wkt("POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0))");
  const Geometry rotated = synthesize_equal(square, 9);
  CHECK(rotated.get_if<Polygon>()->shell.front() != Coordinate{0, 0});
  CHECK(rotated.get_if<Polygon>()->shell.size() >= 6);
  CHECK(classify(square, rotated).predicate == Predicate::Equals);
  CHECK(synthesize_equal(square, 9) == rotated);

  CHECK_THROWS_AS(synthesize_equal(parse_wkt("MULTIPOINT ((0 0), (1 1))"), 1), UnsupportedType);
}

TEST_CASE("equals synthesis refuses segments without a representable interior vertex") {
  // At 6 decimals no point strictly between these endpoints is collinear with them.
  const Geometry g = parse_wkt("LINESTRING (0 0, 0.000003 0.000007)");
  CHECK_THROWS_AS(synthesize_equal(g, 1), SynthesisError);
}

TEST_CASE("disjoint sampling stays inside the buffer") {
  const SpatialEntity square = entity("sq", "POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))");
  const SpatialEntity near = entity("near", "POINT (1.0005 0.5)");
  const SpatialEntity far = entity("far", "POINT (5 5)");
  const SpatialEntity inside = entity("in", "POINT (0.5 0.5)");
  Rng rng(1);
  CHECK(sample_disjoint({&near, &far, &inside}, square, 0.001, rng).id == "near");
  CHECK_THROWS_AS(sample_disjoint({&far}, square, 0.001, rng), NoCandidate);
  CHECK_THROWS_AS(sample_disjoint({&inside}, square, 0.001, rng), NoCandidate);
}

TEST_CASE("sampling, splitting and retrieval on the synthetic corpus") {
  const TaskData d = synthetic_task_data(225, 3, 225);
  std::map<RelationTuple, std::array<std::size_t, 3>> counts;
  for (const auto& t : d.triplets) {
    REQUIRE(t.split.has_value());
    ++counts[t.tuple()][static_cast<std::size_t>(*t.split)];
  }
  CHECK(counts.size() == 35);
  for (const auto& [tuple, c] : counts) {
    CHECK(c == std::array<std::size_t, 3>{160, 40, 25});
  }
  CHECK(verify_triplets(d.corpus, d.triplets).empty());

  const auto retrieval = retrieval_corpus(d.triplets);
  CHECK(retrieval.size() == 1040);
  for (const auto& t : retrieval) {
    CHECK(t.predicate != Predicate::Disjoint);
    CHECK(t.split == Split::Eval);
  }
  for (const auto& t : d.triplets) {
    if (t.tuple() == RelationTuple{GeometryType::Point, Predicate::Equals, GeometryType::Point}) {
      CHECK(d.corpus.at(t.subject_id).geometry == d.corpus.at(t.object_id).geometry);
    }
  }
}

TEST_CASE("split is deterministic and checks group sizes") {
  const TaskData d = synthetic_task_data(5, 3);
  std::vector<RelationTriplet> untagged = d.triplets;
  for (auto& t : untagged) t.split.reset();
  const SplitCounts small{3, 1, 1};
  CHECK(split(untagged, 8, small) == split(untagged, 8, small));
  CHECK_THROWS_AS(split(untagged, 8), CountError);
}

TEST_CASE("sampling reports shortfalls") {
  Corpus tiny;
  tiny.add(entity("p", "POINT (0 0)"));
  tiny.add(entity("q", "POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))"));
  SampleOptions o;
  o.per_combo = 2;
  CHECK_THROWS_AS(sample_triplets(tiny, o), ShortfallError);
}

TEST_CASE("verify flags mislabeled triplets") {
  Corpus c;
  c.add(entity("p", "POINT (0.5 0.5)"));
  c.add(entity("q", "POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))"));
  const std::vector<RelationTriplet> ts{
      {"p", Predicate::Within, "q", GeometryType::Point, GeometryType::Polygon, std::nullopt},
      {"p", Predicate::Touches, "q", GeometryType::Point, GeometryType::Polygon, std::nullopt},
      {"p", Predicate::Within, "q", GeometryType::LineString, GeometryType::Polygon, std::nullopt}};
  const auto v = verify_triplets(c, ts);
  REQUIRE(v.size() == 2);
  CHECK(v[0].index == 1);
  CHECK(v[1].index == 2);
}

TEST_CASE("description unification") {
  CHECK(unify_description("home of") == "is home to");
  CHECK(unify_description("is home to") == "is home to");
  CHECK(unify_description("Borders") == "borders");
  CHECK(unify_description("  Is   Bordered  by ") == "is bordered by");
}

TEST_CASE("conversion pairs respect support thresholds") {
  std::vector<VernacularRecord> records;
  for (int i = 0; i < 6; ++i) {
    records.push_back({"A" + std::to_string(i), "share border with", "B" + std::to_string(i), Predicate::Touches,
                       "town", "city", "Polygon", "Polygon"});
  }
  for (int i = 0; i < 4; ++i) {
    records.push_back({"C" + std::to_string(i), "is near", "D" + std::to_string(i), Predicate::Disjoint, "town",
                       "city", "Polygon", "Polygon"});
  }
  const auto pairs = build_conversion_pairs(records, 1);
  bool found = false;
  for (const auto& p : pairs) {
    CHECK(p.description != "is near");
    CHECK(p.support >= kMinPairSupport);
    if (p.description == "share border with" && p.context_kind == ContextKind::None) {
      found = true;
      CHECK(p.predicate == Predicate::Touches);
      CHECK(p.support == 6);
    }
  }
  CHECK(found);
  CHECK(build_conversion_pairs(records, 1) == pairs);
  CHECK(pairs_from_jsonl(pairs_to_jsonl(pairs)) == pairs);
}

TEST_CASE("conversion pairs on the shipped demo vernacular") {
  const auto records = vernacular_from_jsonl(read_file(source_dir() + "/data/vernacular_demo.jsonl"));
  const auto pairs = build_conversion_pairs(records, 17);
  bool station = false;
  for (const auto& p : pairs) {
    // A consistent description needs no context; an ambiguous one is split by context.
    if (p.description == "is bordered by") CHECK(p.context_kind == ContextKind::None);
    if (p.description == "is located in") CHECK(p.context_kind != ContextKind::None);
    if (p.description == "is located in" && p.context_kind == ContextKind::PlaceType && p.context_a == "station") {
      station = true;
      CHECK(p.context_b == "city");
      CHECK(p.predicate == Predicate::Within);
    }
  }
  CHECK(station);
  CHECK(vernacular_to_jsonl(vernacular_from_jsonl(vernacular_to_jsonl(records))) == vernacular_to_jsonl(records));
}

TEST_CASE("extraction keeps only direct subject-object relations") {
  const std::vector<std::string> gazetteer{"Springfield", "Shelby County", "Illinois"};
  ScriptedChat chat("(Springfield; in; Shelby County)\n(Springfield; in; Illinois)\n(Shelby County; in; Illinois)\n");
  const auto out = extract_relations_from_text("a city Springfield in a County Shelby County, State Illinois",
                                               gazetteer, chat);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == ExtractedRelation{"Springfield", "in", "Shelby County", true});
  CHECK(extract_relations_from_text("nothing here", gazetteer, chat).empty());
  CHECK(recognize_places("Shelby County and Springfield", gazetteer) ==
        std::vector<std::string>{"Shelby County", "Springfield"});
}
