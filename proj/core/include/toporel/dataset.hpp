#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toporel/geometry.hpp"
#include "toporel/rng.hpp"
#include "toporel/topology.hpp"

namespace toporel {

class ChatBackend;

struct SpatialEntity {
  std::string id;
  Geometry geometry;
  std::optional<std::string> name;
  std::optional<std::string> place_type;
  std::string source;
};

/// Entities with unique ids, kept in insertion order.
class Corpus {
 public:
  /// Throws DataError on a duplicate id.
  void add(SpatialEntity e);
  const SpatialEntity* find(std::string_view id) const;
  /// Throws DataError when the id is unknown.
  const SpatialEntity& at(std::string_view id) const;
  const std::vector<SpatialEntity>& entities() const { return entities_; }
  std::size_t size() const { return entities_.size(); }

 private:
  std::vector<SpatialEntity> entities_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class IngestFormat { WktCsv, Jsonl, GeoJson };
std::optional<IngestFormat> parse_ingest_format(std::string_view name);

struct IngestRejection {
  std::size_t record = 0;  // 1-based line (or feature) number
  std::string id;
  std::string reason;
};

struct IngestResult {
  Corpus corpus;
  std::vector<IngestRejection> rejected;
};

/// wkt-csv: header `id,wkt,name,place_type`; fields may be double-quoted.
/// jsonl: objects with id, wkt (or GeoJSON `geometry`), name, place_type.
/// geojson: FeatureCollection; ids come from `id` or properties.id.
/// Bad records are collected in `rejected`; only unreadable files throw (IoError).
IngestResult ingest(const std::string& path, IngestFormat format);
IngestResult ingest_text(std::string_view text, IngestFormat format, const std::string& source);

/// One JSON object per line with round-trip coordinate precision.
std::string entities_to_jsonl(const std::vector<SpatialEntity>& entities);

enum class Split { Train, Eval, Fewshot };
std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view name);

struct RelationTriplet {
  std::string subject_id;
  Predicate predicate;
  std::string object_id;
  GeometryType type_a;
  GeometryType type_b;
  std::optional<Split> split;

  RelationTuple tuple() const { return {type_a, predicate, type_b}; }
  friend bool operator==(const RelationTriplet&, const RelationTriplet&) = default;
};

std::string triplets_to_jsonl(const std::vector<RelationTriplet>& triplets);
/// Throws ParseError (with the line number as offset) on malformed records.
std::vector<RelationTriplet> triplets_from_jsonl(std::string_view text);

/// Builds a geometry equal to g (as a point set) with a different vertex
/// sequence. Inserted vertices are exactly collinear with their edge both as
/// stored and after rounding to `precision` decimals, so the relation
/// survives serialization. Throws UnsupportedType for Multi* and
/// SynthesisError when no exactly representable vertex exists.
Geometry synthesize_equal(const Geometry& g, std::uint64_t seed, int precision = 6);

/// Entity of `pool` disjoint from `object` whose distance to it is at most
/// buffer_d, chosen uniformly by rng among all such entities. Throws
/// NoCandidate.
const SpatialEntity& sample_disjoint(const std::vector<const SpatialEntity*>& pool, const SpatialEntity& object,
                                     double buffer_d, Rng& rng);

struct SampleOptions {
  std::size_t per_combo = 225;
  std::uint64_t seed = 0;
  double disjoint_buffer = 0.001;
  int precision = 6;
};

struct TripletSet {
  /// Entities created by equals synthesis; their ids do not collide with the corpus.
  std::vector<SpatialEntity> synthesized;
  /// Ordered by tuple (canonical order), then sampling order.
  std::vector<RelationTriplet> triplets;
};

/// per_combo verified triplets for each of the 35 tuples: spatial-join
/// sampling for within/contains/overlaps/touches/crosses, equals synthesis,
/// buffered disjoint sampling. Throws ShortfallError naming every tuple that
/// could not be filled.
TripletSet sample_triplets(const Corpus& corpus, const SampleOptions& options);

struct SplitCounts {
  std::size_t train = 160;
  std::size_t eval = 40;
  std::size_t fewshot = 25;
  std::size_t total() const { return train + eval + fewshot; }
};

/// Tags every triplet; each tuple group is shuffled with its own derived seed.
/// Throws CountError unless every group has exactly counts.total() members.
std::vector<RelationTriplet> split(std::vector<RelationTriplet> triplets, std::uint64_t seed,
                                   const SplitCounts& counts = {});

/// Eval-split triplets of the 26 non-disjoint tuples.
std::vector<RelationTriplet> retrieval_corpus(const std::vector<RelationTriplet>& triplets);

struct TripletViolation {
  std::size_t index = 0;
  std::string message;
};

/// Re-runs classify on every triplet and checks type fields and tuple validity.
std::vector<TripletViolation> verify_triplets(const Corpus& corpus, const std::vector<RelationTriplet>& triplets);

struct SyntheticCorpusOptions {
  /// Scenes generated per relation kind; each yields at least one triplet for
  /// its tuple and its mirror.
  std::size_t scenes_per_kind = 225;
  std::uint64_t seed = 0;
  /// South-west corner of the scene grid, in micro-degrees.
  std::int64_t origin_x_micro = -89500000;
  std::int64_t origin_y_micro = 43000000;
};

/// Small rectilinear scenes on a 1e-5 degree lattice, laid out on separate
/// tiles, covering every relation kind. All coordinates are 6-decimal values,
/// so prompts at the default precision reproduce them exactly.
Corpus synthesize_corpus(const SyntheticCorpusOptions& options);

// Vernacular relations.

struct VernacularRecord {
  std::string subject;
  std::string description;
  std::string object;
  Predicate predicate;
  std::string place_type_a;
  std::string place_type_b;
  std::string geometry_type_a;
  std::string geometry_type_b;
};

std::vector<VernacularRecord> vernacular_from_jsonl(std::string_view text);
std::string vernacular_to_jsonl(const std::vector<VernacularRecord>& records);

/// Lowercases, collapses whitespace, strips a leading article, then applies
/// the shipped synonym table.
std::string unify_description(std::string_view phrase);

enum class ContextKind { None, PlaceType, GeometryType, PlaceName };
std::string_view context_kind_name(ContextKind k);
std::optional<ContextKind> parse_context_kind(std::string_view name);

struct ConversionPair {
  std::string description;
  Predicate predicate;
  ContextKind context_kind = ContextKind::None;
  /// Values for A and B (empty for None).
  std::string context_a;
  std::string context_b;
  std::size_t support = 0;

  friend bool operator==(const ConversionPair&, const ConversionPair&) = default;
};

inline constexpr std::size_t kMinPairSupport = 5;
inline constexpr std::size_t kPlaceNameSamples = 5;

/// Context-conditioned conversion pairs with support filtering; place-name
/// instances are sampled with the seed. Output order is deterministic.
std::vector<ConversionPair> build_conversion_pairs(const std::vector<VernacularRecord>& records, std::uint64_t seed);

std::string pairs_to_jsonl(const std::vector<ConversionPair>& pairs);
std::vector<ConversionPair> pairs_from_jsonl(std::string_view text);

struct ExtractedRelation {
  std::string subject;
  std::string phrase;
  std::string object;
  /// Extraction output always awaits manual review.
  bool needs_review = true;

  friend bool operator==(const ExtractedRelation&, const ExtractedRelation&) = default;
};

/// Place names of `gazetteer` mentioned in `text`, longest match first, in order of appearance.
std::vector<std::string> recognize_places(std::string_view text, const std::vector<std::string>& gazetteer);

/// Asks the backend for relation phrases between recognized places and keeps
/// only direct subject-object relations: for a chain A in B, B in C, the
/// transitive (A, in, C) and the object-to-object (B, in, C) are dropped.
std::vector<ExtractedRelation> extract_relations_from_text(std::string_view abstract_text,
                                                           const std::vector<std::string>& gazetteer,
                                                           ChatBackend& backend);

}  // namespace toporel
