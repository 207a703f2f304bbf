#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toporel/classifier.hpp"
#include "toporel/dataset.hpp"
#include "toporel/llm.hpp"
#include "toporel/neighborhood.hpp"
#include "toporel/prompts.hpp"

namespace toporel {

/// Entities plus split-tagged triplets, as written by the dataset builder.
struct TaskData {
  Corpus corpus;
  std::vector<RelationTriplet> triplets;

  /// Reads <dir>/entities.jsonl and <dir>/triplets.jsonl.
  static TaskData load(const std::string& dir);
  std::vector<RelationTriplet> with_split(Split s) const;
};

// Task 1: relation qualification.

struct Task1Record {
  std::string item_id;
  std::string style;
  std::string subject_id;
  std::string object_id;
  RelationTuple truth;
  std::string raw;
  std::optional<RelationTuple> parsed;
  bool format_valid = false;
  bool types_valid = false;
  bool combo_valid = false;
  bool correct = false;
  /// Topological distance between prediction and truth, for valid incorrect answers.
  std::optional<int> distance;
  /// Backend failure message; the item then counts as format-invalid.
  std::string error;
};

/// Verdicts of a raw answer against the truth; combo_valid implies
/// types_valid implies format_valid.
Task1Record score_task1(std::string item_id, std::string style, const RelationTriplet& truth, std::string raw,
                        const NeighborhoodTable& graphs = default_graphs());

struct Task1Options {
  Task1Style style = Task1Style::Zero;
  /// Few-shot examples per prompt; 0 = one per applicable predicate.
  std::size_t fewshot_k = 0;
  std::uint64_t seed = 0;
  int precision = 6;
  int max_concurrency = 4;
};

/// One record per eval-split triplet, sorted by item id. Backend errors are
/// recorded per item and the run continues.
std::vector<Task1Record> run_task1(const TaskData& data, LlmClient& client, const TemplateSet& templates,
                                   const Task1Options& options);

struct Task1Metrics {
  std::size_t records = 0;
  double format_validity = 0;
  double type_validity = 0;
  double combo_validity = 0;
  /// Correct over combination-valid records.
  double accuracy = 0;
  /// Correct over all records.
  double accuracy_all = 0;
  double invalid_rate = 0;
  double incorrect_rate = 0;
  /// Mean topological distance of valid incorrect answers; empty when there are none.
  MeanDistance distance;
};

Task1Metrics task1_metrics(const std::vector<Task1Record>& records);

inline constexpr std::size_t kPredicateCount = 7;

/// Truth (rows) x prediction (columns) counts in canonical predicate order,
/// plus the records whose answer was not a valid combination.
struct ConfusionMatrix {
  TypeCombo combo;
  std::array<std::array<std::size_t, kPredicateCount>, kPredicateCount> counts{};
  std::size_t invalid = 0;
  std::size_t total() const;
};

ConfusionMatrix confusion(const std::vector<Task1Record>& records, TypeCombo combo);

/// Embedding features [Enc(A); Enc(B)] of WKT at `precision` for each triplet.
std::vector<LabeledFeature> triplet_features(const TaskData& data, const std::vector<RelationTriplet>& triplets,
                                             LlmClient& client, int precision = 6);

/// Task 1 records for the forest's predictions on the eval split.
std::vector<Task1Record> evaluate_classifier(const TaskData& data, const RandomForest& model, LlmClient& client,
                                             int precision = 6);

// Task 2: spatial query processing.

struct RankResult {
  std::string query_id;
  /// Candidate ids by descending cosine similarity after filtering.
  std::vector<std::string> ranked;
  /// 1-based rank of the target; empty when it is not a candidate.
  std::optional<std::size_t> rank;
};

double cosine_similarity(const Embedding& a, const Embedding& b);

/// Removes `filter_ids` (never the target) and orders the rest by descending
/// cosine similarity, ties by ascending id. Throws DimensionMismatch.
RankResult rank_candidates(std::string query_id, const Embedding& query,
                           const std::vector<std::pair<std::string, Embedding>>& candidates,
                           const std::string& target_id, const std::set<std::string>& filter_ids);

struct RankMetrics {
  std::size_t queries = 0;
  double mrr = 0;
  /// k -> fraction of targets ranked within the top k.
  std::map<int, double> hits;
};

RankMetrics mrr_hits(const std::vector<std::optional<std::size_t>>& ranks, const std::vector<int>& ks = {5, 10, 20});

enum class QueryMode { Direct, Typed, Expanded1, Expanded3, ObjectOriginal, ObjectReversed };
std::string_view query_mode_name(QueryMode m);
std::optional<QueryMode> parse_query_mode(std::string_view name);
/// Synthetic geometries generated per query (0 for non-expanded modes).
std::size_t expansion_count(QueryMode m);

struct GenerationRecord {
  std::string item_id;
  int sample_index = 0;
  Predicate predicate;
  GeometryType subject_type;
  std::string reference_id;
  std::string raw;
  bool valid_wkt = false;
  bool type_match = false;
  bool predicate_match = false;
  /// Distance from the requested predicate when the type matches but the predicate does not.
  std::optional<int> distance;
  std::string error;
  /// Canonical WKT of the parsed geometry (empty when invalid).
  std::string wkt;
};

struct GenerationMetrics {
  std::size_t generated = 0;
  double valid_wkt = 0;
  double type_match = 0;
  double predicate_match = 0;
  MeanDistance distance;
};

GenerationMetrics generation_metrics(const std::vector<GenerationRecord>& records);

struct Task2Options {
  QueryMode mode = QueryMode::Direct;
  GenerationStyle generation_style = GenerationStyle::Zero;
  /// Examples per generation prompt for few-shot styles.
  std::size_t fewshot_k = 2;
  std::uint64_t seed = 0;
  int precision = 6;
  int max_concurrency = 4;
};

struct Task2Record {
  std::string item_id;
  std::string mode;
  std::string target_id;
  std::string reference_id;
  /// Predicate stated in the query, with the target as subject.
  Predicate predicate;
  std::string query;
  std::optional<std::size_t> rank;
  std::size_t candidates = 0;
  std::size_t filtered = 0;
};

struct Task2Result {
  std::vector<Task2Record> queries;
  std::vector<GenerationRecord> generations;
  RankMetrics ranking;
  GenerationMetrics generation;
};

/// Generation validity only: `samples` geometries per retrieval triplet.
std::vector<GenerationRecord> run_task2_generation(const TaskData& data, LlmClient& client, const TemplateSet& templates,
                                                   const Task2Options& options, std::size_t samples = 1);

/// Filtered retrieval over the 1040-style retrieval corpus. Candidates are all
/// entities referenced by it; the filter set of a query is every candidate
/// other than the target standing in the queried relation to the reference.
Task2Result run_task2(const TaskData& data, LlmClient& client, const TemplateSet& templates, const Task2Options& options);

// Task 3: vernacular conversion.

struct Task3Options {
  std::size_t repetitions = 10;
  bool with_context = true;
  int max_concurrency = 4;
};

struct Task3Record {
  std::string item_id;
  std::size_t pair_index = 0;
  int run = 0;
  std::string raw;
  std::optional<Predicate> primary;
  std::vector<Predicate> mentions;
  std::string error;
};

struct Task3PairResult {
  ConversionPair pair;
  bool with_context = true;
  std::size_t runs = 0;
  /// Runs whose mentions include the true predicate.
  std::size_t frequency = 0;
  /// True-predicate mentions over all mentions.
  double accuracy = 0;
  double entropy = 0;
  std::map<Predicate, std::size_t> mention_counts;
};

/// Shannon entropy (natural log) of a count distribution; 0 for empty input.
double mention_entropy(const std::map<Predicate, std::size_t>& counts);

std::vector<Task3Record> run_task3(const std::vector<ConversionPair>& pairs, LlmClient& client,
                                   const TemplateSet& templates, const Task3Options& options);
std::vector<Task3PairResult> task3_results(const std::vector<ConversionPair>& pairs,
                                           const std::vector<Task3Record>& records, bool with_context);

// Reports: relative path -> file content, byte-stable for identical inputs.

using ReportFiles = std::map<std::string, std::string>;

ReportFiles task1_report(const std::vector<Task1Record>& records, std::string_view model);
ReportFiles task2_report(const Task2Result& result, std::string_view model);
ReportFiles task3_report(const std::vector<ConversionPair>& pairs, const std::vector<Task3Record>& records,
                         bool with_context, std::string_view model);

std::string task1_records_to_jsonl(const std::vector<Task1Record>& records);
/// Throws ParseError.
std::vector<Task1Record> task1_records_from_jsonl(std::string_view text);
std::string task2_records_to_jsonl(const std::vector<Task2Record>& records);
std::vector<Task2Record> task2_records_from_jsonl(std::string_view text);
std::string generation_records_to_jsonl(const std::vector<GenerationRecord>& records);
std::vector<GenerationRecord> generation_records_from_jsonl(std::string_view text);
/// Recomputes the metrics of stored Task 2 records.
Task2Result task2_result_from_records(std::vector<Task2Record> queries, std::vector<GenerationRecord> generations);
std::string task3_records_to_jsonl(const std::vector<Task3Record>& records);
std::vector<Task3Record> task3_records_from_jsonl(std::string_view text);

/// Writes every file under `dir` (atomically, creating subdirectories).
void write_report(const std::string& dir, const ReportFiles& files);

}  // namespace toporel
