#include "toporel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string item_id_of(const RelationTriplet& t) {
  return t.subject_id + "|" + std::string(predicate_name(t.predicate)) + "|" + t.object_id;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t predicate_index(Predicate p) { return static_cast<std::size_t>(p); }

std::string combo_file_name(TypeCombo c) {
  return std::string(type_name(c.a)) + "-" + std::string(type_name(c.b));
}

MeanDistance mean_of(const std::vector<int>& distances) {
  MeanDistance m;
  m.incorrect = distances.size();
  m.empty = distances.empty();
  if (!m.empty) {
    double s = 0;
    for (int d : distances) s += d;
    m.value = s / static_cast<double>(distances.size());
  }
  return m;
}

json distance_json(const MeanDistance& d) { return d.empty ? json(nullptr) : json(d.value); }
std::string distance_cell(const MeanDistance& d) { return d.empty ? "-" : fixed(d.value); }

// Rethrows failures that invalidate the whole run rather than one item.
template <typename F>
std::string guarded(F&& fn, std::string& error) {
  try {
    return fn();
  } catch (const AuthError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    error = e.what();
  }
  return "";
}

json optional_tuple_json(const std::optional<RelationTuple>& t) { return t ? json(t->to_string()) : json(nullptr); }

std::optional<RelationTuple> tuple_from_string(const std::string& s) {
  auto parsed = parse_task1_answer(s);
  return parsed.tuple;
}

json predicates_json(const std::vector<Predicate>& ps) {
  json arr = json::array();
  for (Predicate p : ps) arr.push_back(predicate_name(p));
  return arr;
}

Predicate predicate_field(const json& obj, const char* key) {
  auto p = parse_predicate(obj.at(key).get<std::string>());
  if (!p) throw ParseError(std::string("unknown predicate in field ") + key, 0);
  return *p;
}

template <typename T, typename F>
std::vector<T> records_from_jsonl(std::string_view text, const char* what, F&& from_json) {
  std::vector<T> out;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) return;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string(what) + " line " + std::to_string(n) + ": " + e.what(), n);
    }
  });
  return out;
}

}  // namespace

TaskData TaskData::load(const std::string& dir) {
  TaskData data;
  IngestResult entities = ingest(dir + "/entities.jsonl", IngestFormat::Jsonl);
  if (!entities.rejected.empty()) {
    const auto& r = entities.rejected.front();
    throw DataError(dir + "/entities.jsonl record " + std::to_string(r.record) + " rejected: " + r.reason);
  }
  data.corpus = std::move(entities.corpus);
  data.triplets = triplets_from_jsonl(read_file(dir + "/triplets.jsonl"));
  for (const auto& t : data.triplets) {
    data.corpus.at(t.subject_id);
    data.corpus.at(t.object_id);
  }
  return data;
}

std::vector<RelationTriplet> TaskData::with_split(Split s) const {
  std::vector<RelationTriplet> out;
  for (const auto& t : triplets) {
    if (t.split == s) out.push_back(t);
  }
  return out;
}

Task1Record score_task1(std::string item_id, std::string style, const RelationTriplet& truth, std::string raw,
                        const NeighborhoodTable& graphs) {
  Task1Record r;
  r.item_id = std::move(item_id);
  r.style = std::move(style);
  r.subject_id = truth.subject_id;
  r.object_id = truth.object_id;
  r.truth = truth.tuple();
  r.parsed = parse_task1_answer(raw).tuple;
  r.raw = std::move(raw);
  r.format_valid = r.parsed.has_value();
  r.types_valid = r.format_valid && r.parsed->type_a == r.truth.type_a && r.parsed->type_b == r.truth.type_b;
  r.combo_valid = r.types_valid && is_valid_combination(*r.parsed);
  r.correct = r.combo_valid && r.parsed->predicate == r.truth.predicate;
  if (r.combo_valid && !r.correct) {
    r.distance = graphs.distance(r.truth.combo(), r.parsed->predicate, r.truth.predicate);
  }
  return r;
}

std::vector<Task1Record> run_task1(const TaskData& data, LlmClient& client, const TemplateSet& templates,
                                   const Task1Options& options) {
  std::vector<RelationTriplet> items = data.with_split(Split::Eval);
  std::sort(items.begin(), items.end(),
            [](const RelationTriplet& a, const RelationTriplet& b) { return item_id_of(a) < item_id_of(b); });
  const std::vector<RelationTriplet> pool = data.with_split(Split::Fewshot);
  auto wkt_of = [&](const std::string& id) { return to_wkt(data.corpus.at(id).geometry, options.precision); };

  // Demonstrations are fixed per type combination for the whole run.
  std::map<TypeCombo, std::vector<Task1Example>> examples;
  if (is_fewshot(options.style)) {
    for (const auto& t : items) {
      const TypeCombo combo = t.tuple().combo();
      if (examples.count(combo)) continue;
      auto& ex = examples[combo];
      for (const auto& e : select_fewshot_examples(pool, combo, options.fewshot_k, derive_seed(options.seed, "task1"))) {
        ex.push_back({wkt_of(e.subject_id), wkt_of(e.object_id), e.tuple()});
      }
    }
  }

  const std::string style(style_name(options.style));
  std::vector<Task1Record> out(items.size());
  detail::parallel_for(items.size(), options.max_concurrency, [&](std::size_t i) {
    const auto& t = items[i];
    std::string error;
    const std::string raw = guarded(
        [&] {
          const std::string prompt = render_task1(templates, wkt_of(t.subject_id), wkt_of(t.object_id), options.style,
                                                  is_fewshot(options.style) ? examples.at(t.tuple().combo())
                                                                            : std::vector<Task1Example>{});
          return client.chat({{"user", prompt}}, 0).response;
        },
        error);
    out[i] = score_task1(item_id_of(t), style, t, raw);
    out[i].error = error;
  });
  client.flush();
  return out;
}

Task1Metrics task1_metrics(const std::vector<Task1Record>& records) {
  Task1Metrics m;
  m.records = records.size();
  std::size_t format = 0, types = 0, combo = 0, correct = 0;
  std::vector<int> distances;
  for (const auto& r : records) {
    format += r.format_valid;
    types += r.types_valid;
    combo += r.combo_valid;
    correct += r.correct;
    if (r.distance) distances.push_back(*r.distance);
  }
  m.format_validity = ratio(format, m.records);
  m.type_validity = ratio(types, m.records);
  m.combo_validity = ratio(combo, m.records);
  m.accuracy = ratio(correct, combo);
  m.accuracy_all = ratio(correct, m.records);
  m.invalid_rate = ratio(m.records - combo, m.records);
  m.incorrect_rate = ratio(combo - correct, m.records);
  m.distance = mean_of(distances);
  return m;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = invalid;
  for (const auto& row : counts) {
    for (std::size_t c : row) s += c;
  }
  return s;
}

ConfusionMatrix confusion(const std::vector<Task1Record>& records, TypeCombo combo) {
  ConfusionMatrix m;
  m.combo = combo;
  for (const auto& r : records) {
    if (r.truth.combo() != combo) continue;
    if (r.combo_valid) {
      ++m.counts[predicate_index(r.truth.predicate)][predicate_index(r.parsed->predicate)];
    } else {
      ++m.invalid;
    }
  }
  return m;
}

std::vector<LabeledFeature> triplet_features(const TaskData& data, const std::vector<RelationTriplet>& triplets,
                                             LlmClient& client, int precision) {
  std::vector<std::string> texts;
  for (const auto& t : triplets) {
    texts.push_back(to_wkt(data.corpus.at(t.subject_id).geometry, precision));
    texts.push_back(to_wkt(data.corpus.at(t.object_id).geometry, precision));
  }
  std::vector<LabeledFeature> out;
  if (texts.empty()) return out;
  const std::vector<Embedding> vecs = client.embed_batch(texts);
  client.flush();
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    LabeledFeature f;
    f.feature = vecs[2 * i];
    f.feature.insert(f.feature.end(), vecs[2 * i + 1].begin(), vecs[2 * i + 1].end());
    f.label = triplets[i].tuple();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Task1Record> evaluate_classifier(const TaskData& data, const RandomForest& model, LlmClient& client,
                                             int precision) {
  std::vector<RelationTriplet> items = data.with_split(Split::Eval);
  std::sort(items.begin(), items.end(),
            [](const RelationTriplet& a, const RelationTriplet& b) { return item_id_of(a) < item_id_of(b); });
  const auto features = triplet_features(data, items, client, precision);
  std::vector<Task1Record> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back(score_task1(item_id_of(items[i]), "random_forest", items[i],
                              model.predict(features[i].feature).to_string()));
  }
  return out;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("vectors of size " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

RankResult rank_candidates(std::string query_id, const Embedding& query,
                           const std::vector<std::pair<std::string, Embedding>>& candidates,
                           const std::string& target_id, const std::set<std::string>& filter_ids) {
  std::vector<std::pair<double, const std::string*>> scored;
  for (const auto& [id, vec] : candidates) {
    if (id != target_id && filter_ids.count(id)) continue;
    scored.emplace_back(cosine_similarity(query, vec), &id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return *x.second < *y.second;
  });
  RankResult r;
  r.query_id = std::move(query_id);
  for (const auto& [score, id] : scored) {
    r.ranked.push_back(*id);
    if (*id == target_id && !r.rank) r.rank = r.ranked.size();
  }
  return r;
}

RankMetrics mrr_hits(const std::vector<std::optional<std::size_t>>& ranks, const std::vector<int>& ks) {
  RankMetrics m;
  m.queries = ranks.size();
  double rr = 0;
  std::map<int, std::size_t> hits;
  for (int k : ks) hits[k] = 0;
  for (const auto& r : ranks) {
    if (!r) continue;
    rr += 1.0 / static_cast<double>(*r);
    for (int k : ks) {
      if (*r <= static_cast<std::size_t>(k)) ++hits[k];
    }
  }
  m.mrr = ranks.empty() ? 0.0 : rr / static_cast<double>(ranks.size());
  for (const auto& [k, h] : hits) m.hits[k] = ratio(h, ranks.size());
  return m;
}

std::string_view query_mode_name(QueryMode m) {
  switch (m) {
    case QueryMode::Direct: return "direct";
    case QueryMode::Typed: return "typed";
    case QueryMode::Expanded1: return "expanded_1";
    case QueryMode::Expanded3: return "expanded_3";
    case QueryMode::ObjectOriginal: return "object_original";
    case QueryMode::ObjectReversed: return "object_reversed";
  }
  return "";
}

std::optional<QueryMode> parse_query_mode(std::string_view name) {
  for (QueryMode m : {QueryMode::Direct, QueryMode::Typed, QueryMode::Expanded1, QueryMode::Expanded3,
                      QueryMode::ObjectOriginal, QueryMode::ObjectReversed}) {
    if (query_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

std::size_t expansion_count(QueryMode m) {
  if (m == QueryMode::Expanded1) return 1;
  if (m == QueryMode::Expanded3) return 3;
  return 0;
}

GenerationMetrics generation_metrics(const std::vector<GenerationRecord>& records) {
  GenerationMetrics m;
  m.generated = records.size();
  std::size_t wkt = 0, type = 0, pred = 0;
  std::vector<int> distances;
  for (const auto& r : records) {
    wkt += r.valid_wkt;
    type += r.type_match;
    pred += r.predicate_match;
    if (r.distance) distances.push_back(*r.distance);
  }
  m.valid_wkt = ratio(wkt, m.generated);
  m.type_match = ratio(type, m.generated);
  m.predicate_match = ratio(pred, m.generated);
  m.distance = mean_of(distances);
  return m;
}

namespace {

// Shared machinery of the Task 2 runners.
class Task2Context {
 public:
  Task2Context(const TaskData& data, LlmClient& client, const TemplateSet& templates, const Task2Options& options)
      : data_(data), client_(client), templates_(templates), options_(options) {
    if (is_fewshot(options.generation_style)) build_examples();
  }

  std::string wkt(const std::string& id) const { return to_wkt(data_.corpus.at(id).geometry, options_.precision); }

  // Generation prompt for a subject of `type` in relation `p` to `reference_id`.
  std::vector<GenerationRecord> generate(const std::string& item_id, Predicate p, GeometryType type,
                                         const std::string& reference_id, std::size_t samples) {
    std::vector<GenerationRecord> out;
    const Geometry& reference = data_.corpus.at(reference_id).geometry;
    const RelationTuple tuple{type, p, reference.type()};
    std::vector<GenerationExample> ex;
    if (is_fewshot(options_.generation_style)) {
      auto it = examples_.find(tuple);
      if (it == examples_.end() || it->second.empty()) {
        throw ExampleError("no few-shot generation examples for " + tuple.to_string());
      }
      ex = it->second;
    }
    const std::string prompt =
        render_task2_generation(templates_, p, wkt(reference_id), type, options_.generation_style, ex);
    for (std::size_t s = 0; s < samples; ++s) {
      GenerationRecord r;
      r.item_id = item_id;
      r.sample_index = static_cast<int>(s);
      r.predicate = p;
      r.subject_type = type;
      r.reference_id = reference_id;
      r.raw = guarded([&] { return client_.chat({{"user", prompt}}, static_cast<int>(s)).response; }, r.error);
      if (r.error.empty()) score(r, reference);
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  void score(GenerationRecord& r, const Geometry& reference) const {
    const GeneratedGeometry g = parse_generated_geometry(r.raw);
    if (!g.valid()) return;
    r.valid_wkt = true;
    r.wkt = to_wkt(*g.geometry, kRoundTripPrecision);
    r.type_match = g.geometry->type() == r.subject_type;
    std::optional<Predicate> got;
    try {
      got = classify(*g.geometry, reference).predicate;
    } catch (const Error& e) {
      r.error = e.what();
    }
    r.predicate_match = got == r.predicate;
    if (r.type_match && got && *got != r.predicate) {
      const TypeCombo combo{r.subject_type, reference.type()};
      const auto& graph = default_graphs().graph(combo);
      if (graph.has_node(*got)) r.distance = graph.distance(*got, r.predicate);
    }
  }

  void build_examples() {
    const std::vector<RelationTriplet> pool = data_.with_split(Split::Fewshot);
    std::map<RelationTuple, std::vector<const RelationTriplet*>> by_tuple;
    for (const auto& t : pool) by_tuple[t.tuple()].push_back(&t);
    for (auto& [tuple, members] : by_tuple) {
      Rng rng(derive_seed(options_.seed, "generation:" + tuple.key()));
      rng.shuffle(members);
      auto& ex = examples_[tuple];
      for (const RelationTriplet* t : members) {
        if (ex.size() == options_.fewshot_k) break;
        GenerationExample e{t->predicate, wkt(t->object_id), t->type_a, wkt(t->subject_id), ""};
        if (options_.generation_style == GenerationStyle::FewNegative) {
          const Geometry& object = data_.corpus.at(t->object_id).geometry;
          for (Predicate q : applicable_predicates(tuple.combo())) {
            if (q == t->predicate) continue;
            if (auto bad = construct_related(object, t->type_a, q)) {
              e.bad = to_wkt(*bad, kRoundTripPrecision);
              break;
            }
          }
          if (e.bad.empty()) continue;
        }
        ex.push_back(std::move(e));
      }
    }
  }

  const TaskData& data_;
  LlmClient& client_;
  const TemplateSet& templates_;
  const Task2Options& options_;
  std::map<RelationTuple, std::vector<GenerationExample>> examples_;
};

std::vector<RelationTriplet> sorted_retrieval(const TaskData& data) {
  std::vector<RelationTriplet> items = retrieval_corpus(data.triplets);
  std::sort(items.begin(), items.end(),
            [](const RelationTriplet& a, const RelationTriplet& b) { return item_id_of(a) < item_id_of(b); });
  return items;
}

}  // namespace

std::vector<GenerationRecord> run_task2_generation(const TaskData& data, LlmClient& client, const TemplateSet& templates,
                                                   const Task2Options& options, std::size_t samples) {
  const auto items = sorted_retrieval(data);
  Task2Context ctx(data, client, templates, options);
  std::vector<std::vector<GenerationRecord>> slots(items.size());
  detail::parallel_for(items.size(), options.max_concurrency, [&](std::size_t i) {
    const auto& t = items[i];
    slots[i] = ctx.generate(item_id_of(t), t.predicate, t.type_a, t.object_id, samples);
  });
  client.flush();
  std::vector<GenerationRecord> out;
  for (auto& s : slots) std::move(s.begin(), s.end(), std::back_inserter(out));
  return out;
}

Task2Result run_task2(const TaskData& data, LlmClient& client, const TemplateSet& templates,
                      const Task2Options& options) {
  const auto items = sorted_retrieval(data);
  Task2Context ctx(data, client, templates, options);

  std::set<std::string> ids;
  for (const auto& t : items) {
    ids.insert(t.subject_id);
    ids.insert(t.object_id);
  }
  const std::vector<std::string> cand_ids(ids.begin(), ids.end());
  std::vector<std::string> cand_texts;
  std::vector<PreparedGeometry> prepared;
  std::map<std::string, std::size_t> cand_index;
  for (const auto& id : cand_ids) {
    cand_index[id] = cand_texts.size();
    cand_texts.push_back(ctx.wkt(id));
    prepared.emplace_back(data.corpus.at(id).geometry);
  }
  std::vector<std::pair<std::string, Embedding>> candidates;
  if (!cand_texts.empty()) {
    const auto vecs = client.embed_batch(cand_texts);
    for (std::size_t i = 0; i < cand_ids.size(); ++i) candidates.emplace_back(cand_ids[i], vecs[i]);
  }

  const bool object_side = options.mode == QueryMode::ObjectOriginal || options.mode == QueryMode::ObjectReversed;
  const std::size_t expansions = expansion_count(options.mode);
  Task2Result result;
  result.queries.resize(items.size());
  std::vector<std::vector<GenerationRecord>> gens(items.size());

  detail::parallel_for(items.size(), options.max_concurrency, [&](std::size_t i) {
    const auto& t = items[i];
    Task2Record& q = result.queries[i];
    q.item_id = item_id_of(t);
    q.mode = std::string(query_mode_name(options.mode));
    q.target_id = object_side ? t.object_id : t.subject_id;
    q.reference_id = object_side ? t.subject_id : t.object_id;
    q.predicate = object_side ? inverse(t.predicate) : t.predicate;
    const GeometryType target_type = object_side ? t.type_b : t.type_a;
    const std::string ref_wkt = ctx.wkt(q.reference_id);

    std::vector<Geometry> expansion;
    if (expansions > 0) {
      gens[i] = ctx.generate(q.item_id, q.predicate, target_type, q.reference_id, expansions);
      for (const auto& g : gens[i]) {
        if (g.valid_wkt) expansion.push_back(parse_wkt(g.wkt));
      }
    }
    switch (options.mode) {
      case QueryMode::Direct:
      case QueryMode::Expanded1:
      case QueryMode::Expanded3:
        q.query = render_task2_query(q.predicate, ref_wkt, std::nullopt, expansion, options.precision);
        break;
      case QueryMode::Typed:
      case QueryMode::ObjectReversed:
        q.query = render_task2_query(q.predicate, ref_wkt, target_type);
        break;
      case QueryMode::ObjectOriginal:
        q.query = render_task2_object_query(t.predicate, ref_wkt, target_type);
        break;
    }

    // Known positives: candidates standing in the queried relation to the reference.
    std::set<std::string> filter;
    const PreparedGeometry& ref = prepared[cand_index.at(q.reference_id)];
    for (std::size_t c = 0; c < cand_ids.size(); ++c) {
      if (cand_ids[c] == q.target_id || !prepared[c].envelope().intersects(ref.envelope())) continue;
      if (classify(prepared[c], ref).predicate == q.predicate) filter.insert(cand_ids[c]);
    }
    q.filtered = filter.size();
    q.candidates = candidates.size() - filter.size();
    const Embedding qv = client.embed_batch({q.query}).front();
    q.rank = rank_candidates(q.item_id, qv, candidates, q.target_id, filter).rank;
  });
  client.flush();
  for (auto& g : gens) std::move(g.begin(), g.end(), std::back_inserter(result.generations));
  return task2_result_from_records(std::move(result.queries), std::move(result.generations));
}

Task2Result task2_result_from_records(std::vector<Task2Record> queries, std::vector<GenerationRecord> generations) {
  Task2Result r;
  std::sort(queries.begin(), queries.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  std::stable_sort(generations.begin(), generations.end(), [](const auto& a, const auto& b) {
    return a.item_id != b.item_id ? a.item_id < b.item_id : a.sample_index < b.sample_index;
  });
  std::vector<std::optional<std::size_t>> ranks;
  for (const auto& q : queries) ranks.push_back(q.rank);
  r.ranking = mrr_hits(ranks);
  r.generation = generation_metrics(generations);
  r.queries = std::move(queries);
  r.generations = std::move(generations);
  return r;
}

double mention_entropy(const std::map<Predicate, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [p, c] : counts) total += c;
  if (total == 0) return 0;
  double h = 0;
  for (const auto& [p, c] : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / static_cast<double>(total);
    h -= q * std::log(q);
  }
  return h == 0 ? 0.0 : h;
}

std::vector<Task3Record> run_task3(const std::vector<ConversionPair>& pairs, LlmClient& client,
                                   const TemplateSet& templates, const Task3Options& options) {
  const std::size_t reps = options.repetitions;
  std::vector<Task3Record> out(pairs.size() * reps);
  detail::parallel_for(out.size(), options.max_concurrency, [&](std::size_t i) {
    const std::size_t pi = i / reps;
    const int run = static_cast<int>(i % reps);
    const ConversionPair& pair = pairs[pi];
    Task3Context ctx;
    if (options.with_context) ctx = {pair.context_kind, pair.context_a, pair.context_b};
    char id[32];
    std::snprintf(id, sizeof id, "%06zu#%03d", pi, run);
    Task3Record& r = out[i];
    r.item_id = id;
    r.pair_index = pi;
    r.run = run;
    r.raw = guarded(
        [&] { return client.chat({{"user", render_task3(templates, pair.description, ctx)}}, run).response; },
        r.error);
    const Task3Answer a = parse_task3_answer(r.raw);
    r.primary = a.primary;
    r.mentions = a.mentions;
  });
  client.flush();
  return out;
}

std::vector<Task3PairResult> task3_results(const std::vector<ConversionPair>& pairs,
                                           const std::vector<Task3Record>& records, bool with_context) {
  std::vector<Task3PairResult> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i].pair = pairs[i];
    out[i].with_context = with_context;
  }
  for (const auto& r : records) {
    if (r.pair_index >= out.size()) throw DataError("record " + r.item_id + " refers to an unknown pair");
    auto& res = out[r.pair_index];
    ++res.runs;
    for (Predicate p : r.mentions) ++res.mention_counts[p];
    if (std::find(r.mentions.begin(), r.mentions.end(), res.pair.predicate) != r.mentions.end()) ++res.frequency;
  }
  for (auto& res : out) {
    std::size_t total = 0;
    for (const auto& [p, c] : res.mention_counts) total += c;
    auto it = res.mention_counts.find(res.pair.predicate);
    res.accuracy = ratio(it == res.mention_counts.end() ? 0 : it->second, total);
    res.entropy = mention_entropy(res.mention_counts);
  }
  return out;
}

std::string task1_records_to_jsonl(const std::vector<Task1Record>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json o;
    o["item_id"] = r.item_id;
    o["style"] = r.style;
    o["subject_id"] = r.subject_id;
    o["object_id"] = r.object_id;
    o["truth"] = r.truth.to_string();
    o["raw"] = r.raw;
    o["parsed"] = optional_tuple_json(r.parsed);
    o["format_valid"] = r.format_valid;
    o["types_valid"] = r.types_valid;
    o["combo_valid"] = r.combo_valid;
    o["correct"] = r.correct;
    o["distance"] = r.distance ? json(*r.distance) : json(nullptr);
    o["error"] = r.error;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<Task1Record> task1_records_from_jsonl(std::string_view text) {
  return records_from_jsonl<Task1Record>(text, "task1 record", [](const json& o) {
    auto truth = tuple_from_string(o.at("truth").get<std::string>());
    if (!truth) throw ParseError("bad truth tuple", 0);
    RelationTriplet t{o.at("subject_id").get<std::string>(), truth->predicate, o.at("object_id").get<std::string>(),
                      truth->type_a, truth->type_b, std::nullopt};
    Task1Record r = score_task1(o.at("item_id").get<std::string>(), o.at("style").get<std::string>(), t,
                                o.at("raw").get<std::string>());
    r.error = o.value("error", "");
    return r;
  });
}

std::string task2_records_to_jsonl(const std::vector<Task2Record>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json o;
    o["item_id"] = r.item_id;
    o["mode"] = r.mode;
    o["target_id"] = r.target_id;
    o["reference_id"] = r.reference_id;
    o["predicate"] = predicate_name(r.predicate);
    o["query"] = r.query;
    o["rank"] = r.rank ? json(*r.rank) : json(nullptr);
    o["candidates"] = r.candidates;
    o["filtered"] = r.filtered;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<Task2Record> task2_records_from_jsonl(std::string_view text) {
  return records_from_jsonl<Task2Record>(text, "task2 record", [](const json& o) {
    Task2Record r;
    r.item_id = o.at("item_id").get<std::string>();
    r.mode = o.at("mode").get<std::string>();
    r.target_id = o.at("target_id").get<std::string>();
    r.reference_id = o.at("reference_id").get<std::string>();
    r.predicate = predicate_field(o, "predicate");
    r.query = o.at("query").get<std::string>();
    if (!o.at("rank").is_null()) r.rank = o.at("rank").get<std::size_t>();
    r.candidates = o.at("candidates").get<std::size_t>();
    r.filtered = o.at("filtered").get<std::size_t>();
    return r;
  });
}

std::string generation_records_to_jsonl(const std::vector<GenerationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json o;
    o["item_id"] = r.item_id;
    o["sample_index"] = r.sample_index;
    o["predicate"] = predicate_name(r.predicate);
    o["subject_type"] = type_name(r.subject_type);
    o["reference_id"] = r.reference_id;
    o["raw"] = r.raw;
    o["valid_wkt"] = r.valid_wkt;
    o["type_match"] = r.type_match;
    o["predicate_match"] = r.predicate_match;
    o["distance"] = r.distance ? json(*r.distance) : json(nullptr);
    o["error"] = r.error;
    o["wkt"] = r.wkt;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<GenerationRecord> generation_records_from_jsonl(std::string_view text) {
  return records_from_jsonl<GenerationRecord>(text, "generation record", [](const json& o) {
    GenerationRecord r;
    r.item_id = o.at("item_id").get<std::string>();
    r.sample_index = o.at("sample_index").get<int>();
    r.predicate = predicate_field(o, "predicate");
    auto type = parse_type_name(o.at("subject_type").get<std::string>());
    if (!type) throw ParseError("bad subject_type", 0);
    r.subject_type = *type;
    r.reference_id = o.at("reference_id").get<std::string>();
    r.raw = o.at("raw").get<std::string>();
    r.valid_wkt = o.at("valid_wkt").get<bool>();
    r.type_match = o.at("type_match").get<bool>();
    r.predicate_match = o.at("predicate_match").get<bool>();
    if (!o.at("distance").is_null()) r.distance = o.at("distance").get<int>();
    r.error = o.value("error", "");
    r.wkt = o.value("wkt", "");
    return r;
  });
}

std::string task3_records_to_jsonl(const std::vector<Task3Record>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json o;
    o["item_id"] = r.item_id;
    o["pair_index"] = r.pair_index;
    o["run"] = r.run;
    o["raw"] = r.raw;
    o["primary"] = r.primary ? json(predicate_name(*r.primary)) : json(nullptr);
    o["mentions"] = predicates_json(r.mentions);
    o["error"] = r.error;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<Task3Record> task3_records_from_jsonl(std::string_view text) {
  return records_from_jsonl<Task3Record>(text, "task3 record", [](const json& o) {
    Task3Record r;
    r.item_id = o.at("item_id").get<std::string>();
    r.pair_index = o.at("pair_index").get<std::size_t>();
    r.run = o.at("run").get<int>();
    r.raw = o.at("raw").get<std::string>();
    const Task3Answer a = parse_task3_answer(r.raw);
    r.primary = a.primary;
    r.mentions = a.mentions;
    r.error = o.value("error", "");
    return r;
  });
}

ReportFiles task1_report(const std::vector<Task1Record>& input, std::string_view model) {
  std::vector<Task1Record> records = input;
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  const Task1Metrics m = task1_metrics(records);
  const std::string style = records.empty() ? "" : records.front().style;
  ReportFiles files;
  files["records.jsonl"] = task1_records_to_jsonl(records);

  ordered_json metrics;
  metrics["task"] = "task1";
  metrics["model"] = model;
  metrics["style"] = style;
  metrics["records"] = m.records;
  metrics["format_validity"] = m.format_validity;
  metrics["type_validity"] = m.type_validity;
  metrics["combo_validity"] = m.combo_validity;
  metrics["accuracy"] = m.accuracy;
  metrics["accuracy_all"] = m.accuracy_all;
  metrics["invalid_rate"] = m.invalid_rate;
  metrics["incorrect_rate"] = m.incorrect_rate;
  metrics["dist_incorrect"] = distance_json(m.distance);
  metrics["incorrect_count"] = m.distance.incorrect;
  metrics["item_errors"] = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.error.empty(); });
  ordered_json per_combo = ordered_json::object();

  std::string validity = "| Model | Prompt | Valid format | Valid geometry types | Valid combination |\n|---|---|---|---|---|\n";
  std::string classification = "| Model | Prompt | Accuracy | Accuracy (all outputs) | Dist(Incorrect) |\n|---|---|---|---|---|\n";
  std::string by_combo = "| Combination | Records | Valid combination | Accuracy | Dist(Incorrect) |\n|---|---|---|---|---|\n";
  if (!records.empty()) {
    validity += "| " + std::string(model) + " | " + style + " | " + fixed(m.format_validity) + " | " +
                fixed(m.type_validity) + " | " + fixed(m.combo_validity) + " |\n";
    classification += "| " + std::string(model) + " | " + style + " | " + fixed(m.accuracy) + " | " +
                      fixed(m.accuracy_all) + " | " + distance_cell(m.distance) + " |\n";
  }
  for (GeometryType a : kSimpleTypes) {
    for (GeometryType b : kSimpleTypes) {
      const TypeCombo combo{a, b};
      std::vector<Task1Record> subset;
      for (const auto& r : records) {
        if (r.truth.combo() == combo) subset.push_back(r);
      }
      const ConfusionMatrix cm = confusion(records, combo);
      std::string csv = "truth\\predicted";
      for (Predicate p : kAllPredicates) csv += "," + std::string(predicate_name(p));
      csv += ",invalid\n";
      std::array<std::size_t, kPredicateCount> invalid_by_truth{};
      for (const auto& r : subset) {
        if (!r.combo_valid) ++invalid_by_truth[predicate_index(r.truth.predicate)];
      }
      for (Predicate t : kAllPredicates) {
        csv += predicate_name(t);
        for (Predicate p : kAllPredicates) csv += "," + std::to_string(cm.counts[predicate_index(t)][predicate_index(p)]);
        csv += "," + std::to_string(invalid_by_truth[predicate_index(t)]) + "\n";
      }
      files["confusion/" + combo_file_name(combo) + ".csv"] = csv;
      if (subset.empty()) continue;
      const Task1Metrics cmx = task1_metrics(subset);
      ordered_json c;
      c["records"] = cmx.records;
      c["combo_validity"] = cmx.combo_validity;
      c["accuracy"] = cmx.accuracy;
      c["dist_incorrect"] = distance_json(cmx.distance);
      per_combo[combo.name()] = c;
      by_combo += "| " + combo.name() + " | " + std::to_string(cmx.records) + " | " + fixed(cmx.combo_validity) + " | " +
                  fixed(cmx.accuracy) + " | " + distance_cell(cmx.distance) + " |\n";
    }
  }
  metrics["per_combo"] = per_combo;
  files["metrics.json"] = metrics.dump(2) + "\n";
  files["tables/validity.md"] = validity;
  files["tables/classification.md"] = classification;
  files["tables/per_combination.md"] = by_combo;
  return files;
}

ReportFiles task2_report(const Task2Result& result, std::string_view model) {
  ReportFiles files;
  files["records.jsonl"] = task2_records_to_jsonl(result.queries);
  files["generations.jsonl"] = generation_records_to_jsonl(result.generations);
  const std::string mode = result.queries.empty() ? "" : result.queries.front().mode;

  ordered_json metrics;
  metrics["task"] = "task2";
  metrics["model"] = model;
  metrics["mode"] = mode;
  metrics["queries"] = result.ranking.queries;
  metrics["mrr"] = result.ranking.mrr;
  for (const auto& [k, v] : result.ranking.hits) metrics["hits@" + std::to_string(k)] = v;
  ordered_json gen;
  gen["generated"] = result.generation.generated;
  gen["valid_wkt"] = result.generation.valid_wkt;
  gen["type_match"] = result.generation.type_match;
  gen["predicate_match"] = result.generation.predicate_match;
  gen["dist_incorrect"] = distance_json(result.generation.distance);
  metrics["generation"] = gen;
  files["metrics.json"] = metrics.dump(2) + "\n";

  std::string retrieval = "| Model | Query | MRR | Hits@5 | Hits@10 | Hits@20 |\n|---|---|---|---|---|---|\n";
  if (!result.queries.empty()) {
    auto hit = [&](int k) {
      auto it = result.ranking.hits.find(k);
      return it == result.ranking.hits.end() ? std::string("-") : fixed(it->second);
    };
    retrieval += "| " + std::string(model) + " | " + mode + " | " + fixed(result.ranking.mrr) + " | " + hit(5) + " | " +
                 hit(10) + " | " + hit(20) + " |\n";
  }
  std::string generation =
      "| Model | Generated | Valid WKT | Valid type | Valid predicate | Dist(Incorrect) |\n|---|---|---|---|---|---|\n";
  if (!result.generations.empty()) {
    const auto& g = result.generation;
    generation += "| " + std::string(model) + " | " + std::to_string(g.generated) + " | " + fixed(g.valid_wkt) + " | " +
                  fixed(g.type_match) + " | " + fixed(g.predicate_match) + " | " + distance_cell(g.distance) + " |\n";
  }
  files["tables/retrieval.md"] = retrieval;
  files["tables/generation.md"] = generation;
  return files;
}

ReportFiles task3_report(const std::vector<ConversionPair>& pairs, const std::vector<Task3Record>& input,
                         bool with_context, std::string_view model) {
  std::vector<Task3Record> records = input;
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  const auto results = task3_results(pairs, records, with_context);
  ReportFiles files;
  files["records.jsonl"] = task3_records_to_jsonl(records);

  ordered_json metrics;
  metrics["task"] = "task3";
  metrics["model"] = model;
  metrics["with_context"] = with_context;
  metrics["pairs"] = json::array();
  std::string table =
      "| Description | Context | Context values | Predicate | Frequency | Accuracy | Entropy |\n|---|---|---|---|---|---|---|\n";
  double acc_sum = 0, ent_sum = 0;
  for (const auto& r : results) {
    ordered_json o;
    o["description"] = r.pair.description;
    o["predicate"] = predicate_name(r.pair.predicate);
    o["context_kind"] = context_kind_name(r.pair.context_kind);
    o["context_a"] = r.pair.context_a;
    o["context_b"] = r.pair.context_b;
    o["runs"] = r.runs;
    o["frequency"] = r.frequency;
    o["accuracy"] = r.accuracy;
    o["entropy"] = r.entropy;
    ordered_json counts = ordered_json::object();
    for (const auto& [p, c] : r.mention_counts) counts[std::string(predicate_name(p))] = c;
    o["mentions"] = counts;
    metrics["pairs"].push_back(o);
    acc_sum += r.accuracy;
    ent_sum += r.entropy;
    const std::string values = r.pair.context_kind == ContextKind::None ? "-" : r.pair.context_a + "/" + r.pair.context_b;
    table += "| " + r.pair.description + " | " + std::string(context_kind_name(r.pair.context_kind)) + " | " + values +
             " | " + std::string(predicate_name(r.pair.predicate)) + " | " + std::to_string(r.frequency) + " | " +
             fixed(r.accuracy) + " | " + fixed(r.entropy) + " |\n";
  }
  metrics["mean_accuracy"] = results.empty() ? 0.0 : acc_sum / static_cast<double>(results.size());
  metrics["mean_entropy"] = results.empty() ? 0.0 : ent_sum / static_cast<double>(results.size());
  files["metrics.json"] = metrics.dump(2) + "\n";
  files["tables/conversion.md"] = table;
  return files;
}

void write_report(const std::string& dir, const ReportFiles& files) {
  for (const auto& [path, content] : files) write_file_atomic(dir + "/" + path, content);
}

}  // namespace toporel
