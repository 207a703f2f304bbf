#include "toporel/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "toporel/classifier.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/eval.hpp"
#include "toporel/io.hpp"
#include "toporel/llm.hpp"
#include "toporel/neighborhood.hpp"
#include "toporel/prompts.hpp"
#include "toporel/topology.hpp"
#include "toporel/wkt.hpp"

namespace toporel::cli {

namespace {

using nlohmann::ordered_json;

// Flags shared by every command; a --config file sets them by long name.
struct Globals {
  std::string backend = "mock";
  std::string generator = "mock";
  std::string embedder = "wkt-focus";
  std::string mock_errors;
  std::string mock_script;
  std::string transcript;
  BackendConfig http;
  std::size_t dimension = 64;
  std::string template_dir;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string data_dir;
  int precision = 6;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename E>
E parse_enum(std::optional<E> v, std::string_view what, const std::string& text) {
  if (!v) throw ConfigError("unknown " + std::string(what) + ": " + text);
  return *v;
}

class Runner {
 public:
  Runner(int argc, const char* const* argv, std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    for (int i = 0; i < argc; ++i) command_line_ += (i ? " " : "") + std::string(argv[i]);
  }

  void set_config_snapshot(std::string s) { config_snapshot_ = std::move(s); }
  Globals g;

  // Builders.

  TemplateSet templates() const {
    return g.template_dir.empty() ? TemplateSet::builtin() : TemplateSet::with_overrides(g.template_dir);
  }

  BackendConfig http_config() const {
    BackendConfig c = g.http;
    c.validate();
    return c;
  }

  GeometryAwareMock::Script mock_script() const {
    GeometryAwareMock::Script script;
    if (g.mock_script.empty()) return script;
    try {
      const auto doc = nlohmann::json::parse(read_file(g.mock_script));
      for (const auto& [key, value] : doc.items()) {
        std::vector<Predicate> answers;
        for (const auto& v : value.is_array() ? value : nlohmann::json::array({value})) {
          answers.push_back(parse_enum(parse_predicate(v.get<std::string>()), "predicate in mock script",
                                       v.get<std::string>()));
        }
        script.vernacular[key] = std::move(answers);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("mock script " + g.mock_script + ": " + e.what());
    }
    return script;
  }

  std::shared_ptr<ChatBackend> chat_backend(const std::string& kind) const {
    if (kind == "mock") {
      return std::make_shared<GeometryAwareMock>(MockErrorSpec::parse(g.mock_errors), mock_script());
    }
    if (kind == "http") return std::make_shared<HttpChatBackend>(http_config());
    if (kind == "transcript") {
      if (g.transcript.empty()) throw ConfigError("--transcript is required for the transcript backend");
      return std::make_shared<TranscriptChat>(TranscriptChat::from_jsonl(read_file(g.transcript)));
    }
    throw ConfigError("unknown chat backend: " + kind);
  }

  std::shared_ptr<EmbeddingBackend> embedding_backend() const {
    if (g.embedder == "hash") return std::make_shared<HashEmbedder>(g.dimension);
    if (g.embedder == "wkt-focus") return std::make_shared<WktFocusEmbedder>(g.dimension, g.precision);
    if (g.embedder == "http") return std::make_shared<HttpEmbeddingBackend>(http_config());
    throw ConfigError("unknown embedder: " + g.embedder);
  }

  std::unique_ptr<LlmClient> client(std::shared_ptr<ChatBackend> chat, std::shared_ptr<EmbeddingBackend> embed) {
    if (chat) models_["chat"] = chat->model();
    if (embed) models_["embedding"] = embed->model();
    return std::make_unique<LlmClient>(std::move(chat), std::move(embed), g.http.cache_dir, g.http.temperature);
  }

  TaskData data() {
    if (g.data_dir.empty()) throw ConfigError("--data is required");
    record_input(g.data_dir + "/entities.jsonl");
    record_input(g.data_dir + "/triplets.jsonl");
    return TaskData::load(g.data_dir);
  }

  void record_input(const std::string& path) { inputs_[path] = sha256_hex(read_file(path)); }

  // Output.

  void write_run(const ReportFiles& files, const std::string& template_hash) {
    write_report(g.out_dir, files);
    ordered_json m;
    m["command"] = command_line_;
    m["config"] = ordered_json::array();
    std::istringstream lines(config_snapshot_);
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) m["config"].push_back(line);
    }
    m["datasets"] = ordered_json::object();
    for (const auto& [path, hash] : inputs_) m["datasets"][path] = hash;
    m["template_hash"] = template_hash;
    m["models"] = ordered_json::object();
    for (const auto& [role, id] : models_) m["models"][role] = id;
    m["seed"] = g.seed;
    m["started_at"] = started_at_;
    m["finished_at"] = utc_now();
    write_file_atomic(g.out_dir + "/manifest.json", m.dump(2) + "\n");
    out_ << "report written to " << g.out_dir << "\n";
  }

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::string command_line_;
  std::string config_snapshot_;
  std::string started_at_ = utc_now();
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> models_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Commands.

int cmd_relate(Runner& r, const std::string& a, const std::string& b) {
  const Classification c = classify(parse_wkt(a), parse_wkt(b));
  r.out() << c.matrix.to_string() << " "
          << (c.predicate ? std::string(predicate_name(*c.predicate)) : std::string("undetermined")) << "\n";
  return kExitOk;
}

int cmd_distance(Runner& r, const std::string& combo_text, const std::string& a, const std::string& b,
                 const std::string& graphs_path) {
  const auto combo = TypeCombo::parse(combo_text);
  // Positional values are input, not configuration.
  if (!combo) throw DataError("combination must look like Point/Polygon: " + combo_text);
  const auto pa = parse_predicate(a), pb = parse_predicate(b);
  if (!pa || !pb) throw DataError("unknown predicate: " + (pa ? b : a));
  const NeighborhoodTable table = graphs_path.empty() ? default_graphs() : NeighborhoodTable::from_file(graphs_path);
  r.out() << table.distance(*combo, *pa, *pb) << "\n";
  return kExitOk;
}

int cmd_synth_corpus(Runner& r, std::size_t scenes, std::string out_path) {
  SyntheticCorpusOptions o;
  o.scenes_per_kind = scenes;
  o.seed = r.g.seed;
  const Corpus corpus = synthesize_corpus(o);
  if (out_path.empty()) out_path = r.g.out_dir + "/corpus.jsonl";
  write_file_atomic(out_path, entities_to_jsonl(corpus.entities()));
  r.out() << corpus.size() << " entities written to " << out_path << "\n";
  return kExitOk;
}

struct SplitFlags {
  std::size_t train = 0, eval = 0, fewshot = 0;
};

SplitCounts split_counts(const SplitFlags& f, std::size_t per_combo) {
  if (f.train || f.eval || f.fewshot) {
    SplitCounts c{f.train, f.eval, f.fewshot};
    if (c.total() != per_combo) throw ConfigError("split counts must add up to --per-combo");
    return c;
  }
  if (per_combo == 225) return {};
  // Keep the 160/40/25 proportions with at least one eval and one few-shot triplet.
  const std::size_t eval = std::max<std::size_t>(1, (per_combo * 40 + 112) / 225);
  const std::size_t fewshot = std::max<std::size_t>(1, (per_combo * 25 + 112) / 225);
  if (eval + fewshot >= per_combo) throw ConfigError("--per-combo must be at least 3");
  return {per_combo - eval - fewshot, eval, fewshot};
}

std::optional<IngestFormat> format_for(const std::string& path, const std::string& explicit_format) {
  if (!explicit_format.empty()) return parse_ingest_format(explicit_format);
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return IngestFormat::WktCsv;
  if (ext == ".geojson" || ext == ".json") return IngestFormat::GeoJson;
  return IngestFormat::Jsonl;
}

int cmd_generate(Runner& r, const std::string& input, const std::string& format, std::size_t per_combo,
                 double buffer, const SplitFlags& flags) {
  const SplitCounts counts = split_counts(flags, per_combo);
  r.record_input(input);
  IngestResult in = ingest(input, parse_enum(format_for(input, format), "input format", format));
  for (const auto& rej : in.rejected) {
    r.err() << "rejected record " << rej.record << (rej.id.empty() ? "" : " (" + rej.id + ")") << ": " << rej.reason
            << "\n";
  }
  SampleOptions so;
  so.per_combo = per_combo;
  so.seed = derive_seed(r.g.seed, "sample");
  so.disjoint_buffer = buffer;
  so.precision = r.g.precision;
  TripletSet set = sample_triplets(in.corpus, so);
  const auto triplets = split(std::move(set.triplets), derive_seed(r.g.seed, "split"), counts);

  std::vector<SpatialEntity> entities = in.corpus.entities();
  entities.insert(entities.end(), set.synthesized.begin(), set.synthesized.end());
  ReportFiles files;
  files["entities.jsonl"] = entities_to_jsonl(entities);
  files["triplets.jsonl"] = triplets_to_jsonl(triplets);
  files["retrieval.jsonl"] = triplets_to_jsonl(retrieval_corpus(triplets));
  r.write_run(files, "");

  std::map<RelationTuple, std::size_t> per_tuple;
  for (const auto& t : triplets) ++per_tuple[t.tuple()];
  r.out() << per_tuple.size() << " combinations, " << triplets.size() << " triplets (" << counts.train << "/"
          << counts.eval << "/" << counts.fewshot << " per combination), " << retrieval_corpus(triplets).size()
          << " retrieval triplets\n";
  return kExitOk;
}

int cmd_split(Runner& r, const std::string& in_path, std::string out_path, const SplitFlags& flags) {
  auto triplets = triplets_from_jsonl(read_file(in_path));
  std::map<RelationTuple, std::size_t> per_tuple;
  for (const auto& t : triplets) ++per_tuple[t.tuple()];
  const std::size_t per_combo = per_tuple.empty() ? 0 : per_tuple.begin()->second;
  const auto tagged = split(std::move(triplets), derive_seed(r.g.seed, "split"), split_counts(flags, per_combo));
  if (out_path.empty()) out_path = in_path;
  write_file_atomic(out_path, triplets_to_jsonl(tagged));
  r.out() << tagged.size() << " triplets tagged in " << out_path << "\n";
  return kExitOk;
}

int cmd_verify(Runner& r) {
  const TaskData d = r.data();
  const auto violations = verify_triplets(d.corpus, d.triplets);
  for (const auto& v : violations) r.out() << "triplet " << v.index << ": " << v.message << "\n";
  r.out() << d.triplets.size() << " triplets checked, " << violations.size() << " violations\n";
  return violations.empty() ? kExitOk : kExitInput;
}

int cmd_retrieval(Runner& r, std::string out_path) {
  const TaskData d = r.data();
  const auto corpus = retrieval_corpus(d.triplets);
  if (out_path.empty()) out_path = r.g.data_dir + "/retrieval.jsonl";
  write_file_atomic(out_path, triplets_to_jsonl(corpus));
  r.out() << corpus.size() << " retrieval triplets written to " << out_path << "\n";
  return kExitOk;
}

int cmd_task1_run(Runner& r, const std::string& style, std::size_t fewshot_k) {
  const TaskData d = r.data();
  const TemplateSet templates = r.templates();
  auto client = r.client(r.chat_backend(r.g.backend), nullptr);
  Task1Options o;
  o.style = parse_enum(parse_task1_style(style), "style", style);
  o.fewshot_k = fewshot_k;
  o.seed = r.g.seed;
  o.precision = r.g.precision;
  o.max_concurrency = r.g.http.max_concurrency;
  const auto records = run_task1(d, *client, templates, o);
  r.write_run(task1_report(records, client->chat_model()), templates.hash());
  const Task1Metrics m = task1_metrics(records);
  r.out() << "task1 " << style << ": " << m.records << " records, accuracy " << fmt(m.accuracy) << ", valid combination "
          << fmt(m.combo_validity) << "\n";
  const bool errors = std::any_of(records.begin(), records.end(), [](const auto& x) { return !x.error.empty(); });
  return errors ? kExitItemErrors : kExitOk;
}

int cmd_task1_report(Runner& r, const std::string& records_path, const std::string& label) {
  r.record_input(records_path);
  r.write_run(task1_report(task1_records_from_jsonl(read_file(records_path)), label), "");
  return kExitOk;
}

std::shared_ptr<ChatBackend> generator_backend(Runner& r, const TaskData& d) {
  if (r.g.generator != "echo") return r.chat_backend(r.g.generator);
  // Answers every query with its true target.
  std::map<std::string, std::string> answers;
  auto wkt = [&](const std::string& id) { return to_wkt(d.corpus.at(id).geometry, r.g.precision); };
  for (const auto& t : retrieval_corpus(d.triplets)) {
    answers.emplace(EchoGenerator::query_key(t.predicate, wkt(t.object_id)), wkt(t.subject_id));
    answers.emplace(EchoGenerator::query_key(inverse(t.predicate), wkt(t.subject_id)), wkt(t.object_id));
  }
  return std::make_shared<EchoGenerator>(std::move(answers));
}

Task2Options task2_options(const Runner& r, const std::string& mode, const std::string& gen_style, std::size_t k) {
  Task2Options o;
  o.mode = parse_enum(parse_query_mode(mode), "query mode", mode);
  o.generation_style = parse_enum(parse_generation_style(gen_style), "generation style", gen_style);
  o.fewshot_k = k;
  o.seed = r.g.seed;
  o.precision = r.g.precision;
  o.max_concurrency = r.g.http.max_concurrency;
  return o;
}

bool has_item_errors(const std::vector<GenerationRecord>& gens) {
  return std::any_of(gens.begin(), gens.end(), [](const auto& x) { return !x.error.empty(); });
}

int cmd_task2_generate(Runner& r, const std::string& gen_style, std::size_t k, std::size_t samples) {
  const TaskData d = r.data();
  const TemplateSet templates = r.templates();
  auto client = r.client(generator_backend(r, d), nullptr);
  const auto gens = run_task2_generation(d, *client, templates, task2_options(r, "direct", gen_style, k), samples);
  const Task2Result result = task2_result_from_records({}, gens);
  r.write_run(task2_report(result, client->chat_model()), templates.hash());
  r.out() << "task2 generation " << gen_style << ": " << gens.size() << " geometries, valid WKT "
          << fmt(result.generation.valid_wkt) << ", valid predicate " << fmt(result.generation.predicate_match) << "\n";
  return has_item_errors(gens) ? kExitItemErrors : kExitOk;
}

int cmd_task2_retrieve(Runner& r, const std::string& mode, const std::string& gen_style, std::size_t k) {
  const TaskData d = r.data();
  const TemplateSet templates = r.templates();
  const Task2Options o = task2_options(r, mode, gen_style, k);
  auto client = r.client(expansion_count(o.mode) ? generator_backend(r, d) : nullptr, r.embedding_backend());
  const Task2Result result = run_task2(d, *client, templates, o);
  r.write_run(task2_report(result, client->embed_model()), templates.hash());
  r.out() << "task2 " << mode << ": " << result.ranking.queries << " queries, MRR " << fmt(result.ranking.mrr) << "\n";
  return has_item_errors(result.generations) ? kExitItemErrors : kExitOk;
}

int cmd_task2_report(Runner& r, const std::string& records_path, const std::string& gens_path,
                     const std::string& label) {
  std::vector<Task2Record> queries;
  std::vector<GenerationRecord> gens;
  if (!records_path.empty()) {
    r.record_input(records_path);
    queries = task2_records_from_jsonl(read_file(records_path));
  }
  if (!gens_path.empty()) {
    r.record_input(gens_path);
    gens = generation_records_from_jsonl(read_file(gens_path));
  }
  r.write_run(task2_report(task2_result_from_records(std::move(queries), std::move(gens)), label), "");
  return kExitOk;
}

int cmd_task3_pairs(Runner& r, const std::string& vernacular_path, std::string out_path) {
  r.record_input(vernacular_path);
  const auto pairs = build_conversion_pairs(vernacular_from_jsonl(read_file(vernacular_path)), r.g.seed);
  if (out_path.empty()) out_path = r.g.out_dir + "/pairs.jsonl";
  write_file_atomic(out_path, pairs_to_jsonl(pairs));
  r.out() << pairs.size() << " conversion pairs written to " << out_path << "\n";
  return kExitOk;
}

int cmd_task3_run(Runner& r, const std::string& pairs_path, std::size_t repetitions, bool no_context) {
  r.record_input(pairs_path);
  const auto pairs = pairs_from_jsonl(read_file(pairs_path));
  const TemplateSet templates = r.templates();
  auto client = r.client(r.chat_backend(r.g.backend), nullptr);
  Task3Options o;
  o.repetitions = repetitions;
  o.with_context = !no_context;
  o.max_concurrency = r.g.http.max_concurrency;
  const auto records = run_task3(pairs, *client, templates, o);
  r.write_run(task3_report(pairs, records, o.with_context, client->chat_model()), templates.hash());
  r.out() << "task3: " << pairs.size() << " pairs x " << repetitions << " runs\n";
  const bool errors = std::any_of(records.begin(), records.end(), [](const auto& x) { return !x.error.empty(); });
  return errors ? kExitItemErrors : kExitOk;
}

int cmd_task3_report(Runner& r, const std::string& pairs_path, const std::string& records_path, bool no_context,
                     const std::string& label) {
  r.record_input(pairs_path);
  r.record_input(records_path);
  r.write_run(task3_report(pairs_from_jsonl(read_file(pairs_path)), task3_records_from_jsonl(read_file(records_path)),
                           !no_context, label),
              "");
  return kExitOk;
}

int cmd_task3_extract(Runner& r, const std::string& text_path, const std::string& gazetteer_path) {
  std::vector<std::string> gazetteer;
  for_each_line(read_file(gazetteer_path), [&](std::string_view line, std::size_t) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) gazetteer.emplace_back(line);
  });
  auto chat = r.chat_backend(r.g.backend);
  for (const auto& rel : extract_relations_from_text(read_file(text_path), gazetteer, *chat)) {
    ordered_json o;
    o["subject"] = rel.subject;
    o["phrase"] = rel.phrase;
    o["object"] = rel.object;
    o["needs_review"] = rel.needs_review;
    r.out() << o.dump() << "\n";
  }
  return kExitOk;
}

int cmd_classifier_train(Runner& r, std::string model_path, const ForestOptions& base) {
  const TaskData d = r.data();
  auto client = r.client(nullptr, r.embedding_backend());
  const auto features = triplet_features(d, d.with_split(Split::Train), *client, r.g.precision);
  ForestOptions o = base;
  o.seed = r.g.seed;
  const RandomForest forest = RandomForest::train(features, o);
  if (model_path.empty()) model_path = r.g.out_dir + "/forest.json";
  forest.save(model_path);
  std::size_t correct = 0;
  for (const auto& f : features) correct += forest.predict(f.feature) == f.label;
  r.out() << forest.trees().size() << " trees over " << features.size() << " triplets, training accuracy "
          << fmt(features.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(features.size()))
          << ", model written to " << model_path << "\n";
  return kExitOk;
}

int cmd_classifier_eval(Runner& r, const std::string& model_path) {
  const TaskData d = r.data();
  r.record_input(model_path);
  const RandomForest forest = RandomForest::load(model_path);
  auto client = r.client(nullptr, r.embedding_backend());
  const auto records = evaluate_classifier(d, forest, *client, r.g.precision);
  r.write_run(task1_report(records, "random_forest"), "");
  const Task1Metrics m = task1_metrics(records);
  r.out() << "classifier: " << m.records << " records, accuracy " << fmt(m.accuracy) << ", valid combination "
          << fmt(m.combo_validity) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Runner r(argc, argv, out, err);
  Globals& g = r.g;
  std::function<int()> action;

  CLI::App app{"toporel: DE-9IM relations, relation-triplet datasets and LLM evaluation harness"};
  app.set_config("--config", "", "key=value file setting global flags by long name; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--data", g.data_dir, "Dataset directory with entities.jsonl and triplets.jsonl");
  app.add_option("--precision", g.precision, "Decimals of WKT in prompts")->capture_default_str();
  app.add_option("--template-dir", g.template_dir, "Directory of template overrides");
  app.add_option("--backend", g.backend, "Chat backend: mock | http | transcript")->capture_default_str();
  app.add_option("--generator", g.generator, "Task 2 generator: mock | echo | http | transcript")->capture_default_str();
  app.add_option("--embedder", g.embedder, "Embedder: hash | wkt-focus | http")->capture_default_str();
  app.add_option("--dimension", g.dimension, "Mock embedding dimension")->capture_default_str();
  app.add_option("--mock-errors", g.mock_errors, "Mock error spec, e.g. 'Point/Polygon:within<->touches@1'");
  app.add_option("--mock-script", g.mock_script, "JSON object: description -> predicate list for the Task 3 mock");
  app.add_option("--transcript", g.transcript, "JSONL transcript {prompt_sha256, response}");
  app.add_option("--base-url", g.http.base_url, "OpenAI-compatible service URL")->capture_default_str();
  app.add_option("--api-key-env", g.http.api_key_env, "Environment variable holding the API key")->capture_default_str();
  app.add_option("--chat-model", g.http.chat_model, "Chat model id")->capture_default_str();
  app.add_option("--embed-model", g.http.embed_model, "Embedding model id")->capture_default_str();
  app.add_option("--temperature", g.http.temperature, "Sampling temperature")->capture_default_str();
  app.add_option("--max-tokens", g.http.max_tokens, "Completion token limit")->capture_default_str();
  app.add_option("--timeout", g.http.timeout_seconds, "Request timeout in seconds")->capture_default_str();
  app.add_option("--max-retries", g.http.max_retries, "Retries of transient failures")->capture_default_str();
  app.add_option("--cache-dir", g.http.cache_dir, "Response cache directory (empty disables caching)");
  app.add_option("--max-concurrency", g.http.max_concurrency, "Parallel requests")->capture_default_str();

  auto* relate_cmd = app.add_subcommand("relate", "Print the DE-9IM matrix and predicate of two WKT geometries");
  std::string wkt_a, wkt_b;
  relate_cmd->add_option("a", wkt_a)->required();
  relate_cmd->add_option("b", wkt_b)->required();
  relate_cmd->callback([&] { action = [&] { return cmd_relate(r, wkt_a, wkt_b); }; });

  auto* dist_cmd = app.add_subcommand("neighborhood-distance", "Topological distance between two predicates");
  std::string combo, pred_a, pred_b, graphs;
  dist_cmd->add_option("combo", combo, "Type combination, e.g. Point/Polygon")->required();
  dist_cmd->add_option("a", pred_a)->required();
  dist_cmd->add_option("b", pred_b)->required();
  dist_cmd->add_option("--graphs", graphs, "Graph override file (JSON)");
  dist_cmd->callback([&] { action = [&] { return cmd_distance(r, combo, pred_a, pred_b, graphs); }; });

  auto* dataset = app.add_subcommand("dataset", "Build and check relation-triplet datasets");
  dataset->require_subcommand(1);
  SplitFlags split_flags;
  auto add_split_flags = [&](CLI::App* c) {
    c->add_option("--train", split_flags.train, "Training triplets per combination");
    c->add_option("--eval", split_flags.eval, "Evaluation triplets per combination");
    c->add_option("--fewshot", split_flags.fewshot, "Few-shot pool triplets per combination");
  };
  std::string path_out, input, input_format;
  std::size_t scenes = 225, per_combo = 225;
  double buffer = 0.001;

  auto* synth = dataset->add_subcommand("synth-corpus", "Write a synthetic rectilinear corpus");
  synth->add_option("--scenes", scenes, "Scenes per relation kind")->capture_default_str();
  synth->add_option("--out", path_out, "Output JSONL (default <out-dir>/corpus.jsonl)");
  synth->callback([&] { action = [&] { return cmd_synth_corpus(r, scenes, path_out); }; });

  auto* gen = dataset->add_subcommand("generate", "Sample, verify and split triplets into <out-dir>");
  gen->add_option("--input", input, "Corpus file")->required();
  gen->add_option("--format", input_format, "jsonl | wkt-csv | geojson (default from extension)");
  gen->add_option("--per-combo", per_combo, "Triplets per combination")->capture_default_str();
  gen->add_option("--disjoint-buffer", buffer, "Maximum distance of disjoint pairs")->capture_default_str();
  add_split_flags(gen);
  gen->callback([&] { action = [&] { return cmd_generate(r, input, input_format, per_combo, buffer, split_flags); }; });

  auto* split_cmd = dataset->add_subcommand("split", "Assign train/eval/fewshot splits");
  split_cmd->add_option("--triplets", input, "Triplet JSONL")->required();
  split_cmd->add_option("--out", path_out, "Output (default: rewrite input)");
  add_split_flags(split_cmd);
  split_cmd->callback([&] { action = [&] { return cmd_split(r, input, path_out, split_flags); }; });

  auto* verify = dataset->add_subcommand("verify", "Re-classify every triplet of --data");
  verify->callback([&] { action = [&] { return cmd_verify(r); }; });

  auto* retrieval = dataset->add_subcommand("retrieval", "Write the retrieval corpus of --data");
  retrieval->add_option("--out", path_out, "Output (default <data>/retrieval.jsonl)");
  retrieval->callback([&] { action = [&] { return cmd_retrieval(r, path_out); }; });

  std::string records_path, gens_path, pairs_path, label = "model", style = "zero", mode = "direct",
                                                   gen_style = "zero";
  std::size_t fewshot_k = 0, gen_k = 2, samples = 1, repetitions = 10;
  bool no_context = false;

  auto* task1 = app.add_subcommand("task1", "Relation qualification");
  task1->require_subcommand(1);
  auto* t1run = task1->add_subcommand("run", "Query the chat backend on the eval split");
  t1run->add_option("--style", style, "zero | zero_dim | few | zero_cot | few_cot")->capture_default_str();
  t1run->add_option("--fewshot-k", fewshot_k, "Examples per prompt (0: one per applicable predicate)");
  t1run->callback([&] { action = [&] { return cmd_task1_run(r, style, fewshot_k); }; });
  auto* t1rep = task1->add_subcommand("report", "Rebuild a report from records.jsonl");
  t1rep->add_option("--records", records_path)->required();
  t1rep->add_option("--label", label, "Model name in tables")->capture_default_str();
  t1rep->callback([&] { action = [&] { return cmd_task1_report(r, records_path, label); }; });

  auto* task2 = app.add_subcommand("task2", "Spatial query processing");
  task2->require_subcommand(1);
  auto add_gen_flags = [&](CLI::App* c) {
    c->add_option("--generation-style", gen_style, "zero | zero_check | few | few_negative")->capture_default_str();
    c->add_option("--fewshot-k", gen_k, "Examples per generation prompt")->capture_default_str();
  };
  auto* t2gen = task2->add_subcommand("generate", "Score generated geometries");
  add_gen_flags(t2gen);
  t2gen->add_option("--samples", samples, "Geometries per query")->capture_default_str();
  t2gen->callback([&] { action = [&] { return cmd_task2_generate(r, gen_style, gen_k, samples); }; });
  auto* t2ret = task2->add_subcommand("retrieve", "Filtered retrieval over the retrieval corpus");
  t2ret->add_option("--mode", mode, "direct | typed | expanded_1 | expanded_3 | object_original | object_reversed")
      ->capture_default_str();
  add_gen_flags(t2ret);
  t2ret->callback([&] { action = [&] { return cmd_task2_retrieve(r, mode, gen_style, gen_k); }; });
  auto* t2rep = task2->add_subcommand("report", "Rebuild a report from stored records");
  t2rep->add_option("--records", records_path, "records.jsonl");
  t2rep->add_option("--generations", gens_path, "generations.jsonl");
  t2rep->add_option("--label", label, "Model name in tables")->capture_default_str();
  t2rep->callback([&] { action = [&] { return cmd_task2_report(r, records_path, gens_path, label); }; });

  auto* task3 = app.add_subcommand("task3", "Vernacular relation conversion");
  task3->require_subcommand(1);
  std::string vernacular, text_path, gazetteer;
  auto* t3pairs = task3->add_subcommand("pairs", "Build conversion pairs from vernacular records");
  t3pairs->add_option("--vernacular", vernacular)->required();
  t3pairs->add_option("--out", path_out, "Output (default <out-dir>/pairs.jsonl)");
  t3pairs->callback([&] { action = [&] { return cmd_task3_pairs(r, vernacular, path_out); }; });
  auto* t3run = task3->add_subcommand("run", "Query the chat backend for every pair");
  t3run->add_option("--pairs", pairs_path)->required();
  t3run->add_option("--repetitions", repetitions)->capture_default_str();
  t3run->add_flag("--no-context", no_context, "Omit the context sentence");
  t3run->callback([&] { action = [&] { return cmd_task3_run(r, pairs_path, repetitions, no_context); }; });
  auto* t3rep = task3->add_subcommand("report", "Rebuild a report from stored records");
  t3rep->add_option("--pairs", pairs_path)->required();
  t3rep->add_option("--records", records_path)->required();
  t3rep->add_flag("--no-context", no_context);
  t3rep->add_option("--label", label, "Model name in tables")->capture_default_str();
  t3rep->callback([&] { action = [&] { return cmd_task3_report(r, pairs_path, records_path, no_context, label); }; });
  auto* t3ext = task3->add_subcommand("extract", "Extract candidate relations from text for manual review");
  t3ext->add_option("--text", text_path)->required();
  t3ext->add_option("--gazetteer", gazetteer, "One place name per line")->required();
  t3ext->callback([&] { action = [&] { return cmd_task3_extract(r, text_path, gazetteer); }; });

  auto* classifier = app.add_subcommand("classifier", "Embedding random-forest baseline");
  classifier->require_subcommand(1);
  ForestOptions forest;
  std::string model_path;
  auto* ctrain = classifier->add_subcommand("train", "Train on the train split of --data");
  ctrain->add_option("--model", model_path, "Output model (default <out-dir>/forest.json)");
  ctrain->add_option("--estimators", forest.estimators)->capture_default_str();
  ctrain->add_option("--max-features", forest.max_features, "0: floor(sqrt(feature length))")->capture_default_str();
  ctrain->add_option("--max-depth", forest.max_depth, "0: unlimited")->capture_default_str();
  ctrain->callback([&] { action = [&] { return cmd_classifier_train(r, model_path, forest); }; });
  auto* ceval = classifier->add_subcommand("eval", "Score a model on the eval split");
  ceval->add_option("--model", model_path)->required();
  ceval->callback([&] { action = [&] { return cmd_classifier_eval(r, model_path); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    // Only raised for an unreadable --config file.
    app.exit(e, out, err);
    return kExitConfig;
  } catch (const CLI::ConfigError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  // Snapshot of the global flags and those of the selected command.
  std::string selected;
  for (const CLI::App* c = &app; !c->get_subcommands().empty();) {
    c = c->get_subcommands().front();
    selected += c->get_name() + ".";
  }
  std::istringstream all(app.config_to_str(true, false));
  std::string snapshot;
  for (std::string line; std::getline(all, line);) {
    const std::string key = line.substr(0, line.find('='));
    if (key.find('.') == std::string::npos || key.rfind(selected, 0) == 0) snapshot += line + "\n";
  }
  r.set_config_snapshot(snapshot);

  try {
    return action ? action() : kExitInput;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AuthError& e) {
    err << "authentication error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitItemErrors;
  } catch (const ShortfallError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& c : e.combos()) err << "  " << c << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace toporel::cli
