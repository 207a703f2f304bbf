#include "toporel/llm.hpp"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>
#include <regex>

#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/prompts.hpp"
#include "toporel/wkt.hpp"

namespace toporel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string sanitize(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "default" : out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

// Deterministic value in [0, 1) for a (text, index, stream) triple.
double hash_unit(std::string_view text, int index, std::string_view stream) {
  const std::string digest = sha256_hex(std::string(stream) + "\n" + std::to_string(index) + "\n" + std::string(text));
  const std::uint64_t v = std::stoull(digest.substr(0, 13), nullptr, 16);
  return static_cast<double>(v) / static_cast<double>(1ULL << 52);
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  for_each_line(text, [&](std::string_view line, std::size_t) { out.emplace_back(line); });
  return out;
}

std::optional<Predicate> predicate_from_phrase(std::string_view phrase) {
  for (Predicate p : kAllPredicates) {
    if (relation_phrase(p) == phrase) return p;
  }
  return std::nullopt;
}

struct RetrievalRequest {
  std::optional<GeometryType> subject_type;
  Predicate predicate;
  std::string reference_wkt;
};

// Parses the last "Request: Retrieve a [TYPE ]geometry that <phrase> the <WKT>." line.
std::optional<RetrievalRequest> parse_request(std::string_view prompt) {
  static const std::regex re(R"(^Request: Retrieve a (?:([A-Za-z]+) )?geometry that (.+?) the ([A-Za-z].*)\.\s*$)");
  std::optional<RetrievalRequest> out;
  for (const auto& line : lines_of(prompt)) {
    std::smatch m;
    if (!std::regex_match(line, m, re)) continue;
    auto p = predicate_from_phrase(m[2].str());
    if (!p) continue;
    RetrievalRequest r{std::nullopt, *p, m[3].str()};
    if (m[1].matched) {
      r.subject_type = parse_type_name(m[1].str());
      if (!r.subject_type) continue;
    }
    out = r;
  }
  return out;
}

}  // namespace

void BackendConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0, 2]");
  if (max_retries < 0) throw ConfigError("max retries must be non-negative");
  if (max_tokens <= 0) throw ConfigError("max tokens must be positive");
  if (!(timeout_seconds > 0)) throw ConfigError("timeout must be positive");
  if (!(backoff_initial_seconds >= 0) || !(backoff_ceiling_seconds >= 0)) throw ConfigError("backoff must be non-negative");
  if (max_concurrency < 1) throw ConfigError("max concurrency must be at least 1");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw ConfigError("base URL must start with http:// or https://");
  }
}

std::string prompt_text(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i) out += "\n\n";
    out += messages[i].content;
  }
  return out;
}

std::string chat_cache_key(std::string_view model, const std::vector<ChatMessage>& messages, double temperature,
                           int sample_index) {
  ordered_json key;
  key["model"] = model;
  key["temperature"] = temperature;
  key["sample_index"] = sample_index;
  key["messages"] = json::array();
  for (const auto& m : messages) key["messages"].push_back({m.role, m.content});
  return sha256_hex(key.dump());
}

ResponseCache::ResponseCache(const std::string& dir, std::string_view kind, std::string_view model,
                             std::size_t flush_every)
    : flush_every_(flush_every == 0 ? 1 : flush_every) {
  if (dir.empty()) return;
  path_ = dir + "/" + std::string(kind) + "-" + sanitize(model) + ".jsonl";
  std::string text;
  try {
    text = read_file(path_);
  } catch (const IoError&) {
    return;
  }
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      entries_[obj.at("key").get<std::string>()] = obj.at("value").get<std::string>();
    } catch (const json::exception& e) {
      throw CacheCorruption(path_ + " line " + std::to_string(n) + ": " + e.what());
    }
  });
}

ResponseCache::~ResponseCache() {
  try {
    flush();
  } catch (...) {
    // Destructors must not throw; a failed final flush only loses cache entries.
  }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, std::string value) {
  std::lock_guard lock(mutex_);
  entries_[key] = std::move(value);
  if (++pending_ >= flush_every_) flush_locked();
}

void ResponseCache::flush() {
  std::lock_guard lock(mutex_);
  flush_locked();
}

void ResponseCache::flush_locked() {
  if (path_.empty() || pending_ == 0) return;
  std::string out;
  for (const auto& [k, v] : entries_) {
    ordered_json obj;
    obj["key"] = k;
    obj["value"] = v;
    out += obj.dump() + "\n";
  }
  write_file_atomic(path_, out);
  pending_ = 0;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

LlmClient::LlmClient(std::shared_ptr<ChatBackend> chat, std::shared_ptr<EmbeddingBackend> embed,
                     const std::string& cache_dir, double temperature)
    : chat_(std::move(chat)), embed_(std::move(embed)), temperature_(temperature) {
  if (chat_) chat_cache_ = std::make_unique<ResponseCache>(cache_dir, "chat", chat_->model());
  if (embed_) embed_cache_ = std::make_unique<ResponseCache>(cache_dir, "embed", embed_->model());
}

std::string LlmClient::chat_model() const { return chat_ ? chat_->model() : ""; }
std::string LlmClient::embed_model() const { return embed_ ? embed_->model() : ""; }

ChatExchange LlmClient::chat(const std::vector<ChatMessage>& messages, int sample_index) {
  if (!chat_) throw BackendError("no chat backend configured");
  if (sample_index < 0) throw BackendError("sample index must be non-negative");
  ChatExchange ex{messages, "", chat_->model(), temperature_, sample_index, false};
  const std::string key = chat_cache_key(ex.model, messages, temperature_, sample_index);
  if (auto hit = chat_cache_->get(key)) {
    ex.response = *hit;
    ex.cache_hit = true;
    return ex;
  }
  ex.response = chat_->complete(messages, temperature_, sample_index);
  chat_cache_->put(key, ex.response);
  return ex;
}

std::vector<Embedding> LlmClient::embed_batch(const std::vector<std::string>& texts) {
  if (!embed_) throw BackendError("no embedding backend configured");
  std::vector<Embedding> out(texts.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> keys(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys[i] = sha256_hex(texts[i]);
    if (auto hit = embed_cache_->get(keys[i])) {
      try {
        out[i] = json::parse(*hit).get<Embedding>();
      } catch (const json::exception& e) {
        throw CacheCorruption("embedding cache entry for text " + keys[i] + ": " + e.what());
      }
    } else {
      missing.push_back(i);
    }
  }
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < missing.size(); start += kBatch) {
    std::vector<std::string> batch;
    for (std::size_t j = start; j < missing.size() && j < start + kBatch; ++j) batch.push_back(texts[missing[j]]);
    std::vector<Embedding> vecs = embed_->embed(batch);
    if (vecs.size() != batch.size()) {
      throw BackendError("embedding service returned " + std::to_string(vecs.size()) + " vectors for " +
                         std::to_string(batch.size()) + " texts");
    }
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      const std::size_t i = missing[start + j];
      embed_cache_->put(keys[i], json(vecs[j]).dump());
      out[i] = std::move(vecs[j]);
    }
  }
  std::lock_guard lock(dim_mutex_);
  for (const auto& v : out) {
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_ || v.empty()) {
      throw DimensionMismatch("embedding of size " + std::to_string(v.size()) + ", expected " +
                              std::to_string(dimension_));
    }
  }
  return out;
}

void LlmClient::flush() {
  if (chat_cache_) chat_cache_->flush();
  if (embed_cache_) embed_cache_->flush();
}

TranscriptChat::TranscriptChat(std::map<std::string, std::string> by_prompt_sha256, std::string model)
    : responses_(std::move(by_prompt_sha256)), model_(std::move(model)) {}

TranscriptChat TranscriptChat::from_jsonl(std::string_view text) {
  std::map<std::string, std::string> responses;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    if (trim(line).empty()) return;
    try {
      const json obj = json::parse(line);
      responses[obj.at("prompt_sha256").get<std::string>()] = obj.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError("transcript line " + std::to_string(n) + ": " + e.what(), n);
    }
  });
  return TranscriptChat(std::move(responses));
}

std::string TranscriptChat::complete(const std::vector<ChatMessage>& messages, double, int) {
  const std::string h = sha256_hex(prompt_text(messages));
  auto it = responses_.find(h);
  if (it == responses_.end()) throw BackendError("transcript has no response for prompt " + h);
  return it->second;
}

MockErrorSpec MockErrorSpec::parse(std::string_view text) {
  MockErrorSpec spec;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string item = trim(text.substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;

    std::string body = item;
    double rate = 1.0;
    if (auto at = item.rfind('@'); at != std::string::npos) {
      body = trim(std::string_view(item).substr(0, at));
      try {
        std::size_t used = 0;
        rate = std::stod(item.substr(at + 1), &used);
        if (used != item.size() - at - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("bad rate in mock error rule '" + item + "'");
      }
    }
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("mock error rate outside [0, 1] in '" + item + "'");
    if (body == "prose") {
      spec.prose_rate = rate;
      continue;
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) throw ConfigError("mock error rule '" + item + "' lacks 'Combo:'");
    const auto combo = TypeCombo::parse(trim(std::string_view(body).substr(0, colon)));
    if (!combo) throw ConfigError("unknown type combination in '" + item + "'");
    const std::string swap = body.substr(colon + 1);
    const bool both = swap.find("<->") != std::string::npos;
    const auto arrow = swap.find(both ? "<->" : "->");
    if (arrow == std::string::npos) throw ConfigError("mock error rule '" + item + "' lacks '->' or '<->'");
    const auto from = parse_predicate(trim(std::string_view(swap).substr(0, arrow)));
    const auto to = parse_predicate(trim(std::string_view(swap).substr(arrow + (both ? 3 : 2))));
    if (!from || !to) throw ConfigError("unknown predicate in '" + item + "'");
    spec.rules.push_back({*combo, *from, *to, rate});
    if (both) spec.rules.push_back({*combo, *to, *from, rate});
  }
  return spec;
}

GeometryAwareMock::GeometryAwareMock(MockErrorSpec errors, Script script, std::string model)
    : errors_(std::move(errors)), script_(std::move(script)), model_(std::move(model)) {}

std::string GeometryAwareMock::complete(const std::vector<ChatMessage>& messages, double, int sample_index) {
  const std::string prompt = prompt_text(messages);
  if (prompt.find("Output format: (Geometry Type A, Predicate, Geometry Type B)") != std::string::npos) {
    return answer_task1(prompt, sample_index);
  }
  if (prompt.find("\nRequest: ") != std::string::npos || prompt.rfind("Request: ", 0) == 0) {
    return answer_task2(prompt);
  }
  if (prompt.find("Answer in the form \"") != std::string::npos) return answer_task3(prompt, sample_index);
  return "I do not know how to answer this request.";
}

std::string GeometryAwareMock::answer_task1(const std::string& prompt, int sample_index) const {
  const std::vector<Geometry> geoms = find_wkt_geometries(prompt);
  if (geoms.size() < 2) return "The prompt does not contain two geometries.";
  const Geometry& a = geoms[geoms.size() - 2];
  const Geometry& b = geoms.back();
  if (errors_.prose_rate > 0 && hash_unit(prompt, sample_index, "prose") < errors_.prose_rate) {
    return "The two geometries appear to be related in some way.";
  }
  std::optional<Predicate> p;
  try {
    p = classify(a, b).predicate;
  } catch (const Error&) {
    return "The geometries are not valid.";
  }
  if (!p) return "The relation cannot be determined.";
  const TypeCombo combo{a.type(), b.type()};
  for (std::size_t i = 0; i < errors_.rules.size(); ++i) {
    const auto& r = errors_.rules[i];
    if (r.combo == combo && r.from == *p && hash_unit(prompt, sample_index, "rule" + std::to_string(i)) < r.rate) {
      p = r.to;
      break;
    }
  }
  return RelationTuple{a.type(), *p, b.type()}.to_string();
}

std::string GeometryAwareMock::answer_task2(const std::string& prompt) const {
  const auto req = parse_request(prompt);
  if (!req) return "I could not understand the request.";
  Geometry reference;
  try {
    reference = parse_wkt(req->reference_wkt);
  } catch (const Error&) {
    return "The reference geometry is not valid WKT.";
  }
  const GeometryType type = req->subject_type.value_or(reference.type());
  std::optional<Geometry> g;
  try {
    g = construct_related(reference, type, req->predicate);
  } catch (const Error&) {
    g.reset();
  }
  if (!g) return "I could not construct such a geometry.";
  return to_wkt(*g, kRoundTripPrecision);
}

std::string GeometryAwareMock::answer_task3(const std::string& prompt, int sample_index) const {
  static const std::regex form(R"re(Answer in the form "(.+) <predicate> (.+)"\.)re");
  const auto lines = lines_of(prompt);
  std::smatch m;
  std::string subject, object;
  for (const auto& line : lines) {
    if (std::regex_search(line, m, form)) {
      subject = m[1].str();
      object = m[2].str();
    }
  }
  if (subject.empty() || lines.empty()) return "I am not sure how these places relate.";
  const std::string& statement = lines.front();
  const std::string head = subject + " ";
  const std::string tail = " " + object + ".";
  if (statement.rfind(head, 0) != 0) return "I am not sure how these places relate.";
  const auto end = statement.find(tail, head.size());
  if (end == std::string::npos) return "I am not sure how these places relate.";
  const std::string description = statement.substr(head.size(), end - head.size());
  const std::string context = trim(std::string_view(statement).substr(end + tail.size()));

  auto it = script_.vernacular.end();
  if (!context.empty()) it = script_.vernacular.find(description + " | " + context);
  if (it == script_.vernacular.end()) it = script_.vernacular.find(description);
  if (it == script_.vernacular.end() || it->second.empty()) return "I am not sure how these places relate.";
  const Predicate p = it->second[static_cast<std::size_t>(sample_index) % it->second.size()];
  return subject + " " + std::string(predicate_name(p)) + " " + object;
}

std::string EchoGenerator::query_key(Predicate p, std::string_view reference_wkt) {
  return std::string(predicate_name(p)) + "|" + std::string(reference_wkt);
}

std::string EchoGenerator::complete(const std::vector<ChatMessage>& messages, double, int) {
  const auto req = parse_request(prompt_text(messages));
  if (!req) return "No request found.";
  auto it = answers_.find(query_key(req->predicate, req->reference_wkt));
  if (it == answers_.end()) return "No geometry registered for this request.";
  return it->second;
}

HashEmbedder::HashEmbedder(std::size_t dimension, std::string model)
    : dimension_(dimension == 0 ? 1 : dimension), model_(std::move(model)) {}

Embedding HashEmbedder::embed_one(std::string_view text) const {
  Embedding v;
  v.reserve(dimension_);
  for (std::size_t block = 0; v.size() < dimension_; ++block) {
    const std::string digest = sha256_hex(std::to_string(block) + ":" + std::string(text));
    for (std::size_t off = 0; off + 16 <= digest.size() && v.size() < dimension_; off += 16) {
      const std::uint64_t bits = std::stoull(digest.substr(off, 16), nullptr, 16);
      v.push_back(static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0);
    }
  }
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<Embedding> HashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

WktFocusEmbedder::WktFocusEmbedder(std::size_t dimension, int precision)
    : hash_(dimension, "wkt-focus-embedder"), precision_(precision) {}

std::vector<Embedding> WktFocusEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto geoms = find_wkt_geometries(t);
    out.push_back(hash_.embed_one(geoms.empty() ? t : to_wkt(geoms.back(), precision_)));
  }
  return out;
}

}  // namespace toporel
