#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toporel/topology.hpp"

namespace toporel {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Settings for OpenAI-compatible services.
struct BackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string chat_model = "gpt-4";
  std::string embed_model = "text-embedding-3-small";
  double temperature = 0.0;
  int max_tokens = 1024;
  double timeout_seconds = 120.0;
  int max_retries = 3;
  double backoff_initial_seconds = 1.0;
  /// Upper bound on the total time spent sleeping between retries of one request.
  double backoff_ceiling_seconds = 60.0;
  /// Empty disables caching.
  std::string cache_dir;
  int max_concurrency = 4;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Text generation service.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string model() const = 0;
  /// One sampled completion. Throws BackendError / AuthError.
  virtual std::string complete(const std::vector<ChatMessage>& messages, double temperature, int sample_index) = 0;
};

using Embedding = std::vector<double>;

/// Text vectorization service.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string model() const = 0;
  /// One vector per text, in input order. Throws BackendError / DimensionMismatch.
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

/// Message contents joined by blank lines; what transcripts and mocks hash.
std::string prompt_text(const std::vector<ChatMessage>& messages);

/// Cache key of a chat request.
std::string chat_cache_key(std::string_view model, const std::vector<ChatMessage>& messages, double temperature,
                           int sample_index);

/// Content-addressed JSONL store, one file per model. Entries are kept in
/// memory and flushed (sorted by key, temp file then rename) every
/// `flush_every` insertions and on destruction. Thread-safe.
class ResponseCache {
 public:
  /// Loads <dir>/<kind>-<model>.jsonl if present. Throws CacheCorruption for unreadable lines.
  ResponseCache(const std::string& dir, std::string_view kind, std::string_view model, std::size_t flush_every = 64);
  ~ResponseCache();
  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string value);
  void flush();
  const std::string& path() const { return path_; }
  std::size_t size() const;

 private:
  void flush_locked();

  std::string path_;
  std::size_t flush_every_;
  std::size_t pending_ = 0;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
};

struct ChatExchange {
  std::vector<ChatMessage> messages;
  std::string response;
  std::string model;
  double temperature = 0.0;
  int sample_index = 0;
  bool cache_hit = false;
};

/// Backend front end with caching.
class LlmClient {
 public:
  /// Either backend may be null when the run does not need it.
  LlmClient(std::shared_ptr<ChatBackend> chat, std::shared_ptr<EmbeddingBackend> embed, const std::string& cache_dir,
            double temperature);

  /// Cached by (model, messages, temperature, sample_index).
  ChatExchange chat(const std::vector<ChatMessage>& messages, int sample_index = 0);
  /// Cached per (model, text). Throws DimensionMismatch on inconsistent sizes.
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);

  double temperature() const { return temperature_; }
  std::string chat_model() const;
  std::string embed_model() const;
  void flush();

 private:
  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<EmbeddingBackend> embed_;
  std::unique_ptr<ResponseCache> chat_cache_;
  std::unique_ptr<ResponseCache> embed_cache_;
  double temperature_;
  std::mutex dim_mutex_;
  std::size_t dimension_ = 0;
};

/// OpenAI-compatible /chat/completions client. The API key is read from the
/// configured environment variable at construction (AuthError if unset).
/// Transient failures (network, 429, 5xx) are retried with exponential
/// backoff; 401/403 raise AuthError immediately.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  std::string model() const override { return config_.chat_model; }
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int sample_index) override;

 private:
  BackendConfig config_;
  std::string api_key_;
};

/// OpenAI-compatible /embeddings client.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(BackendConfig config);
  std::string model() const override { return config_.embed_model; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  BackendConfig config_;
  std::string api_key_;
};

/// Replays responses keyed by the SHA-256 of prompt_text(messages).
/// Unknown prompts raise BackendError.
class TranscriptChat : public ChatBackend {
 public:
  explicit TranscriptChat(std::map<std::string, std::string> by_prompt_sha256, std::string model = "transcript");
  /// JSONL lines {"prompt_sha256": ..., "response": ...}.
  static TranscriptChat from_jsonl(std::string_view text);
  std::string model() const override { return model_; }
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int sample_index) override;

 private:
  std::map<std::string, std::string> responses_;
  std::string model_;
};

/// Deterministic errors injected by GeometryAwareMock into Task 1 answers.
struct MockErrorRule {
  TypeCombo combo;
  Predicate from;
  Predicate to;
  double rate = 1.0;
};

struct MockErrorSpec {
  std::vector<MockErrorRule> rules;
  /// Share of Task 1 answers replaced by free prose (format-invalid).
  double prose_rate = 0.0;

  /// "Point/Polygon:within->touches@1; LineString/LineString:crosses<->touches@0.5; prose@0.1".
  /// `a<->b` adds both directions. Throws ConfigError.
  static MockErrorSpec parse(std::string_view text);
};

/// Offline stand-in for a chat model. Task 1 prompts are answered by
/// classifying the last two WKT geometries in the prompt (then applying the
/// error spec); Task 2 generation prompts by construct_related; Task 3
/// prompts from a scripted description table.
class GeometryAwareMock : public ChatBackend {
 public:
  struct Script {
    /// Answers per unified description, cycled by sample index. A key of the
    /// form "description | context sentence" takes precedence when the prompt
    /// carries that context.
    std::map<std::string, std::vector<Predicate>> vernacular;
  };

  explicit GeometryAwareMock(MockErrorSpec errors = {}, Script script = {}, std::string model = "geometry-aware-mock");
  std::string model() const override { return model_; }
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int sample_index) override;

 private:
  std::string answer_task1(const std::string& prompt, int sample_index) const;
  std::string answer_task2(const std::string& prompt) const;
  std::string answer_task3(const std::string& prompt, int sample_index) const;

  MockErrorSpec errors_;
  Script script_;
  std::string model_;
};

/// Test double for retrieval: answers a Task 2 generation prompt with the
/// WKT registered for its (predicate, reference) query, typically the true subject.
class EchoGenerator : public ChatBackend {
 public:
  /// Keys are query_key(predicate, reference WKT at prompt precision).
  explicit EchoGenerator(std::map<std::string, std::string> answers) : answers_(std::move(answers)) {}
  static std::string query_key(Predicate p, std::string_view reference_wkt);
  std::string model() const override { return "echo-generator"; }
  std::string complete(const std::vector<ChatMessage>& messages, double temperature, int sample_index) override;

 private:
  std::map<std::string, std::string> answers_;
};

/// Deterministic unit vectors derived from SHA-256 of the whole text.
class HashEmbedder : public EmbeddingBackend {
 public:
  explicit HashEmbedder(std::size_t dimension = 64, std::string model = "hash-embedder");
  std::string model() const override { return model_; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  Embedding embed_one(std::string_view text) const;

 private:
  std::size_t dimension_;
  std::string model_;
};

/// Embeds the canonical form of the last WKT geometry found in the text (the
/// whole text when none parses), so a query ending in a candidate's WKT maps
/// exactly onto that candidate.
class WktFocusEmbedder : public EmbeddingBackend {
 public:
  explicit WktFocusEmbedder(std::size_t dimension = 64, int precision = 6);
  std::string model() const override { return "wkt-focus-embedder"; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  HashEmbedder hash_;
  int precision_;
};

}  // namespace toporel
