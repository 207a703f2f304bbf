#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/llm.hpp"
#include "toporel/prompts.hpp"
#include "toporel/wkt.hpp"

using namespace toporel;
using namespace toporel::testing;

namespace {

class CountingChat : public ChatBackend {
 public:
  std::atomic<int> calls{0};
  std::string model() const override { return "counting"; }
  std::string complete(const std::vector<ChatMessage>& messages, double, int sample_index) override {
    ++calls;
    return "echo " + std::to_string(sample_index) + ": " + messages.back().content;
  }
};

// Local OpenAI-compatible service whose first `failures` requests answer `fail_status`.
class FakeService {
 public:
  FakeService(int failures, int fail_status) : failures_(failures), fail_status_(fail_status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      if (requests++ < failures_) {
        res.status = fail_status_;
        res.set_content("{\"error\":\"nope\"}", "application/json");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const std::string reply = "model " + body.at("model").get<std::string>();
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", reply}}}}}}}.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json data = nlohmann::json::array();
      const auto& input = body.at("input");
      // Reverse order with explicit indices; the client must restore input order.
      for (std::size_t i = input.size(); i-- > 0;) {
        data.push_back({{"index", i}, {"embedding", {static_cast<double>(input[i].get<std::string>().size()), 1.0}}});
      }
      res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  BackendConfig config() const {
    BackendConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key_env = "TOPOREL_TEST_KEY";
    c.chat_model = "fake-chat";
    c.embed_model = "fake-embed";
    c.max_retries = 3;
    c.backoff_initial_seconds = 0.01;
    c.backoff_ceiling_seconds = 0.1;
    c.timeout_seconds = 5;
    return c;
  }

  std::atomic<int> requests{0};
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  int failures_;
  int fail_status_;
  std::thread thread_;
};

struct KeyEnv {
  KeyEnv() { setenv("TOPOREL_TEST_KEY", "secret", 1); }
  ~KeyEnv() { unsetenv("TOPOREL_TEST_KEY"); }
};

std::string task1_prompt(const char* a, const char* b) {
  return render_task1(TemplateSet::builtin(), a, b, Task1Style::Zero, {});
}

const char* kPoint = "POINT (-89.3551 43.123)";
const char* kPolygon = "POLYGON ((-89.3552 43.124, -89.355 43.124, -89.355 43.122, -89.3552 43.122, -89.3552 43.124))";

}  // namespace

TEST_CASE("HTTP chat succeeds and sends the bearer key") {
  KeyEnv key;
  FakeService svc(0, 500);
  HttpChatBackend chat(svc.config());
  CHECK(chat.complete({{"user", "hi"}}, 0.0, 0) == "model fake-chat");
  CHECK(svc.last_auth == "Bearer secret");
}

TEST_CASE("HTTP chat retries 429 and 5xx") {
  KeyEnv key;
  FakeService limited(2, 429);
  HttpChatBackend chat(limited.config());
  CHECK(chat.complete({{"user", "hi"}}, 0.0, 0) == "model fake-chat");
  CHECK(limited.requests == 3);

  FakeService broken(10, 503);
  HttpChatBackend chat2(broken.config());
  CHECK_THROWS_AS(chat2.complete({{"user", "hi"}}, 0.0, 0), BackendError);
  CHECK(broken.requests == 4);
}

TEST_CASE("HTTP chat does not retry auth or client errors") {
  KeyEnv key;
  FakeService denied(10, 401);
  HttpChatBackend chat(denied.config());
  CHECK_THROWS_AS(chat.complete({{"user", "hi"}}, 0.0, 0), AuthError);
  CHECK(denied.requests == 1);

  FakeService bad(10, 400);
  HttpChatBackend chat2(bad.config());
  CHECK_THROWS_AS(chat2.complete({{"user", "hi"}}, 0.0, 0), BackendError);
  CHECK(bad.requests == 1);
}

TEST_CASE("HTTP embeddings keep input order") {
  KeyEnv key;
  FakeService svc(0, 500);
  HttpEmbeddingBackend embed(svc.config());
  const auto v = embed.embed({"a", "bbb", "cc"});
  REQUIRE(v.size() == 3);
  CHECK(v[0] == Embedding{1, 1});
  CHECK(v[1] == Embedding{3, 1});
  CHECK(v[2] == Embedding{2, 1});
}

TEST_CASE("HTTP backend configuration errors") {
  unsetenv("TOPOREL_NO_SUCH_KEY");
  BackendConfig c;
  c.api_key_env = "TOPOREL_NO_SUCH_KEY";
  CHECK_THROWS_AS(HttpChatBackend{c}, AuthError);

  KeyEnv key;
  BackendConfig unreachable;
  unreachable.api_key_env = "TOPOREL_TEST_KEY";
  unreachable.base_url = "http://127.0.0.1:1/v1";
  unreachable.max_retries = 0;
  unreachable.timeout_seconds = 1;
  HttpChatBackend chat(unreachable);
  CHECK_THROWS_AS(chat.complete({{"user", "hi"}}, 0.0, 0), BackendError);

  BackendConfig invalid;
  invalid.max_retries = -1;
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
}

TEST_CASE("client caches chat responses on disk") {
  const std::string dir = fresh_dir("llm-cache");
  auto backend = std::make_shared<CountingChat>();
  {
    LlmClient client(backend, nullptr, dir, 0.0);
    const auto first = client.chat({{"user", "q"}}, 0);
    const auto second = client.chat({{"user", "q"}}, 0);
    CHECK_FALSE(first.cache_hit);
    CHECK(second.cache_hit);
    CHECK(second.response == first.response);
    CHECK(client.chat({{"user", "q"}}, 1).response == "echo 1: q");
    CHECK(backend->calls == 2);
  }
  LlmClient reopened(backend, nullptr, dir, 0.0);
  CHECK(reopened.chat({{"user", "q"}}, 0).cache_hit);
  CHECK(backend->calls == 2);
  CHECK(chat_cache_key("m", {{"user", "q"}}, 0.0, 0) != chat_cache_key("m", {{"user", "q"}}, 0.5, 0));
}

TEST_CASE("response cache files are sorted and validated") {
  const std::string dir = fresh_dir("response-cache");
  std::string path;
  {
    ResponseCache cache(dir, "chat", "m1", 1);
    cache.put("b", "2");
    cache.put("a", "1");
    path = cache.path();
  }
  ResponseCache again(dir, "chat", "m1");
  CHECK(again.size() == 2);
  CHECK(again.get("a") == "1");
  const std::string text = read_file(path);
  CHECK(text.find("\"a\"") < text.find("\"b\""));
  write_file_atomic(path, "not json\n");
  CHECK_THROWS_AS(ResponseCache(dir, "chat", "m1"), CacheCorruption);
}

TEST_CASE("transcript replay") {
  const std::string prompt = "hello";
  const auto t = TranscriptChat::from_jsonl("{\"prompt_sha256\": \"" + sha256_hex(prompt) +
                                            "\", \"response\": \"(Point, within, Polygon)\"}\n");
  TranscriptChat chat = t;
  CHECK(chat.complete({{"user", prompt}}, 0.0, 0) == "(Point, within, Polygon)");
  CHECK_THROWS_AS(chat.complete({{"user", "other"}}, 0.0, 0), BackendError);
}

TEST_CASE("mock error specs") {
  const auto spec = MockErrorSpec::parse("Point/Polygon:within->touches@1; LineString/LineString:crosses<->touches@0.5; prose@0.1");
  REQUIRE(spec.rules.size() == 3);
  CHECK(spec.rules[0].from == Predicate::Within);
  CHECK(spec.rules[0].to == Predicate::Touches);
  CHECK(spec.rules[2].from == Predicate::Touches);
  CHECK(spec.rules[2].rate == 0.5);
  CHECK(spec.prose_rate == 0.1);
  CHECK(MockErrorSpec::parse("").rules.empty());
  CHECK_THROWS_AS(MockErrorSpec::parse("Point/Polygon:within"), ConfigError);
  CHECK_THROWS_AS(MockErrorSpec::parse("Point/Polygon:within->touches@2"), ConfigError);
}

TEST_CASE("geometry-aware mock answers Task 1 by classification") {
  GeometryAwareMock clean;
  const std::string prompt = task1_prompt(kPoint, kPolygon);
  CHECK(parse_task1_answer(clean.complete({{"user", prompt}}, 0.0, 0)).tuple ==
        RelationTuple{GeometryType::Point, Predicate::Within, GeometryType::Polygon});

  GeometryAwareMock swapped(MockErrorSpec::parse("Point/Polygon:within->touches@1"));
  CHECK(parse_task1_answer(swapped.complete({{"user", prompt}}, 0.0, 0)).tuple ==
        RelationTuple{GeometryType::Point, Predicate::Touches, GeometryType::Polygon});

  GeometryAwareMock prose(MockErrorSpec::parse("prose@1"));
  CHECK_FALSE(parse_task1_answer(prose.complete({{"user", prompt}}, 0.0, 0)).format_valid());
}

TEST_CASE("geometry-aware mock answers Task 2 generation by construction") {
  GeometryAwareMock mock;
  const std::string prompt = render_task2_generation(TemplateSet::builtin(), Predicate::Within, kPolygon,
                                                     GeometryType::Point, GenerationStyle::Zero, {});
  const auto g = parse_generated_geometry(mock.complete({{"user", prompt}}, 0.0, 0));
  REQUIRE(g.valid());
  CHECK(g.geometry->type() == GeometryType::Point);
  CHECK(classify(*g.geometry, parse_wkt(kPolygon)).predicate == Predicate::Within);
}

TEST_CASE("geometry-aware mock answers Task 3 from its script") {
  GeometryAwareMock::Script script;
  script.vernacular["is bordered by"] = {Predicate::Touches, Predicate::Overlaps};
  GeometryAwareMock mock({}, script);
  const std::string prompt = render_task3(TemplateSet::builtin(), "is bordered by", {});
  CHECK(parse_task3_answer(mock.complete({{"user", prompt}}, 0.0, 0)).primary == Predicate::Touches);
  CHECK(parse_task3_answer(mock.complete({{"user", prompt}}, 0.0, 1)).primary == Predicate::Overlaps);
  CHECK(parse_task3_answer(mock.complete({{"user", prompt}}, 0.0, 2)).primary == Predicate::Touches);
}

TEST_CASE("hash embeddings are deterministic unit vectors") {
  HashEmbedder e(32);
  const auto v = e.embed({"alpha", "beta", "alpha"});
  REQUIRE(v.size() == 3);
  CHECK(v[0] == v[2]);
  CHECK(v[0] != v[1]);
  double norm = 0;
  for (double x : v[0]) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  CHECK(v[0].size() == 32);
}

TEST_CASE("wkt-focus embeddings match a query ending in the candidate") {
  WktFocusEmbedder e(32);
  const auto v = e.embed({"Retrieve a geometry that is within the POLYGON ((0 0, 1 0, 1 1, 0 0)).\nPOINT (0.5 0.25)",
                          "POINT (0.5 0.25)", "POINT (0.5 0.26)"});
  CHECK(v[0] == v[1]);
  CHECK(v[0] != v[2]);
}

TEST_CASE("client rejects embeddings of changing dimension") {
  class Shifting : public EmbeddingBackend {
   public:
    int calls = 0;
    std::string model() const override { return "shifting"; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
      return std::vector<Embedding>(texts.size(), Embedding(static_cast<std::size_t>(2 + calls++), 0.5));
    }
  };
  LlmClient client(nullptr, std::make_shared<Shifting>(), "", 0.0);
  CHECK(client.embed_batch({"a"}).front().size() == 2);
  CHECK_THROWS_AS(client.embed_batch({"b"}), DimensionMismatch);
}
