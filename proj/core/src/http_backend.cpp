#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "toporel/error.hpp"
#include "toporel/llm.hpp"

namespace toporel {

namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, without trailing slash
};

Endpoint split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = base_url.substr(0, path_start);
  if (path_start != std::string::npos) e.prefix = base_url.substr(path_start);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

std::string api_key_from_env(const BackendConfig& config) {
  const char* v = std::getenv(config.api_key_env.c_str());
  if (!v || !*v) throw AuthError("environment variable " + config.api_key_env + " holding the API key is not set");
  return v;
}

// POSTs a JSON body, retrying network failures, 429 and 5xx with exponential
// backoff. Total sleep never exceeds the configured ceiling.
json post_json(const BackendConfig& config, const std::string& api_key, const std::string& path, const json& body) {
  const Endpoint ep = split_url(config.base_url);
  httplib::Client client(ep.origin);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  const httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
  const std::string payload = body.dump();

  double slept = 0;
  double delay = config.backoff_initial_seconds;
  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(ep.prefix + path, headers, payload, "application/json");
    if (res) {
      if (res->status == 401 || res->status == 403) {
        throw AuthError("service rejected the API key (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status >= 200 && res->status < 300) {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw BackendError(std::string("unreadable service response: ") + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (res->status != 429 && res->status < 500) throw BackendError(last_error);
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt >= config.max_retries) break;
    const double wait = std::min(delay, config.backoff_ceiling_seconds - slept);
    if (wait <= 0) break;
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    slept += wait;
    delay *= 2;
  }
  throw BackendError("request to " + config.base_url + path + " failed: " + last_error);
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  api_key_ = api_key_from_env(config_);
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages, double temperature, int) {
  json body;
  body["model"] = config_.chat_model;
  body["temperature"] = temperature;
  body["max_tokens"] = config_.max_tokens;
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const json res = post_json(config_, api_key_, "/chat/completions", body);
  try {
    const auto& content = res.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const json::exception& e) {
    throw BackendError(std::string("chat response lacks choices[0].message.content: ") + e.what());
  }
}

HttpEmbeddingBackend::HttpEmbeddingBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  api_key_ = api_key_from_env(config_);
}

std::vector<Embedding> HttpEmbeddingBackend::embed(const std::vector<std::string>& texts) {
  json body;
  body["model"] = config_.embed_model;
  body["input"] = texts;
  const json res = post_json(config_, api_key_, "/embeddings", body);
  std::vector<Embedding> out(texts.size());
  try {
    const auto& data = res.at("data");
    if (data.size() != texts.size()) throw BackendError("embedding response has the wrong number of vectors");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t index = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      if (index >= out.size()) throw BackendError("embedding response index out of range");
      out[index] = data[i].at("embedding").get<Embedding>();
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("embedding response lacks data[].embedding: ") + e.what());
  }
  const std::size_t dim = out.empty() ? 0 : out.front().size();
  for (const auto& v : out) {
    if (v.size() != dim) throw DimensionMismatch("embedding service returned vectors of different sizes");
  }
  return out;
}

}  // namespace toporel
