#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/llm.hpp"

namespace dir::llm {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string HttpTransport::send(std::string_view prompt, const ProviderConfig& config) {
  auto [base, path] = split_endpoint(config.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_var(config.provider_id).c_str()))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  nlohmann::json body = {{"model", config.model_name}, {"temperature", config.temperature}};
  if (config.adapter == "openai-chat")
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  else
    body["prompt"] = std::string(prompt);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransientError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientError("HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body, 1);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what(), 1);
  }
  // OpenAI chat, OpenAI completion, then plain {"completion"} / {"text"} bodies.
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const auto& choice = doc["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content"))
      return choice["message"]["content"].get<std::string>();
    if (choice.contains("text")) return choice["text"].get<std::string>();
  }
  if (doc.contains("completion")) return doc["completion"].get<std::string>();
  if (doc.contains("text")) return doc["text"].get<std::string>();
  throw ProviderError("provider response has no completion text", 1);
}

}  // namespace dir::llm
