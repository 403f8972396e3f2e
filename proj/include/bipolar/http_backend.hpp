#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <cstdlib>
#include <memory>
#include <string>

#include "bipolar/backend.hpp"
#include "bipolar/runstore.hpp"
#include "json.hpp"

namespace bipolar {

struct EndpointUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline EndpointUrl split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError({"endpoint: missing scheme in '" + url + "'"});
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Chat-completion request body: {"model", "messages": [{role, content}], "temperature"}.
inline std::string chat_request_body(const Prompt& p, const BackendConfig& cfg) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model_name;
  auto msgs = nlohmann::ordered_json::array();
  for (const auto& m : p.messages) {
    nlohmann::ordered_json mj;
    mj["role"] = m.role;
    mj["content"] = m.text;
    msgs.push_back(mj);
  }
  body["messages"] = msgs;
  body["temperature"] = cfg.temperature;
  return body.dump();
}

inline std::optional<std::string> chat_response_text(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

class HttpChatBackend final : public Backend {
 public:
  explicit HttpChatBackend(BackendConfig cfg) : cfg_(std::move(cfg)), url_(split_endpoint(cfg_.endpoint_url)) {
    std::string key;
    if (!cfg_.api_key_env.empty()) {
      if (const char* v = std::getenv(cfg_.api_key_env.c_str())) key = v;
    }
    auto headers = cfg_.headers;
    if (headers.empty() && !key.empty()) headers["Authorization"] = "Bearer ${API_KEY}";
    for (auto [name, value] : headers) {
      for (auto pos = value.find("${API_KEY}"); pos != std::string::npos; pos = value.find("${API_KEY}"))
        value.replace(pos, 10, key);
      headers_.emplace(name, value);
    }
  }

  BackendKind kind() const override { return BackendKind::http_chat; }

  Completion complete(const Prompt& prompt, int) override {
    httplib::Client client(url_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.request_timeout).count();
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.request_timeout).count() % 1000000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(url_.path, headers_, chat_request_body(prompt, cfg_), "application/json");
    if (!res) return {false, {}, httplib::to_string(res.error())};
    if (res->status < 200 || res->status >= 300)
      return {false, {}, "HTTP " + std::to_string(res->status)};
    auto text = chat_response_text(res->body);
    if (!text) return {false, {}, "unexpected response body"};
    return {true, *text, {}};
  }

 private:
  BackendConfig cfg_;
  EndpointUrl url_;
  httplib::Headers headers_;
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& cfg,
                                             const std::vector<StatementRecord>& dataset,
                                             const Codebook& cb) {
  switch (cfg.kind) {
    case BackendKind::http_chat:
      return std::make_unique<HttpChatBackend>(cfg);
    case BackendKind::mock:
      return std::make_unique<MockBackend>(dataset, cb.entity_a().id, cfg.mock);
    case BackendKind::replay:
      return std::make_unique<ReplayBackend>(RunStore::read_responses(cfg.replay_store), cfg.model_name);
  }
  throw Error("unknown backend kind");
}

}  // namespace bipolar
