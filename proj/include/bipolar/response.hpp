#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bipolar/common.hpp"
#include "json.hpp"

namespace bipolar {

enum class BackendKind { http_chat, mock, replay };
enum class ResponseStatus { ok, malformed_excluded, transport_failed };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::http_chat: return "http_chat";
    case BackendKind::mock: return "mock";
    case BackendKind::replay: return "replay";
  }
  return "mock";
}

inline std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "http_chat") return BackendKind::http_chat;
  if (s == "mock") return BackendKind::mock;
  if (s == "replay") return BackendKind::replay;
  return std::nullopt;
}

inline std::string_view to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::malformed_excluded: return "malformed_excluded";
    case ResponseStatus::transport_failed: return "transport_failed";
  }
  return "ok";
}

inline std::optional<ResponseStatus> parse_status(std::string_view s) {
  if (s == "ok") return ResponseStatus::ok;
  if (s == "malformed_excluded") return ResponseStatus::malformed_excluded;
  if (s == "transport_failed") return ResponseStatus::transport_failed;
  return std::nullopt;
}

// One backend answer for a (statement, variant, model) key.
// Invariant: status == ok exactly when score holds a value in [0, 100].
struct ResponseRecord {
  std::string statement_id;
  std::string variant_id;
  std::string model_name;
  std::string raw_text;
  std::optional<int> score;
  ResponseStatus status = ResponseStatus::ok;
  int attempts = 1;
  std::string timestamp;
  BackendKind backend_kind = BackendKind::mock;

  bool operator==(const ResponseRecord&) const = default;
};

struct ResponseKey {
  std::string statement_id;
  std::string variant_id;
  std::string model_name;

  auto operator<=>(const ResponseKey&) const = default;
};

inline ResponseKey key_of(const ResponseRecord& r) {
  return {r.statement_id, r.variant_id, r.model_name};
}

inline nlohmann::ordered_json to_json(const ResponseRecord& r) {
  nlohmann::ordered_json j;
  j["statement_id"] = r.statement_id;
  j["variant_id"] = r.variant_id;
  j["model_name"] = r.model_name;
  j["raw_text"] = r.raw_text;
  if (r.score) j["score"] = *r.score;
  else j["score"] = nullptr;
  j["status"] = to_string(r.status);
  j["attempts"] = r.attempts;
  j["timestamp"] = r.timestamp;
  j["backend_kind"] = to_string(r.backend_kind);
  return j;
}

inline std::string to_jsonl_line(const ResponseRecord& r) {
  // Raw completions may carry invalid UTF-8; replace rather than fail the run.
  return to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

inline ResponseRecord response_from_json(const nlohmann::json& j) {
  ResponseRecord r;
  r.statement_id = j.at("statement_id").get<std::string>();
  r.variant_id = j.at("variant_id").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  if (!j.at("score").is_null()) r.score = j.at("score").get<int>();
  auto st = parse_status(j.at("status").get<std::string>());
  auto bk = parse_backend_kind(j.at("backend_kind").get<std::string>());
  if (!st || !bk) throw ParseError("response " + r.statement_id + ": bad enum value");
  r.status = *st;
  r.backend_kind = *bk;
  r.attempts = j.at("attempts").get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  if ((r.status == ResponseStatus::ok) != (r.score && *r.score >= 0 && *r.score <= 100))
    throw ParseError("response " + r.statement_id + "/" + r.variant_id +
                     ": status and score disagree");
  return r;
}

}  // namespace bipolar
