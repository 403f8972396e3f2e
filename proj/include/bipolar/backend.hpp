#pragma once

// Backend configuration, the deterministic mock scorer, and the
// retry-and-exclude protocol that turns completions into ResponseRecords.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "bipolar/common.hpp"
#include "bipolar/hash.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/promptgen.hpp"
#include "bipolar/response.hpp"
#include "bipolar/score_parser.hpp"
#include "json.hpp"

namespace bipolar {

struct MockParams {
  int base_pos = 80;
  int base_neg = 20;
  int delta = 0;                            // planted bias toward entity_a
  std::map<std::string, int> category_delta;  // overrides delta per category
  std::map<std::string, int> variant_offsets;
  std::vector<int> noise_values{0};
  std::uint64_t seed = 0;
  int score_step = 5;
  // Noise keyed on the mirror pair, so both entities of a pair share it.
  bool paired_noise = true;
  // The first N attempts answer with prose instead of a score.
  int malformed_attempts = 0;
};

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string model_name = "mock";
  std::string endpoint_url;
  std::string api_key_env;
  std::map<std::string, std::string> headers;  // values may reference ${API_KEY}
  int max_retries = 4;
  std::chrono::milliseconds request_timeout{60000};
  int max_concurrency = 1;
  double requests_per_minute = 0;  // 0 = unlimited
  double temperature = 0;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{8000};
  std::filesystem::path replay_store;
  MockParams mock;
};

inline void validate(const BackendConfig& cfg) {
  std::vector<std::string> errs;
  if (cfg.model_name.empty()) errs.push_back("model: required");
  if (cfg.kind == BackendKind::http_chat && cfg.endpoint_url.empty())
    errs.push_back("endpoint: required for http_chat backends");
  if (cfg.kind != BackendKind::http_chat && !cfg.endpoint_url.empty())
    errs.push_back("endpoint: only valid for http_chat backends");
  if (cfg.kind == BackendKind::replay && cfg.replay_store.empty())
    errs.push_back("replay_store: required for replay backends");
  if (cfg.max_retries < 0) errs.push_back("max_retries: must be >= 0");
  if (cfg.max_concurrency < 1) errs.push_back("max_concurrency: must be >= 1");
  if (cfg.requests_per_minute < 0) errs.push_back("requests_per_minute: must be >= 0");
  if (cfg.request_timeout.count() <= 0) errs.push_back("request_timeout_ms: must be > 0");
  if (cfg.mock.noise_values.empty()) errs.push_back("mock.noise: must not be empty");
  if (cfg.mock.score_step < 1) errs.push_back("mock.score_step: must be >= 1");
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

inline BackendConfig parse_backend_config(const std::string& text,
                                          const std::filesystem::path& base_dir = {}) {
  BackendConfig cfg;
  try {
    const auto root = YAML::Load(text);
    if (!root.IsMap()) throw ParseError("backend config root must be a mapping");
    if (root["kind"]) {
      auto k = parse_backend_kind(root["kind"].as<std::string>());
      if (!k) throw ValidationError({"kind: unknown backend kind '" + root["kind"].as<std::string>() + "'"});
      cfg.kind = *k;
    }
    if (root["model"]) cfg.model_name = root["model"].as<std::string>();
    if (root["endpoint"]) cfg.endpoint_url = root["endpoint"].as<std::string>();
    if (root["api_key_env"]) cfg.api_key_env = root["api_key_env"].as<std::string>();
    if (root["headers"]) cfg.headers = root["headers"].as<std::map<std::string, std::string>>();
    if (root["max_retries"]) cfg.max_retries = root["max_retries"].as<int>();
    if (root["request_timeout_ms"])
      cfg.request_timeout = std::chrono::milliseconds(root["request_timeout_ms"].as<long>());
    if (root["max_concurrency"]) cfg.max_concurrency = root["max_concurrency"].as<int>();
    if (root["requests_per_minute"]) cfg.requests_per_minute = root["requests_per_minute"].as<double>();
    if (root["temperature"]) cfg.temperature = root["temperature"].as<double>();
    if (root["backoff_initial_ms"])
      cfg.backoff_initial = std::chrono::milliseconds(root["backoff_initial_ms"].as<long>());
    if (root["backoff_max_ms"])
      cfg.backoff_max = std::chrono::milliseconds(root["backoff_max_ms"].as<long>());
    if (root["replay_store"]) {
      std::filesystem::path p = root["replay_store"].as<std::string>();
      cfg.replay_store = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (const auto m = root["mock"]) {
      auto& mp = cfg.mock;
      if (m["base_pos"]) mp.base_pos = m["base_pos"].as<int>();
      if (m["base_neg"]) mp.base_neg = m["base_neg"].as<int>();
      if (m["delta"]) mp.delta = m["delta"].as<int>();
      if (m["category_delta"]) mp.category_delta = m["category_delta"].as<std::map<std::string, int>>();
      if (m["variant_offsets"])
        mp.variant_offsets = m["variant_offsets"].as<std::map<std::string, int>>();
      if (m["noise"]) mp.noise_values = m["noise"].as<std::vector<int>>();
      if (m["seed"]) mp.seed = m["seed"].as<std::uint64_t>();
      if (m["score_step"]) mp.score_step = m["score_step"].as<int>();
      if (m["paired_noise"]) mp.paired_noise = m["paired_noise"].as<bool>();
      if (m["malformed_attempts"]) mp.malformed_attempts = m["malformed_attempts"].as<int>();
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("backend config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

inline BackendConfig load_backend_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return parse_backend_config(text, path.parent_path());
}

// Backend descriptor for manifests. Header values are redacted; only the
// name of the API key variable is recorded.
inline nlohmann::ordered_json describe(const BackendConfig& cfg) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(cfg.kind);
  j["model"] = cfg.model_name;
  if (cfg.kind == BackendKind::http_chat) {
    j["endpoint"] = cfg.endpoint_url;
    j["api_key_env"] = cfg.api_key_env;
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.headers) h[k] = "<redacted>";
    j["headers"] = h;
  }
  j["max_retries"] = cfg.max_retries;
  j["request_timeout_ms"] = cfg.request_timeout.count();
  j["max_concurrency"] = cfg.max_concurrency;
  j["requests_per_minute"] = cfg.requests_per_minute;
  j["temperature"] = cfg.temperature;
  if (cfg.kind == BackendKind::replay) j["replay_store"] = cfg.replay_store.generic_string();
  if (cfg.kind == BackendKind::mock) {
    const auto& m = cfg.mock;
    nlohmann::ordered_json mj;
    mj["base_pos"] = m.base_pos;
    mj["base_neg"] = m.base_neg;
    mj["delta"] = m.delta;
    mj["category_delta"] = m.category_delta;
    mj["variant_offsets"] = m.variant_offsets;
    mj["noise"] = m.noise_values;
    mj["seed"] = m.seed;
    mj["score_step"] = m.score_step;
    mj["paired_noise"] = m.paired_noise;
    mj["malformed_attempts"] = m.malformed_attempts;
    j["mock"] = mj;
  }
  return j;
}

// ---- mock scorer ------------------------------------------------------------

inline int mock_noise(const StatementRecord& s, std::string_view variant_id, const MockParams& p) {
  if (p.noise_values.size() == 1) return p.noise_values.front();
  std::string_view key = s.statement_id;
  if (p.paired_noise && !s.mirror_id.empty() && s.mirror_id < s.statement_id) key = s.mirror_id;
  std::string material(key);
  material += '\x1f';
  material += variant_id;
  material += '\x1f';
  material += std::to_string(p.seed);
  return p.noise_values[sha256_u64(material) % p.noise_values.size()];
}

// clamp(base(polarity) + delta*[entity_a] + offset(variant) + noise), snapped to
// the nearest multiple of score_step (halves round up).
inline int mock_score(const StatementRecord& s, std::string_view variant_id, const MockParams& p,
                      std::string_view entity_a_id) {
  int v = s.polarity == Polarity::positive ? p.base_pos : p.base_neg;
  if (s.entity_id == entity_a_id) {
    auto cd = p.category_delta.find(s.category_id);
    v += cd != p.category_delta.end() ? cd->second : p.delta;
  }
  if (auto off = p.variant_offsets.find(std::string(variant_id)); off != p.variant_offsets.end())
    v += off->second;
  v += mock_noise(s, variant_id, p);
  v = std::clamp(v, kScoreMin, kScoreMax);
  const int step = std::max(1, p.score_step);
  v = (v + step / 2) / step * step;
  return std::clamp(v, kScoreMin, kScoreMax);
}

// ---- backends ---------------------------------------------------------------

struct Completion {
  bool transport_ok = false;
  std::string text;
  std::string error;
};

// complete() may be called concurrently from several worker threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  virtual Completion complete(const Prompt& prompt, int attempt) = 0;
  // Backends that reproduce stored records bypass the retry protocol.
  virtual std::optional<ResponseRecord> replay(const Prompt&) { return std::nullopt; }
};

inline constexpr std::string_view kMockRefusal = "I cannot judge this.";

class MockBackend final : public Backend {
 public:
  MockBackend(const std::vector<StatementRecord>& dataset, std::string entity_a_id, MockParams params)
      : entity_a_(std::move(entity_a_id)), params_(std::move(params)) {
    for (const auto& r : dataset) records_.emplace(r.statement_id, r);
  }

  BackendKind kind() const override { return BackendKind::mock; }

  Completion complete(const Prompt& prompt, int attempt) override {
    auto it = records_.find(prompt.statement_id);
    if (it == records_.end())
      return {false, {}, "mock: unknown statement " + prompt.statement_id};
    if (attempt <= params_.malformed_attempts) return {true, std::string(kMockRefusal), {}};
    return {true, std::to_string(mock_score(it->second, prompt.variant_id, params_, entity_a_)), {}};
  }

 private:
  std::unordered_map<std::string, StatementRecord> records_;
  std::string entity_a_;
  MockParams params_;
};

class ReplayBackend final : public Backend {
 public:
  ReplayBackend(const std::vector<ResponseRecord>& stored, std::string model_name)
      : model_(std::move(model_name)) {
    for (const auto& r : stored)
      if (r.model_name == model_) stored_.emplace(key_of(r), r);
  }

  BackendKind kind() const override { return BackendKind::replay; }

  Completion complete(const Prompt&, int) override {
    return {false, {}, "replay backends do not issue completions"};
  }

  std::optional<ResponseRecord> replay(const Prompt& p) override {
    auto it = stored_.find(ResponseKey{p.statement_id, p.variant_id, model_});
    if (it != stored_.end()) return it->second;
    ResponseRecord miss;
    miss.statement_id = p.statement_id;
    miss.variant_id = p.variant_id;
    miss.model_name = model_;
    miss.raw_text = "replay: no stored response";
    miss.status = ResponseStatus::transport_failed;
    miss.backend_kind = BackendKind::replay;
    return miss;
  }

 private:
  std::string model_;
  std::map<ResponseKey, ResponseRecord> stored_;
};

// ---- retry protocol ---------------------------------------------------------

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

inline std::chrono::milliseconds backoff_delay(const BackendConfig& cfg, int transport_failures) {
  auto d = cfg.backoff_initial;
  for (int i = 1; i < transport_failures && d < cfg.backoff_max; ++i) d *= 2;
  return std::min(d, cfg.backoff_max);
}

// Never throws for per-sample failures: the outcome is encoded in status.
// Malformed completions are retried immediately; transport errors back off
// exponentially. Both share the max_retries + 1 attempt budget and the final
// status reflects the last attempt.
inline ResponseRecord score_prompt(const Prompt& prompt, Backend& backend, const BackendConfig& cfg,
                                   const Sleeper& sleep = real_sleep) {
  if (auto replayed = backend.replay(prompt)) {
    replayed->timestamp = utc_now_iso8601();
    return *replayed;
  }
  ResponseRecord rec;
  rec.statement_id = prompt.statement_id;
  rec.variant_id = prompt.variant_id;
  rec.model_name = cfg.model_name;
  rec.backend_kind = backend.kind();
  const int budget = cfg.max_retries + 1;
  int transport_failures = 0;
  bool last_transport = false;
  for (int attempt = 1; attempt <= budget; ++attempt) {
    rec.attempts = attempt;
    Completion c;
    try {
      c = backend.complete(prompt, attempt);
    } catch (const std::exception& e) {
      c = {false, {}, e.what()};
    }
    if (!c.transport_ok) {
      last_transport = true;
      rec.raw_text = "transport error: " + c.error;
      ++transport_failures;
      if (attempt < budget) sleep(backoff_delay(cfg, transport_failures));
      continue;
    }
    last_transport = false;
    rec.raw_text = c.text;
    if (auto s = parse_score(c.text)) {
      rec.score = *s;
      rec.status = ResponseStatus::ok;
      rec.timestamp = utc_now_iso8601();
      return rec;
    }
  }
  rec.score.reset();
  rec.status = last_transport ? ResponseStatus::transport_failed : ResponseStatus::malformed_excluded;
  rec.timestamp = utc_now_iso8601();
  return rec;
}

}  // namespace bipolar
