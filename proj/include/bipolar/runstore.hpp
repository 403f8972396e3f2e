#pragma once

// Append-only run stores (one directory per run: manifest.json +
// responses.jsonl) and the join of responses back onto dataset metadata.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "bipolar/common.hpp"
#include "bipolar/csv.hpp"
#include "bipolar/hash.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/response.hpp"
#include "json.hpp"

namespace bipolar {

struct RunCounts {
  std::size_t ok = 0;
  std::size_t malformed_excluded = 0;
  std::size_t transport_failed = 0;

  void add(ResponseStatus s) {
    switch (s) {
      case ResponseStatus::ok: ++ok; break;
      case ResponseStatus::malformed_excluded: ++malformed_excluded; break;
      case ResponseStatus::transport_failed: ++transport_failed; break;
    }
  }
  std::size_t total() const { return ok + malformed_excluded + transport_failed; }
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string codebook_sha256;
  std::string dataset_sha256;
  std::vector<std::string> variant_ids;
  nlohmann::ordered_json backend;  // secrets already redacted
  std::string started_at;
  std::string finished_at;
  RunCounts counts;          // whole store after the run
  std::size_t new_records = 0;  // appended by this invocation

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool_version"] = tool_version;
    j["codebook_sha256"] = codebook_sha256;
    j["dataset_sha256"] = dataset_sha256;
    j["variant_ids"] = variant_ids;
    j["backend"] = backend;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(finished_at);
    nlohmann::ordered_json c;
    c["ok"] = counts.ok;
    c["malformed_excluded"] = counts.malformed_excluded;
    c["transport_failed"] = counts.transport_failed;
    j["counts"] = c;
    j["new_records"] = new_records;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.tool_version = j.value("tool_version", "");
    m.codebook_sha256 = j.value("codebook_sha256", "");
    m.dataset_sha256 = j.value("dataset_sha256", "");
    m.variant_ids = j.value("variant_ids", std::vector<std::string>{});
    m.backend = j.value("backend", nlohmann::ordered_json::object());
    m.started_at = j.value("started_at", "");
    if (j.contains("finished_at") && j["finished_at"].is_string()) m.finished_at = j["finished_at"];
    if (j.contains("counts")) {
      m.counts.ok = j["counts"].value("ok", 0u);
      m.counts.malformed_excluded = j["counts"].value("malformed_excluded", 0u);
      m.counts.transport_failed = j["counts"].value("transport_failed", 0u);
    }
    m.new_records = j.value("new_records", 0u);
    return m;
  }
};

// Thread-safe single writer over an append-only JSONL file.
class RunStore {
 public:
  static constexpr const char* kResponsesFile = "responses.jsonl";
  static constexpr const char* kManifestFile = "manifest.json";

  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (!std::filesystem::is_directory(dir_))
      throw StoreError("run store " + dir_.string() + " is not a directory");
    const auto file = dir_ / kResponsesFile;
    if (std::filesystem::exists(file)) {
      std::string text = read_file(file);
      // A run killed mid-write can leave a partial last line; drop it.
      if (!text.empty() && text.back() != '\n') {
        text.erase(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
        std::filesystem::resize_file(file, text.size());
      }
      records_ = parse_responses(text, file.string());
      for (const auto& r : records_) keys_.insert(key_of(r));
    }
    out_.open(file, std::ios::binary | std::ios::app);
    if (!out_) throw StoreError("cannot open " + file.string() + " for appending");
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::vector<ResponseRecord> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  bool contains(const ResponseKey& k) const {
    std::lock_guard lock(mu_);
    return keys_.count(k) > 0;
  }

  RunCounts counts() const {
    std::lock_guard lock(mu_);
    RunCounts c;
    for (const auto& r : records_) c.add(r.status);
    return c;
  }

  void append(const ResponseRecord& r) {
    const auto line = to_jsonl_line(r);
    std::lock_guard lock(mu_);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw StoreError("write to " + (dir_ / kResponsesFile).string() + " failed");
    records_.push_back(r);
    keys_.insert(key_of(r));
  }

  void write_manifest(const RunManifest& m) const {
    const auto path = dir_ / kManifestFile;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << m.to_json().dump(2) << '\n';
    if (!out) throw StoreError("cannot write " + path.string());
  }

  std::optional<RunManifest> read_manifest() const {
    const auto path = dir_ / kManifestFile;
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      return RunManifest::from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw StoreError(path.string() + ": " + e.what());
    }
  }

  // Accepts a store directory or a responses file.
  static std::vector<ResponseRecord> read_responses(const std::filesystem::path& path) {
    auto file = std::filesystem::is_directory(path) ? path / kResponsesFile : path;
    if (!std::filesystem::exists(file)) throw StoreError("no responses at " + file.string());
    return parse_responses(read_file(file), file.string());
  }

  static std::vector<ResponseRecord> parse_responses(std::string_view text, const std::string& source) {
    std::vector<ResponseRecord> out;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      try {
        out.push_back(response_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw StoreError(source + ":" + std::to_string(line_no) + ": " + e.what());
      } catch (const ParseError& e) {
        throw StoreError(source + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::vector<ResponseRecord> records_;
  std::set<ResponseKey> keys_;
  std::ofstream out_;
};

// ---- score table -------------------------------------------------------------

struct ScoreRow {
  std::string model_name;
  std::string variant_id;
  std::string statement_id;
  std::string category_id;
  std::string event_pair_id;
  Polarity polarity = Polarity::positive;
  std::string entity_id;
  Role role = Role::subject;
  Frame frame = Frame::present;
  std::string language;
  int score = 0;

  bool operator==(const ScoreRow&) const = default;
};

struct ExclusionCounts {
  std::size_t malformed_excluded = 0;
  std::size_t transport_failed = 0;

  bool operator==(const ExclusionCounts&) const = default;
};

using ModelVariant = std::pair<std::string, std::string>;

// Rows sorted by (model, variant, statement_id); only ok responses contribute.
struct ScoreTable {
  std::vector<ScoreRow> rows;
  std::map<ModelVariant, ExclusionCounts> exclusions;

  std::vector<std::string> models() const {
    std::set<std::string> s;
    for (const auto& [mv, _] : exclusions) s.insert(mv.first);
    for (const auto& r : rows) s.insert(r.model_name);
    return {s.begin(), s.end()};
  }

  std::vector<std::string> variants() const {
    std::set<std::string> s;
    for (const auto& [mv, _] : exclusions) s.insert(mv.second);
    for (const auto& r : rows) s.insert(r.variant_id);
    return {s.begin(), s.end()};
  }

  std::string to_csv() const {
    std::string out = csv::row({"model_name", "variant_id", "statement_id", "category_id",
                                "event_pair_id", "polarity", "entity_id", "role", "frame",
                                "language", "score"});
    for (const auto& r : rows)
      out += csv::row({r.model_name, r.variant_id, r.statement_id, r.category_id, r.event_pair_id,
                       std::string(to_string(r.polarity)), r.entity_id,
                       std::string(to_string(r.role)), std::string(to_string(r.frame)), r.language,
                       std::to_string(r.score)});
    return out;
  }
};

inline ScoreTable assemble(const std::vector<StatementRecord>& dataset,
                           const std::vector<std::vector<ResponseRecord>>& stores) {
  const auto index = index_by_id(dataset);
  ScoreTable table;
  std::set<ResponseKey> seen;
  for (const auto& store : stores) {
    for (const auto& r : store) {
      auto it = index.find(r.statement_id);
      if (it == index.end())
        throw StoreError("orphan response: statement_id " + r.statement_id + " is not in the dataset");
      if (!seen.insert(key_of(r)).second)
        throw StoreError("duplicate response for statement " + r.statement_id + ", variant " +
                         r.variant_id + ", model " + r.model_name);
      auto& ex = table.exclusions[{r.model_name, r.variant_id}];
      if (r.status == ResponseStatus::malformed_excluded) {
        ++ex.malformed_excluded;
        continue;
      }
      if (r.status == ResponseStatus::transport_failed) {
        ++ex.transport_failed;
        continue;
      }
      const auto& s = *it->second;
      table.rows.push_back({r.model_name, r.variant_id, s.statement_id, s.category_id,
                            s.event_pair_id, s.polarity, s.entity_id, s.role, s.frame, s.language,
                            *r.score});
    }
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return std::tie(a.model_name, a.variant_id, a.statement_id) <
           std::tie(b.model_name, b.variant_id, b.statement_id);
  });
  return table;
}

}  // namespace bipolar
