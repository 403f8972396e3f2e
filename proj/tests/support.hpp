#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "bipolar/backend.hpp"
#include "bipolar/collection.hpp"
#include "bipolar/metrics.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/runstore.hpp"

namespace fs = std::filesystem;

namespace testsupport {

inline fs::path source_dir() { return fs::path(BIPOLAR_SOURCE_DIR); }
inline fs::path cameo15_path() { return source_dir() / "data" / "cameo15.codebook"; }

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("bipolar-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

// Small codebook: `cats` categories with `pairs` event pairs each, all role
// and frame forms in every listed language.
inline std::string small_codebook_yaml(int cats, int pairs, const std::vector<std::string>& langs = {"en"}) {
  std::string y = "topic: t\nbase_language: " + langs.front() + "\nentities:\n";
  for (std::string id : {"aa", "bb"}) {
    y += "  - id: " + id + "\n    native_language: " + langs.back() + "\n    name: {";
    for (std::size_t i = 0; i < langs.size(); ++i)
      y += (i ? ", " : "") + langs[i] + ": " + id + "_" + langs[i];
    y += "}\n";
  }
  y += "categories:\n";
  for (int c = 0; c < cats; ++c) {
    y += "  - id: c" + std::to_string(c) + "\n    events:\n";
    for (int p = 0; p < pairs; ++p) {
      y += "      - id: p" + std::to_string(p) + "\n";
      for (std::string pol : {"positive", "negative"}) {
        y += "        " + pol + ":\n";
        for (const auto& l : langs) y += "          " + l + ": \"{entity} " + pol + " " + std::to_string(c) + "." + std::to_string(p) + " " + l + "\"\n";
        y += "          forms:\n";
        for (std::string form : {"past", "future", "object", "object.past", "object.future"}) {
          y += "            " + form + ": {";
          for (std::size_t i = 0; i < langs.size(); ++i)
            y += (i ? ", " : "") + langs[i] + ": \"" + form + " {entity} " + pol + " " + std::to_string(c) + "." + std::to_string(p) + "\"";
          y += "}\n";
        }
      }
    }
  }
  return y;
}

inline std::vector<bipolar::StatementRecord> cameo_dataset(const bipolar::Codebook& cb) {
  return bipolar::generate_dataset(cb, {bipolar::Role::subject}, {bipolar::Frame::present}, {"en"});
}

// Runs the mock backend over a dataset and returns the resulting responses.
inline std::vector<bipolar::ResponseRecord> mock_responses(const std::vector<bipolar::StatementRecord>& ds,
                                                           const bipolar::Codebook& cb,
                                                           const bipolar::BackendConfig& cfg,
                                                           const std::vector<std::string>& variants,
                                                           const fs::path& store_dir) {
  bipolar::RunStore store(store_dir);
  bipolar::MockBackend backend(ds, cb.entity_a().id, cfg.mock);
  bipolar::CollectionOptions opts;
  opts.sleep = [](std::chrono::milliseconds) {};
  bipolar::run_collection(ds, bipolar::enumerate_variants(cb, variants), cb, backend, cfg, store, opts);
  return store.records();
}

}  // namespace testsupport
