#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <stop_token>
#include <thread>
#include <vector>

#include "bipolar/backend.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/promptgen.hpp"
#include "bipolar/rate_limiter.hpp"
#include "bipolar/runstore.hpp"

namespace bipolar {

struct CollectionOptions {
  Sleeper sleep = real_sleep;
  std::stop_token stop;  // a stop request ends the run after in-flight requests finish
  std::function<void(const ResponseRecord&)> on_record;  // called serialized
  SlidingWindowLimiter* limiter = nullptr;  // defaults to one built from the config
  std::string codebook_sha256;
};

// Scores every (statement, variant) pair missing from the store. Already
// stored keys are skipped, so reruns and resumed runs never duplicate.
inline RunManifest run_collection(const std::vector<StatementRecord>& dataset,
                                  const std::vector<PromptVariant>& variants, const Codebook& cb,
                                  Backend& backend, const BackendConfig& cfg, RunStore& store,
                                  const CollectionOptions& opts = {}) {
  RunManifest manifest;
  manifest.codebook_sha256 = opts.codebook_sha256;
  manifest.dataset_sha256 = sha256_hex(dataset_to_jsonl(dataset));
  for (const auto& v : variants) manifest.variant_ids.push_back(v.id());
  manifest.backend = describe(cfg);
  manifest.started_at = utc_now_iso8601();

  // Build every prompt up front so template errors surface before any traffic.
  std::vector<Prompt> pending;
  std::vector<std::string> errors;
  for (const auto& s : dataset) {
    for (const auto& v : variants) {
      if (store.contains({s.statement_id, v.id(), cfg.model_name})) continue;
      try {
        pending.push_back(build_prompt(s, v, cb));
      } catch (const ValidationError& e) {
        for (const auto& msg : e.violations()) errors.push_back(msg);
      }
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  store.write_manifest(manifest);

  SlidingWindowLimiter own_limiter(cfg.requests_per_minute);
  SlidingWindowLimiter& limiter = opts.limiter ? *opts.limiter : own_limiter;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> appended{0};
  std::mutex callback_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    while (!abort.load() && !opts.stop.stop_requested()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      limiter.acquire();
      try {
        auto rec = score_prompt(pending[i], backend, cfg, opts.sleep);
        store.append(rec);
        appended.fetch_add(1);
        if (opts.on_record) {
          std::lock_guard lock(callback_mu);
          opts.on_record(rec);
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_concurrency), pending.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  }

  manifest.new_records = appended.load();
  manifest.counts = store.counts();
  if (failure) {
    try {
      store.write_manifest(manifest);
    } catch (...) {
    }
    std::rethrow_exception(failure);
  }
  // An interrupted run keeps finished_at null until a resume completes it.
  if (manifest.new_records == pending.size()) manifest.finished_at = utc_now_iso8601();
  store.write_manifest(manifest);
  return manifest;
}

}  // namespace bipolar
