#pragma once

// generate -> run -> analyze pipeline with files as boundaries.
//
// Exit codes:
//   0  success (malformed exclusions are protocol-conformant, not errors)
//   1  unexpected I/O or internal error
//   2  parse, validation or configuration error (including orphan/duplicate
//      responses during analysis)
//   3  some samples still transport_failed after retries; the store is valid

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bipolar/collection.hpp"
#include "bipolar/http_backend.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/promptgen.hpp"
#include "bipolar/report.hpp"
#include "bipolar/runstore.hpp"

namespace bipolar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitTransport = 3;

struct GenerateArgs {
  std::string codebook;
  std::string roles;
  std::string frames;
  std::string languages;
  std::string out;
};

struct RunArgs {
  std::string dataset;
  std::string codebook;
  std::string backend;
  std::string variants = "vanilla";
  std::string store;
  bool resume = false;
};

struct AnalyzeArgs {
  std::string dataset;
  std::string codebook;
  std::vector<std::string> stores;
  std::string out;
  std::string weighting = "category";
};

inline void print_violations(const ValidationError& e, std::ostream& err) {
  err << "validation failed:\n";
  for (const auto& v : e.violations()) err << "  - " << v << "\n";
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const auto cb = load_codebook(a.codebook);
  std::set<Role> roles{cb.default_role};
  std::set<Frame> frames = cb.default_frames;
  std::set<std::string> languages{cb.base_language};
  std::vector<std::string> bad;
  if (!a.roles.empty()) {
    roles.clear();
    for (const auto& r : split_list(a.roles)) {
      if (auto v = parse_role(r)) roles.insert(*v);
      else bad.push_back("--roles: unknown role '" + r + "'");
    }
  }
  if (!a.frames.empty()) {
    frames.clear();
    for (const auto& f : split_list(a.frames)) {
      if (auto v = parse_frame(f)) frames.insert(*v);
      else bad.push_back("--frames: unknown frame '" + f + "'");
    }
  }
  if (!a.languages.empty()) {
    auto l = split_list(a.languages);
    languages = {l.begin(), l.end()};
  }
  if (roles.empty() || frames.empty() || languages.empty()) bad.push_back("roles, frames and languages must be non-empty");
  if (!bad.empty()) throw ValidationError(std::move(bad));

  const auto records = generate_dataset(cb, roles, frames, languages);
  const auto text = dataset_to_jsonl(records);
  {
    const std::filesystem::path out_path(a.out);
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
      err << "cannot write " << a.out << "\n";
      return kExitError;
    }
  }
  std::map<std::string, std::size_t> per_entity;
  std::map<std::string, std::size_t> per_polarity;
  for (const auto& r : records) {
    ++per_entity[r.entity_id];
    ++per_polarity[std::string(to_string(r.polarity))];
  }
  out << "wrote " << records.size() << " statements to " << a.out << "\n";
  for (const auto& [e, n] : per_entity) out << "  entity " << e << ": " << n << "\n";
  for (const auto& [p, n] : per_polarity) out << "  " << p << ": " << n << "\n";
  out << "  balanced: " << (per_entity.size() == 2 && per_entity.begin()->second == per_entity.rbegin()->second ? "yes" : "no")
      << "\n";
  return kExitOk;
}

inline int cmd_run(const RunArgs& a, std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  const auto cb = load_codebook(a.codebook);
  const auto dataset = load_dataset(a.dataset);
  auto cfg = load_backend_config(a.backend);
  if (seed) cfg.mock.seed = *seed;
  const auto variants = enumerate_variants(cb, split_list(a.variants));
  if (variants.empty()) throw ValidationError({"--variants: no variants requested"});

  RunStore store(a.store);
  if (store.size() > 0 && !a.resume) {
    err << "store " << a.store << " already holds " << store.size() << " responses; pass --resume to continue it\n";
    return kExitInvalid;
  }
  const auto dataset_hash = sha256_hex(dataset_to_jsonl(dataset));
  if (auto prev = store.read_manifest(); prev && store.size() > 0 && prev->dataset_sha256 != dataset_hash) {
    err << "store " << a.store << " was collected for a different dataset (" << prev->dataset_sha256 << ")\n";
    return kExitInvalid;
  }

  auto backend = make_backend(cfg, dataset, cb);
  CollectionOptions opts;
  opts.codebook_sha256 = sha256_file(a.codebook);
  const auto manifest = run_collection(dataset, variants, cb, *backend, cfg, store, opts);
  out << "model " << cfg.model_name << ": new=" << manifest.new_records << " ok=" << manifest.counts.ok
      << " excluded=" << manifest.counts.malformed_excluded << " failed=" << manifest.counts.transport_failed << "\n";
  return manifest.counts.transport_failed > 0 ? kExitTransport : kExitOk;
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const auto cb = load_codebook(a.codebook);
  const auto dataset = load_dataset(a.dataset);
  Weighting w;
  if (a.weighting == "category") w = Weighting::category;
  else if (a.weighting == "statement") w = Weighting::statement;
  else throw ValidationError({"--weighting: expected category or statement, got '" + a.weighting + "'"});

  std::vector<std::vector<ResponseRecord>> stores;
  for (const auto& s : a.stores) stores.push_back(RunStore::read_responses(s));
  const auto table = assemble(dataset, stores);

  ReportInputs in;
  in.table = &table;
  in.axes = Axes::from(cb);
  in.weighting = w;
  in.dataset_sha256 = sha256_file(a.dataset);
  in.codebook_sha256 = sha256_file(a.codebook);
  const auto bundle = build_report(in);
  write_report(bundle, a.out);
  for (const auto& wmsg : bundle.warnings) err << "warning: " << wmsg << "\n";
  out << "wrote " << bundle.files.size() << " files to " << a.out << " (" << table.rows.size() << " scored rows)\n";
  return kExitOk;
}

// Entry point shared by the binary and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Polarity-balanced LLM bias measurement harness"};
  app.name("bipolar");
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for the mock backend (overrides the config file)");

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Expand a codebook into a statement dataset (JSONL)");
  gen->add_option("--codebook", g.codebook, "Codebook file")->required();
  gen->add_option("--roles", g.roles, "Comma-separated roles (subject,object)");
  gen->add_option("--frames", g.frames, "Comma-separated frames (past,present,future)");
  gen->add_option("--languages", g.languages, "Comma-separated language codes");
  gen->add_option("--out", g.out, "Output JSONL path")->required();

  RunArgs r;
  auto* run_cmd = app.add_subcommand("run", "Score a dataset with one backend into a run store");
  run_cmd->add_option("--dataset", r.dataset, "Dataset JSONL")->required();
  run_cmd->add_option("--codebook", r.codebook, "Codebook the dataset was generated from")->required();
  run_cmd->add_option("--backend", r.backend, "Backend config file")->required();
  run_cmd->add_option("--variants", r.variants, "Comma-separated variant ids or 'all'");
  run_cmd->add_option("--store", r.store, "Run store directory")->required();
  run_cmd->add_flag("--resume", r.resume, "Continue a partially collected store");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Compute metrics and write the report bundle");
  analyze->add_option("--dataset", an.dataset, "Dataset JSONL")->required();
  analyze->add_option("--codebook", an.codebook, "Codebook file")->required();
  analyze->add_option("--stores", an.stores, "Run store directories")->required()->expected(1, -1);
  analyze->add_option("--out", an.out, "Report output directory")->required();
  analyze->add_option("--weighting", an.weighting, "Aggregate weighting: category or statement");

  std::vector<const char*> argv{"bipolar"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitInvalid;
  }

  try {
    if (*gen) return cmd_generate(g, out, err);
    if (*run_cmd) return cmd_run(r, seed, out, err);
    if (*analyze) return cmd_analyze(an, out, err);
  } catch (const ValidationError& e) {
    print_violations(e, err);
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const StoreError& e) {
    err << "store error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace bipolar::cli
