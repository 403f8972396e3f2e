#pragma once

// Deterministic report bundle: CSV/JSON metric tables plus standalone SVG
// charts. Nothing time-dependent is written; manifest.json carries input
// and file hashes instead.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bipolar/csv.hpp"
#include "bipolar/hash.hpp"
#include "bipolar/metrics.hpp"
#include "bipolar/svg.hpp"
#include "json.hpp"

namespace bipolar {

inline std::string safe_file_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

// ---- radar ------------------------------------------------------------------

// Two panels (positive, negative); one axis per category on a 0-100 scale
// and one polygon per entity.
inline std::string emit_radar(const CellStats& s, const std::string& model, const std::string& variant) {
  const auto& cats = s.axes.categories;
  if (cats.size() < 3)
    throw MetricError("radar needs at least 3 categories, got " + std::to_string(cats.size()));
  constexpr double kRadius = 190, kPanel = 520, kTop = 60;
  svg::Document doc(2 * kPanel, kPanel + kTop);
  doc.text(kPanel, 28, "Mean sentiment per category: " + model + " (" + variant + ")", "middle", 16);
  const std::size_t k = cats.size();
  for (std::size_t panel = 0; panel < 2; ++panel) {
    const Polarity pol = kPolarities[panel];
    const double cx = kPanel * panel + kPanel / 2, cy = kTop + kPanel / 2;
    doc.raw("<g class=\"panel\" data-polarity=\"" + std::string(to_string(pol)) + "\">");
    doc.text(cx, kTop + 8, std::string(to_string(pol)) + " statements", "middle", 14);
    for (int ring = 1; ring <= 4; ++ring) {
      const double r = kRadius * ring / 4;
      doc.raw("<circle cx=\"" + svg::num(cx) + "\" cy=\"" + svg::num(cy) + "\" r=\"" + svg::num(r) +
              "\" fill=\"none\" stroke=\"#dddddd\" stroke-width=\"1.00\"/>");
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double ang = -M_PI / 2 + 2 * M_PI * static_cast<double>(i) / static_cast<double>(k);
      const double ex = cx + kRadius * std::cos(ang), ey = cy + kRadius * std::sin(ang);
      doc.line(cx, cy, ex, ey, "#bbbbbb", 1, "class=\"axis\" data-category=\"" + svg::escape(cats[i]) + "\"");
      doc.text(cx + (kRadius + 16) * std::cos(ang), cy + (kRadius + 16) * std::sin(ang) + 4, cats[i], "middle", 10);
    }
    const std::string entities[2] = {s.axes.entity_a, s.axes.entity_b};
    const svg::Rgb colors[2] = {svg::kEntityA, svg::kEntityB};
    for (std::size_t e = 0; e < 2; ++e) {
      std::string pts, vertices;
      for (std::size_t i = 0; i < k; ++i) {
        const auto it = s.cells.find({model, variant, entities[e], cats[i], pol});
        const std::optional<double> mean = it == s.cells.end() ? std::nullopt : it->second.mean;
        const double r = kRadius * mean.value_or(0) / 100.0;
        const double ang = -M_PI / 2 + 2 * M_PI * static_cast<double>(i) / static_cast<double>(k);
        const double x = cx + r * std::cos(ang), y = cy + r * std::sin(ang);
        if (!pts.empty()) pts += ' ';
        pts += svg::num(x) + "," + svg::num(y);
        if (mean)
          vertices += "<circle cx=\"" + svg::num(x) + "\" cy=\"" + svg::num(y) + "\" r=\"2.50\" fill=\"" +
                      colors[e].hex() + "\" data-category=\"" + svg::escape(cats[i]) + "\" data-value=\"" +
                      svg::num(*mean) + "\"><title>" + svg::escape(entities[e] + " " + cats[i] + ": " + svg::num(*mean)) +
                      "</title></circle>\n";
      }
      doc.raw("<polygon class=\"entity\" data-entity=\"" + svg::escape(entities[e]) + "\" points=\"" + pts +
              "\" fill=\"" + colors[e].hex() + "\" fill-opacity=\"0.15\" stroke=\"" + colors[e].hex() +
              "\" stroke-width=\"2.00\"/>");
      doc.raw(vertices);
    }
    doc.raw("</g>");
  }
  doc.rect(20, kPanel + kTop - 30, 12, 12, svg::kEntityA.hex());
  doc.text(38, kPanel + kTop - 20, s.axes.entity_a);
  doc.rect(120, kPanel + kTop - 30, 12, 12, svg::kEntityB.hex());
  doc.text(138, kPanel + kTop - 20, s.axes.entity_b);
  return doc.str();
}

// ---- scatter ----------------------------------------------------------------

// One point per (model, category): x = mean toward entity_b, y = mean toward
// entity_a. Points above the diagonal favour entity_a.
inline std::string emit_scatter(const CellStats& s, Polarity pol, const std::string& variant) {
  constexpr double kLeft = 70, kTop = 50, kSize = 480;
  const double legend_x = kLeft + kSize + 30;
  svg::Document doc(legend_x + 220, kTop + kSize + 70);
  auto px = [&](double v) { return kLeft + kSize * v / 100.0; };
  auto py = [&](double v) { return kTop + kSize * (1.0 - v / 100.0); };
  doc.text((kLeft + kSize) / 2 + 20, 28, std::string(to_string(pol)) + " statements (" + variant + ")", "middle", 16);
  doc.rect(kLeft, kTop, kSize, kSize, "none", "stroke=\"#000000\" class=\"frame\"");
  for (int t = 0; t <= 100; t += 20) {
    doc.line(px(t), kTop + kSize, px(t), kTop + kSize + 5, "#000000");
    doc.text(px(t), kTop + kSize + 18, std::to_string(t), "middle", 10);
    doc.line(kLeft - 5, py(t), kLeft, py(t), "#000000");
    doc.text(kLeft - 8, py(t) + 4, std::to_string(t), "end", 10);
  }
  doc.line(px(0), py(0), px(100), py(100), "#888888", 1, "class=\"diagonal\" stroke-dasharray=\"4 3\"");
  doc.text(kLeft + kSize / 2, kTop + kSize + 40, "mean sentiment toward " + s.axes.entity_b, "middle", 12);
  doc.text(24, kTop + kSize / 2, "mean sentiment toward " + s.axes.entity_a, "middle", 12,
           "transform=\"rotate(-90 24 " + svg::num(kTop + kSize / 2) + ")\"");

  const auto& cats = s.axes.categories;
  for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
    const auto color = svg::kModelColors[mi % std::size(svg::kModelColors)];
    for (std::size_t ci = 0; ci < cats.size(); ++ci) {
      auto a = s.cells.find({s.models[mi], variant, s.axes.entity_a, cats[ci], pol});
      auto b = s.cells.find({s.models[mi], variant, s.axes.entity_b, cats[ci], pol});
      if (a == s.cells.end() || b == s.cells.end() || !a->second.mean || !b->second.mean) continue;
      const double x = *b->second.mean, y = *a->second.mean;
      doc.raw(svg::marker(ci, px(x), py(y), 5, color,
                          "class=\"point\" data-model=\"" + svg::escape(s.models[mi]) + "\" data-category=\"" +
                              svg::escape(cats[ci]) + "\" data-x=\"" + svg::num(x) + "\" data-y=\"" + svg::num(y) + "\""));
    }
  }
  double ly = kTop + 10;
  for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
    doc.rect(legend_x, ly - 9, 10, 10, svg::kModelColors[mi % std::size(svg::kModelColors)]);
    doc.text(legend_x + 16, ly, s.models[mi], "start", 11);
    ly += 16;
  }
  ly += 8;
  for (std::size_t ci = 0; ci < cats.size(); ++ci) {
    doc.raw(svg::marker(ci, legend_x + 5, ly - 4, 5, "#ffffff", "class=\"legend-marker\""));
    doc.text(legend_x + 16, ly, cats[ci], "start", 11);
    ly += 16;
  }
  return doc.str();
}

// ---- heatmap ----------------------------------------------------------------

struct HeatmapOutput {
  std::string svg;
  std::string csv;
};

inline std::string heatmap_csv_header() { return csv::row({"variant", "polarity", "model", "category", "bias"}); }

inline std::string heatmap_csv_rows(const BiasGrid& g, Polarity pol) {
  std::string out;
  for (const auto& m : g.models)
    for (const auto& c : g.categories)
      if (auto v = g.get(c, m, pol))
        out += csv::row({g.variant, std::string(to_string(pol)), m, c, format_double(*v)});
  return out;
}

// Symmetric diverging scale around 0; colour intensity is |bias| / max |bias|.
inline svg::Rgb heatmap_color(double value, double limit) {
  if (limit <= 0 || value == 0) return svg::kMid;
  const double t = std::min(1.0, std::abs(value) / limit);
  return svg::lerp(svg::kMid, value > 0 ? svg::kEntityB : svg::kEntityA, t);
}

inline HeatmapOutput emit_heatmap(const BiasGrid& g, Polarity pol, const std::string& orientation) {
  constexpr double kCell = 56, kLeft = 150, kTop = 140;
  const double width = kLeft + kCell * static_cast<double>(g.categories.size()) + 30;
  const double height = kTop + kCell * static_cast<double>(g.models.size()) + 40;
  svg::Document doc(width, height);
  doc.text(width / 2, 26, "Bias (" + orientation + "), " + std::string(to_string(pol)) + " statements", "middle", 15);
  double limit = 0;
  for (const auto& m : g.models)
    for (const auto& c : g.categories)
      if (auto v = g.get(c, m, pol)) limit = std::max(limit, std::abs(*v));
  for (std::size_t ci = 0; ci < g.categories.size(); ++ci) {
    const double x = kLeft + kCell * (static_cast<double>(ci) + 0.5);
    doc.text(x, kTop - 8, g.categories[ci], "start", 10,
             "transform=\"rotate(-50 " + svg::num(x) + " " + svg::num(kTop - 8) + ")\"");
  }
  for (std::size_t mi = 0; mi < g.models.size(); ++mi) {
    const double y = kTop + kCell * static_cast<double>(mi);
    doc.text(kLeft - 8, y + kCell / 2 + 4, g.models[mi], "end", 11);
    for (std::size_t ci = 0; ci < g.categories.size(); ++ci) {
      const double x = kLeft + kCell * static_cast<double>(ci);
      const auto v = g.get(g.categories[ci], g.models[mi], pol);
      const std::string attrs = "class=\"cell\" data-model=\"" + svg::escape(g.models[mi]) + "\" data-category=\"" +
                                svg::escape(g.categories[ci]) + "\"";
      if (!v) {
        doc.rect(x, y, kCell, kCell, "#cccccc", attrs + " data-missing=\"true\"");
        doc.text(x + kCell / 2, y + kCell / 2 + 4, "n/a", "middle", 10);
        continue;
      }
      doc.rect(x, y, kCell, kCell, heatmap_color(*v, limit).hex(), attrs + " data-value=\"" + svg::num(*v) + "\"");
      doc.text(x + kCell / 2, y + kCell / 2 + 4, svg::label(*v), "middle", 11, "class=\"value\"");
    }
  }
  return {doc.str(), heatmap_csv_header() + heatmap_csv_rows(g, pol)};
}

// ---- shift ------------------------------------------------------------------

// Four panels (entity x polarity) with the baseline prompt drawn at 0 and
// one arrow per variant ending at its mean shift.
inline std::string emit_shift(const std::vector<ShiftResult>& shifts, const std::string& model, const Axes& axes,
                              const std::vector<std::string>& variants) {
  constexpr double kPanelW = 460, kPanelH = 260, kTop = 50;
  svg::Document doc(2 * kPanelW, 2 * kPanelH + kTop + 50);
  doc.text(kPanelW, 28, "Prompt-induced shift: " + model, "middle", 16);
  double range = 10;
  for (const auto& r : shifts)
    if (r.model == model) range = std::max(range, std::ceil(std::abs(r.mean_shift) / 5.0) * 5.0);
  std::set<std::string> missing;
  const std::string entities[2] = {axes.entity_a, axes.entity_b};
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t p = 0; p < 2; ++p) {
      const Polarity pol = kPolarities[p];
      const double x0 = kPanelW * static_cast<double>(p), y0 = kTop + kPanelH * static_cast<double>(e);
      const double plot_top = y0 + 30, plot_h = kPanelH - 70, left = x0 + 50, plot_w = kPanelW - 80;
      auto py = [&](double v) { return plot_top + plot_h * (range - v) / (2 * range); };
      doc.raw("<g class=\"panel\" data-entity=\"" + svg::escape(entities[e]) + "\" data-polarity=\"" +
              std::string(to_string(pol)) + "\">");
      doc.text(x0 + kPanelW / 2, y0 + 18, entities[e] + " " + std::string(to_string(pol)), "middle", 13);
      doc.line(left, plot_top, left, plot_top + plot_h, "#000000");
      for (double t : {-range, 0.0, range}) doc.text(left - 6, py(t) + 4, svg::num(t), "end", 10);
      doc.line(left, py(0), left + plot_w, py(0), svg::kBaseline.hex(), 2, "class=\"baseline\"");
      const double slot = variants.empty() ? plot_w : plot_w / static_cast<double>(variants.size());
      for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const double x = left + slot * (static_cast<double>(vi) + 0.5);
        doc.text(x, plot_top + plot_h + 16, variants[vi], "middle", 9);
        const ShiftResult* found = nullptr;
        for (const auto& r : shifts)
          if (r.model == model && r.variant == variants[vi] && r.entity == entities[e] && r.polarity == pol) found = &r;
        if (!found) {
          missing.insert(variants[vi]);
          continue;
        }
        const double y = py(found->mean_shift);
        const std::string color = found->mean_shift >= 0 ? "#2ca02c" : "#d62728";
        doc.line(x, py(0), x, y, color, 2, "class=\"arrow\"");
        doc.raw("<circle class=\"shift\" cx=\"" + svg::num(x) + "\" cy=\"" + svg::num(y) + "\" r=\"4.00\" fill=\"" +
                color + "\" data-variant=\"" + svg::escape(variants[vi]) + "\" data-shift=\"" +
                svg::num(found->mean_shift) + "\"/>");
      }
      doc.raw("</g>");
    }
  double ly = 2 * kPanelH + kTop + 20;
  doc.line(20, ly - 4, 50, ly - 4, svg::kBaseline.hex(), 2);
  doc.text(56, ly, "baseline prompt", "start", 11);
  if (!missing.empty()) {
    std::string note = "not available:";
    for (const auto& m : missing) note += " " + m;
    doc.text(200, ly, note, "start", 11, "class=\"missing-note\"");
  }
  return doc.str();
}

// ---- bundle -----------------------------------------------------------------

struct ReportInputs {
  const ScoreTable* table = nullptr;
  Axes axes;
  Weighting weighting = Weighting::category;
  std::string dataset_sha256;
  std::string codebook_sha256;
};

struct ReportBundle {
  std::map<std::string, std::string> files;  // relative name -> content
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kRankingTopK = 3;
inline constexpr std::size_t kDivergenceTopK = 10;

inline nlohmann::ordered_json ranked_json(const std::vector<RankedCategory>& v, std::size_t k) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < v.size() && i < k; ++i) {
    nlohmann::ordered_json e;
    e["category"] = v[i].category;
    e["value"] = v[i].value;
    arr.push_back(e);
  }
  return arr;
}

inline ReportBundle build_report(const ReportInputs& in) {
  if (!in.table) throw Error("build_report: no score table");
  const ScoreTable& t = *in.table;
  const auto models = t.models();
  if (models.empty()) throw MetricError("report: score table has no models");

  ReportBundle out;
  const auto stats = cell_means(t, in.axes);
  const std::string baseline = choose_baseline(stats.variants);
  const std::string orientation = in.axes.entity_b + " - " + in.axes.entity_a;

  // means.csv
  {
    std::string csv_text = csv::row({"model", "variant", "entity", "category", "polarity", "n", "mean"});
    for (const auto& [k, c] : stats.cells)
      csv_text += csv::row({k.model, k.variant, k.entity, k.category, std::string(to_string(k.polarity)),
                            std::to_string(c.n), c.mean ? format_double(*c.mean) : ""});
    out.files["means.csv"] = csv_text;
  }

  // js_divergence.csv
  const auto divergences = divergence_table(stats, baseline);
  {
    std::string csv_text = csv::row({"variant", "model", "polarity", "category", "js", "rank"});
    for (const auto& d : divergences)
      csv_text += csv::row({baseline, d.model, std::string(to_string(d.polarity)), d.category, format_double(d.js),
                            std::to_string(d.rank)});
    out.files["js_divergence.csv"] = csv_text;
  }

  // bias_heatmap.csv over every variant; charts use the baseline.
  const auto grid = bias_grid(stats, baseline);
  {
    std::string csv_text = heatmap_csv_header();
    for (const auto& v : stats.variants) {
      const auto g = bias_grid(stats, v);
      for (auto p : kPolarities) csv_text += heatmap_csv_rows(g, p);
    }
    out.files["bias_heatmap.csv"] = csv_text;
  }
  for (auto p : kPolarities)
    out.files["heatmap_" + std::string(to_string(p)) + ".svg"] = emit_heatmap(grid, p, orientation).svg;

  // rankings.json
  {
    const auto rankings = category_rankings(grid);
    nlohmann::ordered_json j;
    j["variant"] = baseline;
    j["orientation"] = orientation;
    j["top_k"] = kRankingTopK;
    for (auto p : kPolarities) {
      const auto& r = rankings.for_polarity(p);
      nlohmann::ordered_json pj;
      pj["least_biased"] = ranked_json(r.least_biased, kRankingTopK);
      pj["most_biased"] = ranked_json(r.most_biased, kRankingTopK);
      pj["consensual"] = ranked_json(r.consensual, kRankingTopK);
      pj["controversial"] = ranked_json(r.controversial, kRankingTopK);
      j[std::string(to_string(p))] = pj;
    }
    nlohmann::ordered_json top = nlohmann::ordered_json::object();
    for (const auto& m : stats.models) {
      nlohmann::ordered_json mj;
      for (auto p : kPolarities) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& d : divergences)
          if (d.model == m && d.polarity == p && d.rank <= kDivergenceTopK) {
            nlohmann::ordered_json e;
            e["category"] = d.category;
            e["js"] = d.js;
            arr.push_back(e);
          }
        mj[std::string(to_string(p))] = arr;
      }
      top[m] = mj;
    }
    j["js_top10"] = top;
    out.files["rankings.json"] = j.dump(2) + "\n";
  }

  // aggregate.csv: grand means per entity and total absolute bias per model/polarity.
  {
    const auto grand = aggregate_summary(stats, baseline, in.weighting);
    std::string csv_text = csv::row({"model", "polarity", "mean_" + in.axes.entity_a, "mean_" + in.axes.entity_b,
                                     "total_absolute_bias"});
    for (const auto& m : grid.models)
      for (auto p : kPolarities) {
        std::string ma, mb;
        for (const auto& g : grand)
          if (g.model == m && g.polarity == p && g.mean)
            (g.entity == in.axes.entity_a ? ma : mb) = format_double(*g.mean);
        csv_text += csv::row({m, std::string(to_string(p)), ma, mb, format_double(total_absolute_bias(grid, m, p))});
      }
    out.files["aggregate.csv"] = csv_text;
  }

  // pairwise.csv
  {
    std::string csv_text = csv::row({"category", "model_i", "model_j", "combined_i", "combined_j", "difference"});
    if (grid.models.size() >= 2)
      for (const auto& d : pairwise_model_differences(grid))
        csv_text += csv::row({d.category, d.model_i, d.model_j, format_double(d.combined_i),
                              format_double(d.combined_j), format_double(d.difference)});
    out.files["pairwise.csv"] = csv_text;
  }

  // shift.csv
  std::vector<ShiftResult> shifts;
  const bool has_vanilla = stats.has_variant(kVanillaVariant);
  if (has_vanilla) {
    shifts = shift_table(t, in.axes, std::string(kVanillaVariant));
  } else {
    out.warnings.push_back("no vanilla variant in the score table; shift.csv is empty");
  }
  {
    std::string csv_text = csv::row({"model", "variant", "entity", "polarity", "mean_shift", "n_pairs", "n_dropped"});
    for (const auto& r : shifts)
      csv_text += csv::row({r.model, r.variant, r.entity, std::string(to_string(r.polarity)), format_double(r.mean_shift),
                            std::to_string(r.n_pairs), std::to_string(r.n_dropped)});
    out.files["shift.csv"] = csv_text;
  }

  std::vector<std::string> shift_variants;
  for (const auto& v : stats.variants)
    if (v != kVanillaVariant) shift_variants.push_back(v);
  for (const auto& m : stats.models) {
    const auto name = safe_file_component(m);
    if (in.axes.categories.size() >= 3) {
      out.files["radar_" + name + ".svg"] = emit_radar(stats, m, baseline);
    }
    if (has_vanilla && !shift_variants.empty()) out.files["shift_" + name + ".svg"] = emit_shift(shifts, m, in.axes, shift_variants);
  }
  if (in.axes.categories.size() < 3)
    out.warnings.push_back("fewer than 3 categories; radar charts skipped");
  for (auto p : kPolarities) out.files["scatter_" + std::string(to_string(p)) + ".svg"] = emit_scatter(stats, p, baseline);

  // manifest.json last, hashing everything above.
  nlohmann::ordered_json man;
  man["tool_version"] = kToolVersion;
  man["orientation"] = orientation;
  man["baseline_variant"] = baseline;
  man["weighting"] = in.weighting == Weighting::category ? "category" : "statement";
  nlohmann::ordered_json inputs;
  inputs["dataset_sha256"] = in.dataset_sha256;
  inputs["codebook_sha256"] = in.codebook_sha256;
  inputs["score_table_sha256"] = sha256_hex(t.to_csv());
  man["inputs"] = inputs;
  man["models"] = models;
  man["variants"] = stats.variants;
  auto ex = nlohmann::ordered_json::array();
  for (const auto& [mv, c] : t.exclusions) {
    nlohmann::ordered_json e;
    e["model"] = mv.first;
    e["variant"] = mv.second;
    e["malformed_excluded"] = c.malformed_excluded;
    e["transport_failed"] = c.transport_failed;
    ex.push_back(e);
  }
  man["exclusions"] = ex;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (const auto& [name, content] : out.files) files[name] = sha256_hex(content);
  man["files"] = files;
  out.files["manifest.json"] = man.dump(2) + "\n";
  return out;
}

inline void write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : bundle.files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write " + (dir / name).string());
  }
}

}  // namespace bipolar
