#pragma once

// Bias metric suite over a ScoreTable: per-cell means and histograms,
// Jensen-Shannon divergence between entities, bias (second entity minus
// first), cross-model consensus and absolute bias, category rankings,
// pairwise model differences, grand means and prompt-induced shift.
//
// Every function is pure. Summation runs in ascending statement_id order
// (the ScoreTable row order) so results do not depend on evaluation order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bipolar/common.hpp"
#include "bipolar/ontology.hpp"
#include "bipolar/runstore.hpp"

namespace bipolar {

inline constexpr std::size_t kScoreBins = 21;
inline constexpr std::string_view kVanillaVariant = "vanilla";

// Histogram over {0, 5, ..., 100}. Off-grid scores go to the nearest bin,
// halves rounding up.
struct ScoreDistribution {
  std::array<std::uint64_t, kScoreBins> bins{};
  std::uint64_t n = 0;

  static std::size_t bin_of(double score) {
    if (!(score >= 0.0 && score <= 100.0))
      throw MetricError("score " + format_double(score) + " outside [0, 100]");
    return static_cast<std::size_t>(std::floor(score / 5.0 + 0.5));
  }

  void add(double score) {
    ++bins[bin_of(score)];
    ++n;
  }

  std::array<double, kScoreBins> probabilities() const {
    std::array<double, kScoreBins> p{};
    if (n == 0) return p;
    for (std::size_t i = 0; i < kScoreBins; ++i) p[i] = static_cast<double>(bins[i]) / static_cast<double>(n);
    return p;
  }

  bool operator==(const ScoreDistribution&) const = default;
};

// JS divergence in bits, so the result lies in [0, 1]. Zero-probability terms
// contribute nothing; fully disjoint supports give exactly 1.
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw MetricError("js_divergence: distributions differ in length");
  bool overlap = false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0 && q[i] > 0) overlap = true;
  if (!overlap) return 1.0;
  double kl_p = 0, kl_q = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * (kl_p + kl_q), 0.0, 1.0);
}

inline double js_divergence(const ScoreDistribution& p, const ScoreDistribution& q) {
  if (p.n == 0 || q.n == 0) throw MetricError("js_divergence: empty distribution");
  if (p.bins == q.bins) return 0.0;
  const auto pp = p.probabilities();
  const auto qq = q.probabilities();
  return js_divergence(std::span<const double>(pp), std::span<const double>(qq));
}

// Entity order and category order for an analysis; the bias orientation is
// entity_b minus entity_a.
struct Axes {
  std::string entity_a;
  std::string entity_b;
  std::vector<std::string> categories;

  static Axes from(const Codebook& cb) { return {cb.entity_a().id, cb.entity_b().id, cb.category_ids()}; }

  Axes swapped() const { return {entity_b, entity_a, categories}; }
};

struct CellKey {
  std::string model;
  std::string variant;
  std::string entity;
  std::string category;
  Polarity polarity = Polarity::positive;

  auto operator<=>(const CellKey&) const = default;
};

struct CellStat {
  CellKey key;
  std::size_t n = 0;
  std::int64_t sum = 0;
  std::optional<double> mean;
  ScoreDistribution distribution;

  bool operator==(const CellStat&) const = default;
};

// Full grid of cells: every observed (model, variant) times both entities,
// every category and both polarities. Empty cells have n = 0 and no mean.
struct CellStats {
  Axes axes;
  std::vector<std::string> models;
  std::vector<std::string> variants;
  std::map<CellKey, CellStat> cells;

  const CellStat& at(const std::string& model, const std::string& variant, const std::string& entity,
                     const std::string& category, Polarity polarity) const {
    auto it = cells.find({model, variant, entity, category, polarity});
    if (it == cells.end())
      throw MetricError("no cell for model=" + model + " variant=" + variant + " entity=" + entity +
                        " category=" + category);
    return it->second;
  }

  bool has_variant(std::string_view v) const {
    return std::find(variants.begin(), variants.end(), v) != variants.end();
  }

  std::vector<CellStat> list() const {
    std::vector<CellStat> out;
    for (const auto& [_, c] : cells) out.push_back(c);
    return out;
  }
};

inline CellStats cell_means(const ScoreTable& t, const Axes& axes) {
  CellStats s;
  s.axes = axes;
  s.models = t.models();
  s.variants = t.variants();
  std::set<ModelVariant> pairs;
  for (const auto& [mv, _] : t.exclusions) pairs.insert(mv);
  for (const auto& r : t.rows) pairs.insert({r.model_name, r.variant_id});
  for (const auto& [model, variant] : pairs)
    for (const auto& entity : {axes.entity_a, axes.entity_b})
      for (const auto& cat : axes.categories)
        for (auto pol : kPolarities) {
          CellKey k{model, variant, entity, cat, pol};
          s.cells.emplace(k, CellStat{k, 0, 0, std::nullopt, {}});
        }
  for (const auto& r : t.rows) {
    auto it = s.cells.find({r.model_name, r.variant_id, r.entity_id, r.category_id, r.polarity});
    if (it == s.cells.end()) continue;  // entity or category outside the axes
    auto& c = it->second;
    ++c.n;
    c.sum += r.score;
    c.distribution.add(r.score);
  }
  for (auto& [_, c] : s.cells)
    if (c.n > 0) c.mean = static_cast<double>(c.sum) / static_cast<double>(c.n);
  return s;
}

inline CellStats cell_means(const ScoreTable& t, const Codebook& cb) { return cell_means(t, Axes::from(cb)); }

inline std::string choose_baseline(const std::vector<std::string>& variants) {
  if (std::find(variants.begin(), variants.end(), kVanillaVariant) != variants.end())
    return std::string(kVanillaVariant);
  return variants.empty() ? std::string(kVanillaVariant) : variants.front();
}

// ---- divergence -------------------------------------------------------------

inline double entity_divergence(const CellStats& s, const std::string& model, const std::string& category,
                                Polarity polarity, const std::string& variant = std::string(kVanillaVariant)) {
  const auto& a = s.at(model, variant, s.axes.entity_a, category, polarity);
  const auto& b = s.at(model, variant, s.axes.entity_b, category, polarity);
  if (a.n == 0 || b.n == 0)
    throw MetricError("entity_divergence: empty cell for model=" + model + " category=" + category +
                      " polarity=" + std::string(to_string(polarity)));
  return js_divergence(a.distribution, b.distribution);
}

struct DivergenceRow {
  std::string model;
  Polarity polarity = Polarity::positive;
  std::string category;
  double js = 0;
  std::size_t rank = 0;  // 1 = most divergent within (model, polarity)
};

// All computable (model, category, polarity) divergences, ranked within
// (model, polarity) by decreasing JS; ties go to the smaller category id.
inline std::vector<DivergenceRow> divergence_table(const CellStats& s, const std::string& variant) {
  std::vector<DivergenceRow> out;
  for (const auto& model : s.models)
    for (auto pol : kPolarities) {
      std::vector<DivergenceRow> group;
      for (const auto& cat : s.axes.categories) {
        auto ka = s.cells.find({model, variant, s.axes.entity_a, cat, pol});
        auto kb = s.cells.find({model, variant, s.axes.entity_b, cat, pol});
        if (ka == s.cells.end() || kb == s.cells.end() || ka->second.n == 0 || kb->second.n == 0) continue;
        group.push_back({model, pol, cat, js_divergence(ka->second.distribution, kb->second.distribution), 0});
      }
      std::sort(group.begin(), group.end(), [](const DivergenceRow& x, const DivergenceRow& y) {
        if (x.js != y.js) return x.js > y.js;
        return x.category < y.category;
      });
      for (std::size_t i = 0; i < group.size(); ++i) group[i].rank = i + 1;
      out.insert(out.end(), group.begin(), group.end());
    }
  return out;
}

// ---- bias -------------------------------------------------------------------

struct BiasCell {
  std::string category;
  std::string model;
  Polarity polarity = Polarity::positive;
  double value = 0;
};

inline BiasCell bias(const CellStats& s, const std::string& category, const std::string& model,
                     Polarity polarity, const std::string& variant = std::string(kVanillaVariant)) {
  const auto& a = s.at(model, variant, s.axes.entity_a, category, polarity);
  const auto& b = s.at(model, variant, s.axes.entity_b, category, polarity);
  if (!a.mean || !b.mean)
    throw MetricError("bias: empty cell for model=" + model + " category=" + category +
                      " polarity=" + std::string(to_string(polarity)));
  return {category, model, polarity, *b.mean - *a.mean};
}

// model x category x polarity grid; cells lacking data for either entity are absent.
struct BiasGrid {
  std::string variant;
  std::vector<std::string> models;
  std::vector<std::string> categories;
  std::map<std::tuple<std::string, std::string, Polarity>, double> values;  // (category, model, polarity)

  std::optional<double> get(const std::string& category, const std::string& model, Polarity p) const {
    auto it = values.find({category, model, p});
    if (it == values.end()) return std::nullopt;
    return it->second;
  }

  // Present bias values for a category, in model order.
  std::vector<double> column(const std::string& category, Polarity p) const {
    std::vector<double> out;
    for (const auto& m : models)
      if (auto v = get(category, m, p)) out.push_back(*v);
    return out;
  }
};

inline BiasGrid bias_grid(const CellStats& s, const std::string& variant) {
  BiasGrid g;
  g.variant = variant;
  g.categories = s.axes.categories;
  for (const auto& m : s.models) {
    bool any = false;
    for (const auto& c : s.axes.categories)
      for (auto p : kPolarities) {
        auto a = s.cells.find({m, variant, s.axes.entity_a, c, p});
        auto b = s.cells.find({m, variant, s.axes.entity_b, c, p});
        if (a == s.cells.end() || b == s.cells.end()) continue;
        any = true;
        if (a->second.mean && b->second.mean) g.values[{c, m, p}] = *b->second.mean - *a->second.mean;
      }
    if (any) g.models.push_back(m);
  }
  return g;
}

// Population standard deviation of bias across models.
inline double consensus(const BiasGrid& g, const std::string& category, Polarity p) {
  const auto xs = g.column(category, p);
  if (xs.size() < 2)
    throw MetricError("consensus: category " + category + " needs at least 2 models, has " +
                      std::to_string(xs.size()));
  double mean = 0, m2 = 0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  return std::sqrt(std::max(0.0, m2 / static_cast<double>(k)));
}

inline double absolute_bias(const BiasGrid& g, const std::string& category, Polarity p) {
  double total = 0;
  for (double x : g.column(category, p)) total += std::abs(x);
  return total;
}

// Sum over categories of |bias| for one model.
inline double total_absolute_bias(const BiasGrid& g, const std::string& model, Polarity p) {
  double total = 0;
  for (const auto& c : g.categories)
    if (auto v = g.get(c, model, p)) total += std::abs(*v);
  return total;
}

// ---- rankings ---------------------------------------------------------------

struct RankedCategory {
  std::string category;
  double value = 0;

  bool operator==(const RankedCategory&) const = default;
};

struct PolarityRankings {
  std::vector<RankedCategory> least_biased;   // absolute bias ascending
  std::vector<RankedCategory> most_biased;    // absolute bias descending
  std::vector<RankedCategory> consensual;     // consensus ascending
  std::vector<RankedCategory> controversial;  // consensus descending
};

struct CategoryRankings {
  PolarityRankings positive;
  PolarityRankings negative;

  const PolarityRankings& for_polarity(Polarity p) const { return p == Polarity::positive ? positive : negative; }
};

namespace detail {

inline std::vector<RankedCategory> ranked(std::vector<RankedCategory> v, bool descending) {
  std::sort(v.begin(), v.end(), [descending](const RankedCategory& a, const RankedCategory& b) {
    if (a.value != b.value) return descending ? a.value > b.value : a.value < b.value;
    return a.category < b.category;
  });
  return v;
}

}  // namespace detail

// Categories without any bias value are left out; consensus lists only hold
// categories with at least two models.
inline CategoryRankings category_rankings(const BiasGrid& g) {
  CategoryRankings out;
  for (auto p : kPolarities) {
    std::vector<RankedCategory> abs_vals, cons_vals;
    for (const auto& c : g.categories) {
      const auto col = g.column(c, p);
      if (col.empty()) continue;
      abs_vals.push_back({c, absolute_bias(g, c, p)});
      if (col.size() >= 2) cons_vals.push_back({c, consensus(g, c, p)});
    }
    auto& r = p == Polarity::positive ? out.positive : out.negative;
    r.least_biased = detail::ranked(abs_vals, false);
    r.most_biased = detail::ranked(abs_vals, true);
    r.consensual = detail::ranked(cons_vals, false);
    r.controversial = detail::ranked(cons_vals, true);
  }
  return out;
}

// ---- pairwise model differences ----------------------------------------------

struct PairDifference {
  std::string category;
  std::string model_i;
  std::string model_j;
  double combined_i = 0;
  double combined_j = 0;
  double difference = 0;  // |combined_i - combined_j|
};

// Combined bias per (category, model) = positive bias + negative bias. For
// each category, the model pair with the largest absolute difference; the
// first pair in model order wins ties.
inline std::vector<PairDifference> pairwise_model_differences(const BiasGrid& g) {
  if (g.models.size() < 2)
    throw MetricError("pairwise_model_differences: needs at least 2 models, has " + std::to_string(g.models.size()));
  std::vector<PairDifference> out;
  for (const auto& c : g.categories) {
    std::vector<std::pair<std::string, double>> combined;
    for (const auto& m : g.models) {
      auto pos = g.get(c, m, Polarity::positive);
      auto neg = g.get(c, m, Polarity::negative);
      if (pos && neg) combined.emplace_back(m, *pos + *neg);
    }
    std::optional<PairDifference> best;
    for (std::size_t i = 0; i < combined.size(); ++i)
      for (std::size_t j = i + 1; j < combined.size(); ++j) {
        const double d = std::abs(combined[i].second - combined[j].second);
        if (!best || d > best->difference)
          best = PairDifference{c, combined[i].first, combined[j].first, combined[i].second, combined[j].second, d};
      }
    if (best) out.push_back(*best);
  }
  return out;
}

// ---- aggregates -------------------------------------------------------------

enum class Weighting { category, statement };

struct GrandMean {
  std::string model;
  std::string entity;
  Polarity polarity = Polarity::positive;
  std::optional<double> mean;
  std::size_t categories = 0;  // nonempty categories contributing
  std::size_t statements = 0;
};

// Category weighting averages the per-category means; statement weighting
// pools all scores.
inline std::vector<GrandMean> aggregate_summary(const CellStats& s, const std::string& variant,
                                                Weighting w = Weighting::category) {
  std::vector<GrandMean> out;
  for (const auto& m : s.models)
    for (const auto& e : {s.axes.entity_a, s.axes.entity_b})
      for (auto p : kPolarities) {
        GrandMean g{m, e, p, std::nullopt, 0, 0};
        double sum_means = 0;
        std::int64_t sum_scores = 0;
        bool seen = false;
        for (const auto& c : s.axes.categories) {
          auto it = s.cells.find({m, variant, e, c, p});
          if (it == s.cells.end()) continue;
          seen = true;
          if (it->second.n == 0) continue;
          ++g.categories;
          g.statements += it->second.n;
          sum_means += *it->second.mean;
          sum_scores += it->second.sum;
        }
        if (!seen) continue;
        if (g.categories > 0)
          g.mean = w == Weighting::category ? sum_means / static_cast<double>(g.categories)
                                            : static_cast<double>(sum_scores) / static_cast<double>(g.statements);
        out.push_back(g);
      }
  return out;
}

// ---- prompt shift -----------------------------------------------------------

struct ShiftResult {
  std::string model;
  std::string variant;
  std::string entity;
  Polarity polarity = Polarity::positive;
  double mean_shift = 0;
  std::size_t n_pairs = 0;
  std::size_t n_dropped = 0;  // scored under only one of the two prompts
};

// Mean of score(variant) - score(baseline) over statements of the given
// entity and polarity that were scored under both prompts.
inline ShiftResult prompt_shift(const ScoreTable& t, const std::string& model, const std::string& variant,
                                const std::string& entity, Polarity polarity,
                                const std::string& baseline = std::string(kVanillaVariant)) {
  std::map<std::string, int> base, var;
  for (const auto& r : t.rows) {
    if (r.model_name != model || r.entity_id != entity || r.polarity != polarity) continue;
    if (r.variant_id == baseline) base.emplace(r.statement_id, r.score);
    else if (r.variant_id == variant) var.emplace(r.statement_id, r.score);
  }
  ShiftResult res{model, variant, entity, polarity, 0, 0, 0};
  std::int64_t total = 0;
  for (const auto& [sid, score] : var) {
    auto b = base.find(sid);
    if (b == base.end()) {
      ++res.n_dropped;
      continue;
    }
    total += score - b->second;
    ++res.n_pairs;
  }
  res.n_dropped += base.size() - res.n_pairs;
  if (res.n_pairs == 0)
    throw MetricError("prompt_shift: no statements scored under both " + variant + " and " + baseline +
                      " for model=" + model + " entity=" + entity + " polarity=" + std::string(to_string(polarity)));
  res.mean_shift = static_cast<double>(total) / static_cast<double>(res.n_pairs);
  return res;
}

// Every computable shift for non-baseline variants; empty when the baseline is absent.
inline std::vector<ShiftResult> shift_table(const ScoreTable& t, const Axes& axes,
                                            const std::string& baseline = std::string(kVanillaVariant)) {
  std::vector<ShiftResult> out;
  const auto variants = t.variants();
  if (std::find(variants.begin(), variants.end(), baseline) == variants.end()) return out;
  for (const auto& m : t.models())
    for (const auto& v : variants) {
      if (v == baseline) continue;
      for (const auto& e : {axes.entity_a, axes.entity_b})
        for (auto p : kPolarities) {
          try {
            out.push_back(prompt_shift(t, m, v, e, p, baseline));
          } catch (const MetricError&) {
          }
        }
    }
  return out;
}

}  // namespace bipolar
